//! Closed-form constants evaluated in exact rational arithmetic.

use gnch_core::cl_model::{derive_cl_constants, ClParams};
use gnch_core::params::{derive_constants, RegimeParams};
use gnch_core::Error;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn params(delta: BigRational, gamma: BigRational, bo_inv: BigRational) -> RegimeParams<BigRational> {
    RegimeParams::new(q(1, 10), q(1, 10), delta, gamma, bo_inv).unwrap()
}

#[test]
fn flat_bottom_reference_point() {
    let c = derive_constants(&params(q(1, 1), q(0, 1), q(0, 1))).unwrap();
    assert_eq!(c.nu_bar, q(1, 3));
    assert_eq!(c.nu, q(1, 3));
    assert_eq!(c.alpha, q(1, 1));
    assert_eq!(c.beta, q(1, 1));
    assert_eq!(c.kappa1, q(1, 1));
    assert_eq!(c.kappa2, q(3, 1));
    assert_eq!(c.varsigma, q(1, 1));
    assert_eq!(c.kappa, q(2, 3));

    let cl = derive_cl_constants(&params(q(1, 1), q(0, 1), q(0, 1)), &ClParams { theta: q(1, 1), lambda: q(0, 1) }).unwrap();
    assert_eq!(cl.alpha1, q(3, 2));
    assert_eq!(cl.alpha2, q(0, 1));
    assert_eq!(cl.alpha3, q(0, 1));
    assert_eq!(cl.nu_t, q(1, 6));
    assert_eq!(cl.nu_x, q(0, 1));
    assert_eq!(cl.kappa1, q(1, 6));
    assert_eq!(cl.kappa2, q(1, 4));
}

#[test]
fn critical_ratio_point() {
    let p = params(q(1, 2), q(1, 4), q(0, 1));
    let c = derive_constants(&p).unwrap();
    assert_eq!(c.beta, q(0, 1));
    assert_eq!(c.kappa2, q(0, 1));
    assert_eq!(c.nu_bar, q(1, 1));
    assert_eq!(c.alpha, q(4, 3));
    assert_eq!(c.kappa1, q(-1, 3));
    assert_eq!(c.varsigma, q(8, 9));
    let cl = derive_cl_constants(&p, &ClParams { theta: q(1, 1), lambda: q(0, 1) }).unwrap();
    assert_eq!(cl.alpha1, q(0, 1));
}

#[test]
fn vanishing_nu_is_rejected() {
    let err = derive_constants(&params(q(1, 1), q(0, 1), q(1, 3))).unwrap_err();
    assert!(matches!(err, Error::NuNonpositive { .. }));
}

#[test]
fn nu_t_threshold_in_lambda() {
    // nu_t = (1/6) (1 + gamma delta) / (delta (delta + gamma)) + lambda, with theta = 1.
    let p = params(q(1, 2), q(1, 4), q(0, 1));
    let edge = -q(1, 6) * (q(1, 1) + q(1, 8)) / (q(1, 2) * q(3, 4));
    let below = ClParams { theta: q(1, 1), lambda: edge.clone() - q(1, 1000) };
    assert!(matches!(derive_cl_constants(&p, &below), Err(Error::NutNonpositive { .. })));
    let above = ClParams { theta: q(1, 1), lambda: edge + q(1, 1000) };
    assert_eq!(derive_cl_constants(&p, &above).unwrap().nu_t, q(1, 1000));
}

proptest! {
    #[test]
    fn split_of_dispersion_is_exact(
        d in 1i64..40, g in 0i64..19, b in 0i64..5, th in 1i64..8, l in 0i64..6,
    ) {
        let p = params(q(d, 8), q(g, 20), q(b, 100));
        prop_assume!(p.nu() > q(0, 1));
        let c = derive_constants(&p).unwrap();
        let cl = derive_cl_constants(&p, &ClParams { theta: q(th, 4), lambda: q(l, 10) }).unwrap();
        prop_assert_eq!(cl.nu_t.clone() + cl.nu_x.clone(), c.nu.clone() / q(2, 1));
        prop_assert_eq!(c.kappa, q(2, 3) * c.alpha);
        if p.delta.clone() * p.delta.clone() == p.gamma {
            prop_assert_eq!(cl.alpha1, q(0, 1));
            prop_assert_eq!(c.beta, q(0, 1));
        }
    }
}
