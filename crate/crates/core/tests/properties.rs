//! Randomized invariants of the spectral kernels, the elliptic operator and the config format.

use std::f64::consts::PI;

use gnch_core::cl_model::{cl_init_split, cl_reconstruct, ClParams};
use gnch_core::diagnostics::log_log_slope;
use gnch_core::elliptic::{apply_helmholtz, invert_helmholtz, SolverOptions, TContext};
use gnch_core::harness::{Experiment, ExperimentConfig};
use gnch_core::params::{derive_constants, RegimeParams};
use gnch_core::{Field64, Grid, Grid64};
use proptest::prelude::*;
use std::sync::Arc;

fn grid() -> Arc<Grid64> {
    Grid::new(2.0 * PI, 64).unwrap()
}

/// Trigonometric polynomial with the given (cos, sin) coefficients on modes 1, 2, ...
fn trig(g: &Arc<Grid64>, coeffs: &[(f64, f64)]) -> Field64 {
    Field64::from_fn(g, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(j, &(a, b))| {
                let k = (j + 1) as f64;
                a * (k * x).cos() + b * (k * x).sin()
            })
            .sum::<f64>()
    })
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_round_trip(c in coeffs(), a in -10.0..10.0f64) {
        let f = trig(&grid(), &c);
        let back = f.shift(a).shift(-a);
        prop_assert!((&back - &f).max_abs() <= 1e-12 * (1.0 + f.max_abs()));
    }

    #[test]
    fn derivative_has_zero_mean_and_is_skew(c in coeffs(), d in coeffs()) {
        let g = grid();
        let (f, h) = (trig(&g, &c), trig(&g, &d));
        prop_assert!(f.ddx().mean().abs() <= 1e-13);
        let skew = f.ddx().inner(&h) + f.inner(&h.ddx());
        prop_assert!(skew.abs() <= 1e-11);
    }

    #[test]
    fn helmholtz_inverse(c in coeffs(), k in 0.0..2.0f64) {
        let f = trig(&grid(), &c);
        let back = invert_helmholtz(k, &apply_helmholtz(k, &f)).unwrap();
        prop_assert!((&back - &f).max_abs() <= 1e-12 * (1.0 + f.max_abs()));
    }

    #[test]
    fn elliptic_operator_symmetric_positive_and_invertible(
        z in coeffs(), u in coeffs(), w in coeffs(),
        amp in 0.0..0.5f64, mu in 0.01..1.0f64, delta in 0.3..3.0f64, gamma in 0.0..0.9f64,
    ) {
        let g = grid();
        let p = RegimeParams::new(mu, 0.5, delta, gamma, 0.0).unwrap();
        let c = derive_constants(&p).unwrap();
        let zeta = trig(&g, &z);
        let kmax = c.kappa1.abs().max(c.kappa2.abs()).max(1.0);
        let zeta = zeta.scale(amp / (p.eps * kmax * zeta.max_abs().max(1e-12)));
        let t = TContext::new(&zeta, &p, &c);
        let (u, w) = (trig(&g, &u), trig(&g, &w));
        let (tu, tw) = (t.apply(&u), t.apply(&w));
        let defect = (tu.inner(&w) - u.inner(&tw)).abs();
        prop_assert!(defect <= 1e-12 * tu.l2_norm().max(tw.l2_norm()) * u.l2_norm().max(w.l2_norm()));
        prop_assert!(tu.inner(&u) >= t.h02() * c.nu.min(1.0) * u.h1mu_norm(mu).powi(2) - 1e-10);
        let (back, _) = t.invert(&tu, SolverOptions { tol: 1e-12, max_iter: 400 }).unwrap();
        prop_assert!((&back - &u).l2_norm() <= 1e-9 * u.l2_norm());
    }

    // Both lifts (1 -+ mu lambda k^2) stay invertible on the grid when mu |lambda| k_max^2 < 1.
    #[test]
    fn decoupled_split_reconstructs_at_time_zero(z in coeffs(), v in coeffs(), lambda in -0.009..0.009f64) {
        let g = grid();
        let p = RegimeParams::new(0.1, 0.1, 0.8, 0.2, 0.0).unwrap();
        let clp = ClParams { theta: 1.0, lambda };
        let (zeta, vel) = (trig(&g, &z), trig(&g, &v));
        let s = cl_init_split(&zeta, &vel, &p, &clp).unwrap();
        let u = cl_reconstruct(&s, &p, &clp).unwrap();
        prop_assert!((&u.zeta - &zeta).max_abs() <= 1e-12 * (1.0 + zeta.max_abs()));
        prop_assert!((&u.v - &vel).max_abs() <= 1e-12 * (1.0 + vel.max_abs()));
    }

    #[test]
    fn power_law_slope_is_recovered(b in -3.0..3.0f64, a in 0.1..10.0f64) {
        let xs = [0.1, 0.05, 0.025, 0.0125];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| a * x.powf(b)).collect();
        prop_assert!((log_log_slope(&xs, &ys).unwrap() - b).abs() <= 1e-10);
    }

    #[test]
    fn config_echo_round_trips(
        idx in 0usize..10, n in 8usize..64, length in 1.0..100.0f64, eps in 0.0..1.0f64, tol in 1e-14..1e-6f64,
    ) {
        let e = Experiment::ALL[idx];
        let mut cfg = ExperimentConfig::defaults(e);
        cfg.set("grid.n", &(2 * n).to_string()).unwrap();
        cfg.set("grid.length", &length.to_string()).unwrap();
        cfg.set("regime.eps", &eps.to_string()).unwrap();
        cfg.set("solver.tol", &tol.to_string()).unwrap();
        let again = ExperimentConfig::parse_str(&cfg.echo_text()).unwrap();
        prop_assert_eq!(again, cfg);
    }
}
