//! Dimensionless parameters, derived model constants and the pointwise
//! conditions on the interface deformation.
//!
//! The constant derivation only uses field arithmetic, so it runs on exact
//! rationals as well as on floats.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::scalar::{Coefficient, Real};

/// `(mu, eps, delta, gamma, 1/bo)`. An infinite Bond number is `bo_inv = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegimeParams<T> {
    pub mu: T,
    pub eps: T,
    pub delta: T,
    pub gamma: T,
    pub bo_inv: T,
}

impl<T: Coefficient> RegimeParams<T> {
    pub fn new(mu: T, eps: T, delta: T, gamma: T, bo_inv: T) -> Result<Self> {
        let p = RegimeParams {
            mu,
            eps,
            delta,
            gamma,
            bo_inv,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        let fail = |what: &str| Err(Error::InvalidParams(what.to_owned()));
        if !(self.mu > zero) {
            return fail("mu must be > 0");
        }
        if !(self.eps >= zero) {
            return fail("eps must be >= 0");
        }
        if !(self.delta > zero) {
            return fail("delta must be > 0");
        }
        if !(self.gamma >= zero && self.gamma < T::one()) {
            return fail("gamma must lie in [0, 1)");
        }
        if !(self.bo_inv >= zero) {
            return fail("bo_inv must be >= 0");
        }
        Ok(())
    }

    /// Same parameters with a different `(mu, eps)` pair.
    pub fn with_scales(&self, mu: T, eps: T) -> Self {
        RegimeParams {
            mu,
            eps,
            ..self.clone()
        }
    }

    /// `gamma + delta`, the ubiquitous normalization.
    pub fn gamma_plus_delta(&self) -> T {
        self.gamma.clone() + self.delta.clone()
    }

    /// `(1 + gamma delta) / (3 delta (gamma + delta))`.
    pub fn nu_bar(&self) -> T {
        let (g, d) = (self.gamma.clone(), self.delta.clone());
        (T::one() + g.clone() * d.clone()) / (T::int(3) * d.clone() * (g + d))
    }

    pub fn nu(&self) -> T {
        self.nu_bar() - self.bo_inv.clone()
    }
}

/// Bounds delimiting the shallow-water and Camassa-Holm parameter sets.
#[derive(Clone, Debug, PartialEq)]
pub struct RegimeBounds<T> {
    pub mu_max: T,
    pub m: T,
    pub delta_min: T,
    pub delta_max: T,
    pub bo_min_inv: T,
    pub nu0: T,
}

impl<T: Coefficient> Default for RegimeBounds<T> {
    fn default() -> Self {
        RegimeBounds {
            mu_max: T::one(),
            m: T::one(),
            delta_min: T::ratio(1, 10),
            delta_max: T::int(10),
            bo_min_inv: T::one(),
            nu0: T::ratio(1, 1000),
        }
    }
}

impl<T: Coefficient> RegimeBounds<T> {
    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        let all_positive = [&self.mu_max, &self.m, &self.delta_min, &self.delta_max, &self.bo_min_inv, &self.nu0]
            .iter()
            .all(|b| **b > zero);
        if !all_positive {
            return Err(Error::InvalidParams("regime bounds must be strictly positive".into()));
        }
        if !(self.delta_min < self.delta_max) {
            return Err(Error::InvalidParams("delta_min must be < delta_max".into()));
        }
        Ok(())
    }

    /// `max(mu_max, 1/delta_min, delta_max, 1/bo_min)`. Metadata only.
    pub fn m_sw(&self) -> T {
        let vals = [
            self.mu_max.clone(),
            T::one() / self.delta_min.clone(),
            self.delta_max.clone(),
            self.bo_min_inv.clone(),
        ];
        max_of(vals)
    }

    /// `max(M_SW, M, 1/nu0)`. Metadata only.
    pub fn m_ch(&self) -> T {
        max_of([self.m_sw(), self.m.clone(), T::one() / self.nu0.clone()])
    }
}

fn max_of<T: Coefficient, const N: usize>(vals: [T; N]) -> T {
    vals.into_iter()
        .reduce(|a, b| if b > a { b } else { a })
        .expect("non-empty")
}

/// Coefficients of the model, all functions of `(gamma, delta, 1/bo)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConstants<T> {
    pub nu_bar: T,
    pub nu: T,
    pub alpha: T,
    pub beta: T,
    pub kappa1: T,
    pub kappa2: T,
    pub varsigma: T,
    /// Coefficient of the `mu eps d_x((d_x v)^2)` term.
    pub kappa: T,
}

/// Derives the model constants. Fails when `nu <= 0`, where `kappa1`,
/// `kappa2` and `varsigma` are undefined.
pub fn derive_constants<T: Coefficient>(p: &RegimeParams<T>) -> Result<ModelConstants<T>> {
    let (g, d) = (p.gamma.clone(), p.delta.clone());
    let gd = g.clone() + d.clone();
    let three = T::int(3);
    let nu_bar = p.nu_bar();
    let nu = nu_bar.clone() - p.bo_inv.clone();
    if !(nu > T::zero()) {
        return Err(Error::NuNonpositive { nu: nu.approx() });
    }
    let one_plus_gd = T::one() + g.clone() * d.clone();
    let crit = d.clone() * d.clone() - g.clone();
    let alpha = (T::one() - g.clone()) / (gd.clone() * gd.clone());
    let beta = one_plus_gd * crit.clone() / (d * gd.clone() * gd.clone() * gd.clone());
    let two_beta = beta.clone() + beta.clone();
    let kappa1 = gd.clone() * (two_beta - alpha.clone()) / three.clone() / nu.clone();
    let kappa2 = gd.clone() * beta.clone() / nu.clone();
    let surface = p.bo_inv.clone() * crit / (gd.clone() * gd);
    let varsigma = ((alpha.clone() + alpha.clone() - beta.clone()) / three - surface) / nu.clone();
    let kappa = T::ratio(2, 3) * alpha.clone();
    Ok(ModelConstants {
        nu_bar,
        nu,
        alpha,
        beta,
        kappa1,
        kappa2,
        varsigma,
        kappa,
    })
}

/// Outcome of [`check_regime`].
#[derive(Clone, Debug, PartialEq)]
pub struct RegimeReport<T> {
    pub in_sw: bool,
    pub in_ch: bool,
    pub nu_margin: T,
}

/// Membership in the shallow-water and Camassa-Holm sets.
pub fn check_regime<T: Real>(p: &RegimeParams<T>, b: &RegimeBounds<T>) -> RegimeReport<T> {
    let zero = T::zero();
    let in_sw = p.mu > zero
        && p.mu <= b.mu_max
        && p.eps >= zero
        && p.eps <= T::one()
        && p.delta > b.delta_min
        && p.delta < b.delta_max
        && p.gamma >= zero
        && p.gamma < T::one()
        && p.bo_inv <= b.bo_min_inv;
    let nu = p.nu();
    let eps_ok = p.eps <= b.m * p.mu.sqrt();
    RegimeReport {
        in_sw,
        in_ch: in_sw && eps_ok && nu >= b.nu0,
        nu_margin: nu - b.nu0,
    }
}

/// Minima of the two layer depths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepthReport<T> {
    pub h1_min: T,
    pub h2_min: T,
    pub ok: bool,
}

/// Minima of the two ellipticity coefficients `1 + eps kappa_i zeta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticityReport<T> {
    pub q1_min: T,
    pub q2_min: T,
    pub ok: bool,
}

pub fn check_h1<T: Real>(zeta: &Field<T>, p: &RegimeParams<T>) -> DepthReport<T> {
    let (zmin, zmax) = (zeta.min(), zeta.max());
    let eps = p.eps;
    // h1 = 1 - eps zeta is smallest at max zeta, h2 = 1/delta + eps zeta at min zeta.
    let h1_min = T::one() - eps * zmax;
    let h2_min = T::one() / p.delta + eps * zmin;
    DepthReport {
        h1_min,
        h2_min,
        ok: h1_min > T::zero() && h2_min > T::zero(),
    }
}

pub fn check_h2<T: Real>(zeta: &Field<T>, p: &RegimeParams<T>, c: &ModelConstants<T>) -> EllipticityReport<T> {
    let (zmin, zmax) = (zeta.min(), zeta.max());
    let lowest = |kappa: T| {
        let a = p.eps * kappa;
        T::one() + (a * zmin).min(a * zmax)
    };
    let q1_min = lowest(c.kappa1);
    let q2_min = lowest(c.kappa2);
    EllipticityReport {
        q1_min,
        q2_min,
        ok: q1_min > T::zero() && q2_min > T::zero(),
    }
}
