//! The variable-coefficient operator `T[eps zeta] V = q1 V - mu nu d_x(q2 d_x V)`
//! and the constant-coefficient Helmholtz inverses.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::params::{ModelConstants, RegimeParams};
use crate::scalar::Real;

/// Stopping rule for [`TContext::invert`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        SolverOptions {
            tol: T::lit(1e-11),
            max_iter: 500,
        }
    }
}

/// Iteration count and achieved relative residual of one solve.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats<T> {
    pub iterations: usize,
    pub relative_residual: T,
}

/// Frozen coefficients of the elliptic operator for a given `zeta`.
#[derive(Clone, Debug)]
pub struct TContext<T: Real> {
    q1: Field<T>,
    q2: Field<T>,
    mu_nu: T,
}

impl<T: Real> TContext<T> {
    pub fn new(zeta: &Field<T>, p: &RegimeParams<T>, c: &ModelConstants<T>) -> Self {
        let (e1, e2) = (p.eps * c.kappa1, p.eps * c.kappa2);
        TContext {
            q1: zeta.map(|z| T::one() + e1 * z),
            q2: zeta.map(|z| T::one() + e2 * z),
            mu_nu: p.mu * c.nu,
        }
    }

    /// Builds the operator from explicit coefficient fields.
    pub fn from_coefficients(q1: Field<T>, q2: Field<T>, mu_nu: T) -> Result<Self> {
        if !q1.same_grid(&q2) {
            return Err(Error::GridMismatch);
        }
        Ok(TContext { q1, q2, mu_nu })
    }

    pub fn q1(&self) -> &Field<T> {
        &self.q1
    }

    pub fn q2(&self) -> &Field<T> {
        &self.q2
    }

    pub fn mu_nu(&self) -> T {
        self.mu_nu
    }

    /// `min(min q1, min q2)`, the discrete ellipticity margin.
    pub fn h02(&self) -> T {
        self.q1.min().min(self.q2.min())
    }

    pub fn ensure_elliptic(&self) -> Result<()> {
        let (a, b) = (self.q1.min(), self.q2.min());
        if a > T::zero() && b > T::zero() {
            Ok(())
        } else {
            Err(Error::H2Violated {
                q1_min: a.to_f64_lossy(),
                q2_min: b.to_f64_lossy(),
            })
        }
    }

    pub fn apply(&self, v: &Field<T>) -> Field<T> {
        assert!(self.q1.same_grid(v), "fields live on different grids");
        let flux = &self.q2 * &v.ddx();
        let diffusion = flux.ddx();
        (&self.q1 * v).add_scaled(-self.mu_nu, &diffusion)
    }

    fn precondition(&self, r: &Field<T>) -> Field<T> {
        let c = self.mu_nu;
        r.multiplier(|k| T::one() / (T::one() + c * k * k))
    }

    /// Solves `T v = f` by conjugate gradients preconditioned with the
    /// constant-coefficient inverse of symbol `1 / (1 + mu nu k^2)`.
    pub fn invert(&self, f: &Field<T>, opts: SolverOptions<T>) -> Result<(Field<T>, SolveStats<T>)> {
        self.ensure_elliptic()?;
        assert!(self.q1.same_grid(f), "fields live on different grids");
        let f_norm = f.l2_norm();
        if f_norm == T::zero() {
            return Ok((Field::zeros(f.grid()), SolveStats::default()));
        }
        let target = opts.tol * f_norm;
        let mut x = Field::zeros(f.grid());
        let mut r = f.clone();
        let mut z = self.precondition(&r);
        let mut p = z.clone();
        let mut rz = r.inner(&z);
        let mut iterations = 0;
        let mut res = f_norm;
        while iterations < opts.max_iter {
            let ap = self.apply(&p);
            let denom = p.inner(&ap);
            if !(denom > T::zero()) {
                break;
            }
            let a = rz / denom;
            x = x.add_scaled(a, &p);
            r = r.add_scaled(-a, &ap);
            iterations += 1;
            res = r.l2_norm();
            if res <= target {
                // Confirm against the true residual; the recurrence can drift.
                let true_res = (f - &self.apply(&x)).l2_norm();
                if true_res <= target {
                    return Ok((
                        x,
                        SolveStats {
                            iterations,
                            relative_residual: true_res / f_norm,
                        },
                    ));
                }
                r = f - &self.apply(&x);
                z = self.precondition(&r);
                p = z.clone();
                rz = r.inner(&z);
                continue;
            }
            z = self.precondition(&r);
            let rz_next = r.inner(&z);
            let b = rz_next / rz;
            rz = rz_next;
            p = z.add_scaled(b, &p);
        }
        let true_res = (f - &self.apply(&x)).l2_norm().max(res);
        Err(Error::NoConvergence {
            iterations,
            residual: (true_res / f_norm).to_f64_lossy(),
        })
    }
}

fn check_symbol<T: Real>(c: T, f: &Field<T>) -> Result<()> {
    let k = f.grid().k_max();
    if T::one() + c * k * k > T::zero() {
        Ok(())
    } else {
        Err(Error::SingularSymbol {
            c: c.to_f64_lossy(),
            k: k.to_f64_lossy(),
        })
    }
}

/// Applies `(1 - c d_xx)^{-1}` exactly in Fourier space.
///
/// `c` may be negative as long as `1 + c k^2 > 0` on every resolved mode.
pub fn invert_helmholtz<T: Real>(c: T, f: &Field<T>) -> Result<Field<T>> {
    if c == T::zero() {
        return Ok(f.clone());
    }
    check_symbol(c, f)?;
    Ok(f.multiplier(|k| T::one() / (T::one() + c * k * k)))
}

/// Applies `(1 - c d_xx)` exactly in Fourier space.
pub fn apply_helmholtz<T: Real>(c: T, f: &Field<T>) -> Field<T> {
    if c == T::zero() {
        return f.clone();
    }
    f.multiplier(|k| T::one() + c * k * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::params::derive_constants;
    use std::f64::consts::PI;

    fn setup(eps: f64) -> (RegimeParams<f64>, ModelConstants<f64>) {
        let p = RegimeParams::new(0.1, eps, 1.0, 0.0, 0.0).unwrap();
        let c = derive_constants(&p).unwrap();
        (p, c)
    }

    #[test]
    fn flat_interface_eigenfunction() {
        let (p, c) = setup(0.1);
        let l = 4.0;
        let g = Grid::new(l, 64).unwrap();
        let k = 2.0 * PI * 3.0 / l;
        let ctx = TContext::new(&Field::zeros(&g), &p, &c);
        let v = Field::from_fn(&g, |x: f64| (k * x).sin());
        let expected = v.scale(1.0 + p.mu * c.nu * k * k);
        assert!((&ctx.apply(&v) - &expected).max_abs() < 1e-12);
        let (back, stats) = ctx.invert(&expected, SolverOptions::default()).unwrap();
        assert!((&back - &v).max_abs() < 1e-12);
        assert_eq!(stats.iterations, 1);
    }

    #[test]
    fn constant_input_sees_only_q1() {
        let (p, c) = setup(0.1);
        let g = Grid::new(10.0, 64).unwrap();
        let zeta = Field::from_fn(&g, |x: f64| (-(x - 5.0).powi(2)).exp());
        let ctx = TContext::new(&zeta, &p, &c);
        let out = ctx.apply(&Field::constant(&g, 2.0));
        assert!((&out - &ctx.q1().scale(2.0)).max_abs() < 1e-12);
    }

    #[test]
    fn invert_constant_rhs() {
        let (p, c) = setup(0.2);
        let g = Grid::new(10.0, 128).unwrap();
        let zeta = Field::from_fn(&g, |x: f64| (2.0 * PI * x / 10.0).cos());
        let ctx = TContext::new(&zeta, &p, &c);
        let f = Field::constant(&g, 1.5);
        let (v, _) = ctx.invert(&f, SolverOptions::default()).unwrap();
        let residual = (&ctx.apply(&v) - &f).l2_norm() / f.l2_norm();
        assert!(residual <= 1e-11);
    }

    #[test]
    fn h2_violation_is_reported() {
        let (p, c) = setup(0.5);
        let g = Grid::new(10.0, 64).unwrap();
        let zeta = Field::from_fn(&g, |x: f64| (2.0 * PI * x / 10.0).cos());
        let ctx = TContext::new(&zeta, &p, &c);
        let err = ctx.invert(&zeta, SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::H2Violated { .. }));
    }

    #[test]
    fn exhausted_iterations() {
        let (p, c) = setup(0.2);
        let g = Grid::new(10.0, 64).unwrap();
        let zeta = Field::from_fn(&g, |x: f64| (2.0 * PI * x / 10.0).cos());
        let ctx = TContext::new(&zeta, &p, &c);
        let opts = SolverOptions { tol: 1e-14, max_iter: 1 };
        let err = ctx.invert(&zeta, opts).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 1, .. }));
    }

    #[test]
    fn helmholtz_examples() {
        let l = 2.0 * PI;
        let g = Grid::new(l, 64).unwrap();
        let f = Field::from_fn(&g, |x: f64| (2.0 * x).sin());
        assert_eq!(invert_helmholtz(0.0, &f).unwrap(), f);
        let out = invert_helmholtz(0.3, &f).unwrap();
        assert!((&out - &f.scale(1.0 / 2.2)).max_abs() < 1e-14);
        let rough = Field::from_fn(&g, |x: f64| (x.sin() * 3.0).exp());
        let round = apply_helmholtz(0.3, &invert_helmholtz(0.3, &rough).unwrap());
        assert!((&round - &rough).max_abs() <= 1e-12);
        // mu lambda k_max^2 >= 1 makes the negative-c symbol vanish somewhere.
        let k_max = g.k_max();
        let err = invert_helmholtz(-1.0 / (k_max * k_max), &f).unwrap_err();
        assert!(matches!(err, Error::SingularSymbol { .. }));
        assert!(invert_helmholtz(-0.5 / (k_max * k_max), &f).is_ok());
    }
}
