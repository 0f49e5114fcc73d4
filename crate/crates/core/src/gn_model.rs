//! Right-hand side of the two-layer Green-Naghdi system in the
//! Camassa-Holm regime, its condensed quasilinear form, and the classical
//! Green-Naghdi operators used for consistency checks.

use std::sync::Arc;

use crate::elliptic::{SolveStats, SolverOptions, TContext};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, State};
use crate::params::{check_h1, ModelConstants, RegimeParams};
use crate::scalar::Real;

/// `f(X) = (1 - X)(1/delta + X) / (1 - X + gamma (1/delta + X))` and its first two derivatives.
#[derive(Clone, Copy, Debug)]
pub struct DepthFunction<T> {
    gamma: T,
    delta_inv: T,
}

impl<T: Real> DepthFunction<T> {
    pub fn new(p: &RegimeParams<T>) -> Self {
        DepthFunction {
            gamma: p.gamma,
            delta_inv: T::one() / p.delta,
        }
    }

    fn depths(&self, x: T) -> (T, T, T) {
        let h1 = T::one() - x;
        let h2 = self.delta_inv + x;
        (h1, h2, h1 + self.gamma * h2)
    }

    pub fn value(&self, x: T) -> T {
        let (h1, h2, d) = self.depths(x);
        h1 * h2 / d
    }

    /// `(h1^2 - gamma h2^2) / (h1 + gamma h2)^2`.
    pub fn first(&self, x: T) -> T {
        let (h1, h2, d) = self.depths(x);
        (h1 * h1 - self.gamma * h2 * h2) / (d * d)
    }

    /// Closed-form second derivative.
    pub fn second(&self, x: T) -> T {
        let (h1, h2, d) = self.depths(x);
        let two = T::lit(2.0);
        let num = h1 * h1 - self.gamma * h2 * h2;
        let num_prime = -two * (h1 + self.gamma * h2);
        let d_prime = self.gamma - T::one();
        (num_prime * d - two * num * d_prime) / (d * d * d)
    }
}

/// Composite coefficient fields evaluated at `eps zeta`.
#[derive(Clone, Debug)]
pub struct GnCoeffs<T: Real> {
    pub h1: Field<T>,
    pub h2: Field<T>,
    pub f: Field<T>,
    pub f_prime: Field<T>,
    pub q1: Field<T>,
    pub q3: Field<T>,
    pub q3_prime: Field<T>,
}

impl<T: Real> GnCoeffs<T> {
    pub fn new(zeta: &Field<T>, p: &RegimeParams<T>, c: &ModelConstants<T>) -> Self {
        let eps = p.eps;
        let df = DepthFunction::new(p);
        let half = T::lit(0.5);
        GnCoeffs {
            h1: zeta.map(|z| T::one() - eps * z),
            h2: zeta.map(|z| T::one() / p.delta + eps * z),
            f: zeta.map(|z| df.value(eps * z)),
            f_prime: zeta.map(|z| df.first(eps * z)),
            q1: zeta.map(|z| T::one() + eps * c.kappa1 * z),
            q3: zeta.map(|z| half * (df.first(eps * z) - c.varsigma)),
            q3_prime: zeta.map(|z| half * df.second(eps * z)),
        }
    }
}

/// The Green-Naghdi model with its numerical options.
#[derive(Clone, Debug)]
pub struct GnModel<T: Real> {
    pub params: RegimeParams<T>,
    pub consts: ModelConstants<T>,
    pub dealias: bool,
    pub solver: SolverOptions<T>,
}

impl<T: Real> GnModel<T> {
    pub fn new(params: RegimeParams<T>, consts: ModelConstants<T>) -> Self {
        GnModel {
            params,
            consts,
            dealias: true,
            solver: SolverOptions::default(),
        }
    }

    fn filter(&self, f: Field<T>) -> Field<T> {
        if self.dealias {
            f.dealias()
        } else {
            f
        }
    }

    fn ensure_h1(&self, zeta: &Field<T>) -> Result<()> {
        let r = check_h1(zeta, &self.params);
        if r.ok {
            Ok(())
        } else {
            Err(Error::H1Violated {
                h1_min: r.h1_min.to_f64_lossy(),
                h2_min: r.h2_min.to_f64_lossy(),
            })
        }
    }

    /// Time derivative from the direct form of the system:
    ///
    /// `zeta_t = -d_x(f(eps zeta) v)` and
    /// `v_t = -eps s v v_x - T^{-1}[(gamma+delta) q1 zeta_x + eps q1 d_x(q3 v^2) + mu eps kappa d_x(v_x^2)]`.
    pub fn rhs(&self, u: &State<T>) -> Result<(State<T>, SolveStats<T>)> {
        let (p, c) = (&self.params, &self.consts);
        self.ensure_h1(&u.zeta)?;
        let co = GnCoeffs::new(&u.zeta, p, c);
        let ctx = TContext::new(&u.zeta, p, c);
        let v = &u.v;
        let vx = v.ddx();
        let zeta_t = -&self.filter(&co.f * v).ddx();

        let gd = p.gamma_plus_delta();
        let q3v2 = self.filter(&co.q3 * &(v * v));
        let vx2 = self.filter(&vx * &vx);
        let forcing = (&co.q1 * &u.zeta.ddx())
            .scale(gd)
            .add_scaled(p.eps, &(&co.q1 * &q3v2.ddx()))
            .add_scaled(p.mu * p.eps * c.kappa, &vx2.ddx());
        let (w, stats) = ctx.invert(&forcing, self.solver)?;
        let advect = self.filter(v * &vx);
        let v_t = (-&w).add_scaled(-p.eps * c.varsigma, &advect);
        Ok((State { zeta: zeta_t, v: v_t }, stats))
    }

    /// Time derivative from the condensed form `U_t = -(A0[U] + A1[U]) U_x`.
    ///
    /// Independent of [`GnModel::rhs`]: the products are expanded through the
    /// chain rule instead of being differentiated as a whole.
    pub fn rhs_condensed(&self, u: &State<T>) -> Result<(State<T>, SolveStats<T>)> {
        let (p, c) = (&self.params, &self.consts);
        self.ensure_h1(&u.zeta)?;
        let co = GnCoeffs::new(&u.zeta, p, c);
        let ctx = TContext::new(&u.zeta, p, c);
        let (zeta, v) = (&u.zeta, &u.v);
        let (zx, vx) = (zeta.ddx(), v.ddx());
        let eps = p.eps;
        let two = T::lit(2.0);

        // First row: eps f'(eps zeta) v zeta_x + f(eps zeta) v_x.
        let row1 = self
            .filter(&(&co.f_prime * v) * &zx)
            .scale(eps)
            .add_scaled(T::one(), &self.filter(&co.f * &vx));

        // Q0 zeta_x + eps Qfrak[v] v_x + eps^2 Q1 zeta_x, with
        // Qfrak f = 2 q1 q3 v f + mu kappa d_x(f v_x) and Q1 = q1 q3' v^2.
        let q0_term = co.q1.scale(p.gamma_plus_delta());
        let mut forcing = &q0_term * &zx;
        let qfrak = (&co.q1 * &self.filter(&(&co.q3 * v) * &vx)).scale(two);
        let qfrak = qfrak.add_scaled(p.mu * c.kappa, &self.filter(&vx * &vx).ddx());
        forcing = forcing.add_scaled(eps, &qfrak);
        let q1_term = &co.q1 * &self.filter(&(&(&co.q3_prime * v) * v) * &zx);
        forcing = forcing.add_scaled(eps * eps, &q1_term);
        let (w, stats) = ctx.invert(&forcing, self.solver)?;
        let row2 = w.add_scaled(eps * c.varsigma, &self.filter(v * &vx));
        Ok((
            State {
                zeta: -&row1,
                v: -&row2,
            },
            stats,
        ))
    }

    /// Advective speed bound `1 + eps max|v| max(|s|, sup|f'|)`.
    pub fn max_speed(&self, u: &State<T>) -> T {
        let p = &self.params;
        let df = DepthFunction::new(p);
        let fp = u
            .zeta
            .values()
            .iter()
            .fold(T::zero(), |m, &z| m.max(df.first(p.eps * z).abs()));
        T::one() + p.eps * u.v.max_abs() * fp.max(self.consts.varsigma.abs())
    }
}

/// Linear phase speed `c(k) = 1 / sqrt(1 + mu nu k^2)` about the rest state.
pub fn linear_dispersion<T: Real>(k: T, p: &RegimeParams<T>, c: &ModelConstants<T>) -> T {
    T::one() / (T::one() + p.mu * c.nu * k * k).sqrt()
}

/// Right-moving linear eigenmode `zeta = a cos(k x)`, `v = (gamma+delta) c(k) a cos(k x)`
/// for the `mode`-th grid wavenumber.
pub fn right_moving_mode<T: Real>(
    grid: &Arc<Grid<T>>,
    mode: usize,
    amplitude: T,
    p: &RegimeParams<T>,
    c: &ModelConstants<T>,
) -> State<T> {
    let k = T::lit(2.0) * T::PI() * T::count(mode) / grid.length();
    let speed = linear_dispersion(k, p, c);
    let zeta = Field::from_fn(grid, |x| amplitude * (k * x).cos());
    let v = zeta.scale(p.gamma_plus_delta() * speed);
    State { zeta, v }
}

fn mean_depth_ratio<T: Real>(h1: &Field<T>, h2: &Field<T>, gamma: T) -> (Field<T>, Field<T>) {
    let denom = h1.zip_map(h2, |a, b| a + gamma * b);
    let a = h1.zip_map(&denom, |x, d| x / d);
    let b = h2.zip_map(&denom, |x, d| x / d);
    (a, b)
}

/// Inner terms `h2^3 d_x(h1 V / D)` and `h1^3 d_x(h2 V / D)` with `D = h1 + gamma h2`.
fn inner_fluxes<T: Real>(h1: &Field<T>, h2: &Field<T>, v: &Field<T>, gamma: T) -> (Field<T>, Field<T>, Field<T>, Field<T>) {
    let (r1, r2) = mean_depth_ratio(h1, h2, gamma);
    let d1 = (&r1 * v).ddx();
    let d2 = (&r2 * v).ddx();
    let upper = &h2.map(|h| h * h * h) * &d1;
    let lower = &h1.map(|h| h * h * h) * &d2;
    (upper, lower, d1, d2)
}

/// Classical Green-Naghdi dispersion operator `Q[h1, h2] V`.
pub fn classical_q<T: Real>(h1: &Field<T>, h2: &Field<T>, v: &Field<T>, gamma: T) -> Field<T> {
    let (upper, lower, _, _) = inner_fluxes(h1, h2, v, gamma);
    let sum = (h1 * &upper.ddx()).add_scaled(gamma, &(h2 * &lower.ddx()));
    let third = T::lit(1.0 / 3.0);
    sum.zip_map(&(h1 * h2), |s, hh| -third * s / hh)
}

/// Classical Green-Naghdi nonlinear operator `R[h1, h2] V`.
pub fn classical_r<T: Real>(h1: &Field<T>, h2: &Field<T>, v: &Field<T>, gamma: T) -> Field<T> {
    let (upper, lower, d1, d2) = inner_fluxes(h1, h2, v, gamma);
    let a = h2 * &d1;
    let b = h1 * &d2;
    let squares = (&a * &a).add_scaled(-gamma, &(&b * &b)).scale(T::lit(0.5));
    let ratio_up = h1.zip_map(h2, |x, y| x / y);
    let ratio_dn = h2.zip_map(h1, |x, y| x / y);
    let bracket = (&ratio_up * &upper.ddx()).add_scaled(-gamma, &(&ratio_dn * &lower.ddx()));
    let denom = h1.zip_map(h2, |x, y| x + gamma * y);
    let pref = v.zip_map(&denom, |x, d| x / (T::lit(3.0) * d));
    squares.add_scaled(T::one(), &(&pref * &bracket))
}

fn layer_depths<T: Real>(zeta: &Field<T>, p: &RegimeParams<T>) -> (Field<T>, Field<T>) {
    (
        zeta.map(|z| T::one() - p.eps * z),
        zeta.map(|z| T::one() / p.delta + p.eps * z),
    )
}

/// `|Q v - expansion|_{H^s}` with the first-order expansion
/// `-nu_bar v_xx - eps (gamma+delta)/3 ((beta-alpha) v zeta_xx + (alpha+2beta) (zeta v_x)_x - beta zeta v_xx)`.
pub fn expansion_residual_q<T: Real>(
    zeta: &Field<T>,
    v: &Field<T>,
    p: &RegimeParams<T>,
    c: &ModelConstants<T>,
    s: T,
) -> T {
    let (h1, h2) = layer_depths(zeta, p);
    let exact = classical_q(&h1, &h2, v, p.gamma);
    let vxx = v.ddx2();
    let bracket = (v * &zeta.ddx2())
        .scale(c.beta - c.alpha)
        .add_scaled(c.alpha + T::lit(2.0) * c.beta, &(zeta * &v.ddx()).ddx())
        .add_scaled(-c.beta, &(zeta * &vxx));
    let approx = vxx
        .scale(-c.nu_bar)
        .add_scaled(-p.eps * p.gamma_plus_delta() / T::lit(3.0), &bracket);
    (&exact - &approx).sobolev_norm(s)
}

/// `|R v - alpha (v_x^2 / 2 + v v_xx / 3)|_{H^s}`.
pub fn expansion_residual_r<T: Real>(
    zeta: &Field<T>,
    v: &Field<T>,
    p: &RegimeParams<T>,
    c: &ModelConstants<T>,
    s: T,
) -> T {
    let (h1, h2) = layer_depths(zeta, p);
    let exact = classical_r(&h1, &h2, v, p.gamma);
    let vx = v.ddx();
    let approx = (&vx * &vx)
        .scale(T::lit(0.5))
        .add_scaled(T::lit(1.0 / 3.0), &(v * &v.ddx2()))
        .scale(c.alpha);
    (&exact - &approx).sobolev_norm(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_constants;
    use std::f64::consts::PI;

    fn model(mu: f64, eps: f64, delta: f64, gamma: f64) -> GnModel<f64> {
        let p = RegimeParams::new(mu, eps, delta, gamma, 0.0).unwrap();
        let c = derive_constants(&p).unwrap();
        GnModel::new(p, c)
    }

    #[test]
    fn depth_function_derivatives() {
        let p = RegimeParams::new(0.1, 0.1, 0.7, 0.3, 0.0).unwrap();
        let df = DepthFunction::new(&p);
        for &x in &[-0.3f64, 0.0, 0.2] {
            let h = 1e-5;
            let fd1 = (df.value(x + h) - df.value(x - h)) / (2.0 * h);
            let fd2 = (df.first(x + h) - df.first(x - h)) / (2.0 * h);
            assert!((fd1 - df.first(x)).abs() < 1e-8);
            assert!((fd2 - df.second(x)).abs() < 1e-8);
        }
        // f(0) = 1 / (gamma + delta)
        assert!((df.value(0.0f64) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rest_state_is_fixed() {
        let m = model(0.1, 0.1, 1.0, 0.0);
        let g = Grid::new(10.0, 64).unwrap();
        let (d, _) = m.rhs(&State::zeros(&g)).unwrap();
        assert_eq!(d.zeta.max_abs(), 0.0);
        assert_eq!(d.v.max_abs(), 0.0);
    }

    #[test]
    fn linear_limit_on_single_mode() {
        let m = model(0.1, 0.0, 1.0, 0.0);
        let l = 1.0;
        let g = Grid::new(l, 32).unwrap();
        let k = 2.0 * PI * 2.0 / l;
        let u = State::new(
            Field::from_fn(&g, |x: f64| (k * x).cos()),
            Field::from_fn(&g, |x: f64| 0.5 * (k * x).sin()),
        )
        .unwrap();
        let (d, _) = m.rhs(&u).unwrap();
        let nu = m.consts.nu;
        // zeta_t = -f(0) v_x, v_t = -(gamma+delta) zeta_x / (1 + mu nu k^2)
        let zt = Field::from_fn(&g, |x: f64| -0.5 * k * (k * x).cos());
        let vt = Field::from_fn(&g, |x: f64| k * (k * x).sin() / (1.0 + 0.1 * nu * k * k));
        assert!((&d.zeta - &zt).max_abs() < 1e-11);
        assert!((&d.v - &vt).max_abs() < 1e-11);
    }

    #[test]
    fn dispersion_examples() {
        let p = RegimeParams::new(0.1, 0.1, 1.0, 0.0, 0.0).unwrap();
        let c = derive_constants(&p).unwrap();
        assert_eq!(linear_dispersion(0.0, &p, &c), 1.0);
        let v = linear_dispersion(2.0 * PI, &p, &c);
        assert!((v - 1.0 / (1.0f64 + 0.1 / 3.0 * 4.0 * PI * PI).sqrt()).abs() < 1e-15);
        assert!((v - 0.6572).abs() < 1e-4);
        let tiny = p.with_scales(1e-12, 0.1);
        assert!((linear_dispersion(2.0 * PI, &tiny, &c) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn classical_operators_vanish_on_zero() {
        let g = Grid::new(10.0, 64).unwrap();
        let h1 = Field::from_fn(&g, |x: f64| 1.0 - 0.1 * (x * 0.6283).cos());
        let h2 = Field::from_fn(&g, |x: f64| 1.0 + 0.1 * (x * 0.6283).cos());
        let z = Field::zeros(&g);
        assert_eq!(classical_q(&h1, &h2, &z, 0.3).max_abs(), 0.0);
        assert_eq!(classical_r(&h1, &h2, &z, 0.3).max_abs(), 0.0);
    }

    #[test]
    fn classical_q_flat_interface() {
        let g = Grid::new(10.0, 64).unwrap();
        let (gamma, delta) = (0.3, 0.7);
        let h1 = Field::constant(&g, 1.0);
        let h2 = Field::constant(&g, 1.0 / delta);
        let v = Field::from_fn(&g, |x: f64| (2.0 * PI * x / 10.0).sin());
        let nu_bar = (1.0 + gamma * delta) / (3.0 * delta * (gamma + delta));
        let q = classical_q(&h1, &h2, &v, gamma);
        assert!((&q - &v.ddx2().scale(-nu_bar)).max_abs() < 1e-13);
    }

    #[test]
    fn classical_r_symmetric_layers_cancel() {
        let g = Grid::new(10.0, 64).unwrap();
        let one = Field::constant(&g, 1.0);
        let v = Field::from_fn(&g, |x: f64| (2.0 * PI * x / 10.0).sin() + 0.3);
        assert!(classical_r(&one, &one, &v, 1.0).max_abs() < 1e-15);
    }

    #[test]
    fn expansion_residuals_vanish_without_nonlinearity() {
        let p = RegimeParams::new(0.1, 0.0, 0.8, 0.2, 0.0).unwrap();
        let c = derive_constants(&p).unwrap();
        let g = Grid::new(20.0, 128).unwrap();
        let zeta = Field::from_fn(&g, |x: f64| (-(x - 10.0).powi(2)).exp());
        let v = Field::from_fn(&g, |x: f64| (-(x - 9.0).powi(2) / 2.0).exp());
        assert!(expansion_residual_q(&zeta, &v, &p, &c, 2.0) < 1e-11);
    }

    #[test]
    fn mean_of_zeta_rate_vanishes() {
        let m = model(0.1, 0.1, 1.0, 0.0);
        let g = Grid::new(20.0, 128).unwrap();
        let zeta = Field::from_fn(&g, |x: f64| (-(x - 10.0).powi(2)).exp());
        let v = zeta.scale(0.8);
        let (d, _) = m.rhs(&State::new(zeta, v).unwrap()).unwrap();
        assert!(d.zeta.mean().abs() < 1e-16);
    }

    #[test]
    fn depth_violation_is_reported() {
        let m = model(0.1, 0.5, 1.0, 0.0);
        let g = Grid::new(10.0, 64).unwrap();
        let u = State::new(Field::constant(&g, 3.0), Field::zeros(&g)).unwrap();
        assert!(matches!(m.rhs(&u).unwrap_err(), Error::H1Violated { .. }));
    }
}
