//! Decoupled approximation: two unidirectional BBM-type scalar equations
//! whose solutions, translated at unit speed, approximate the coupled
//! Green-Naghdi flow.
//!
//! The evolution runs on the regularized unknowns `v±^λ`; the physical
//! components `v± = (1 ± mu lambda d_xx)^{-1} v±^λ` are only formed at
//! reconstruction time.

use crate::elliptic::{apply_helmholtz, invert_helmholtz};
use crate::error::{Error, Result};
use crate::grid::{Field, State};
use crate::params::RegimeParams;
use crate::scalar::{Coefficient, Real};

/// Free parameters `(theta, lambda)` of the model family.
#[derive(Clone, Debug, PartialEq)]
pub struct ClParams<T> {
    pub theta: T,
    pub lambda: T,
}

impl<T: Coefficient> Default for ClParams<T> {
    fn default() -> Self {
        ClParams {
            theta: T::one(),
            lambda: T::zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClConstants<T> {
    pub alpha1: T,
    pub alpha2: T,
    pub alpha3: T,
    pub nu_t: T,
    pub nu_x: T,
    pub kappa1: T,
    pub kappa2: T,
}

/// Closed-form coefficients of the scalar equations. Fails unless `nu_t > 0`.
pub fn derive_cl_constants<T: Coefficient>(p: &RegimeParams<T>, clp: &ClParams<T>) -> Result<ClConstants<T>> {
    let (g, d) = (p.gamma.clone(), p.delta.clone());
    let gd = g.clone() + d.clone();
    let crit = d.clone() * d.clone() - g.clone();
    let one_plus_gd = T::one() + g.clone() * d.clone();
    let d_plus_1 = d.clone() + T::one();
    let (theta, lambda) = (clp.theta.clone(), clp.lambda.clone());

    let alpha1 = T::ratio(3, 2) * crit.clone() / gd.clone();
    let alpha2 = -T::int(3) * g.clone() * d.clone() * d_plus_1.clone() * d_plus_1.clone() / (gd.clone() * gd.clone());
    let alpha3 = -T::int(5) * d.clone() * d.clone() * d_plus_1.clone() * d_plus_1 * g.clone() * (T::one() - g.clone())
        / (gd.clone() * gd.clone() * gd.clone());

    let depth_ratio = one_plus_gd.clone() / (d.clone() * gd.clone());
    let six = T::int(6);
    let nu_t = theta.clone() / six.clone() * depth_ratio.clone() + lambda.clone();
    let nu_x = (T::one() - theta.clone()) / six * depth_ratio - p.bo_inv.clone() / T::int(2) - lambda.clone();

    let shared = one_plus_gd * crit / (T::int(3) * d * gd.clone() * gd.clone())
        * (T::one() + (T::one() - theta) / T::int(4));
    let kappa1 = shared.clone() - (T::one() - g.clone()) / (T::int(6) * gd.clone()) + lambda * alpha1.clone();
    let kappa2 = shared - (T::one() - g) / (T::int(12) * gd);

    if !(nu_t > T::zero()) {
        return Err(Error::NutNonpositive { nu_t: nu_t.approx() });
    }
    Ok(ClConstants {
        alpha1,
        alpha2,
        alpha3,
        nu_t,
        nu_x,
        kappa1,
        kappa2,
    })
}

/// Propagation direction of one scalar component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Right,
    Left,
}

impl Direction {
    pub fn sign<T: Real>(self) -> T {
        match self {
            Direction::Right => T::one(),
            Direction::Left => -T::one(),
        }
    }
}

/// Which time derivative the BBM term `-mu nu_t d_xx d_t v` refers to.
///
/// The scalar equations are posed in frames translating at unit speed. With
/// [`BbmFrame::Laboratory`] the regularizing term carries the laboratory time
/// derivative, which in the moving frame adds `mu nu_t d_xxx v` to the
/// dispersion; the linear phase speed is then `1 - mu (nu_x + nu_t) k^2 + O(mu^2)`,
/// matching the coupled model because `nu_x + nu_t = nu / 2`. With
/// [`BbmFrame::Moving`] the term is taken at face value in the moving frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BbmFrame {
    #[default]
    Laboratory,
    Moving,
}

impl BbmFrame {
    /// Coefficient of `mu d_xxx v` in the moving frame.
    pub fn dispersion<T: Real>(self, clc: &ClConstants<T>) -> T {
        match self {
            BbmFrame::Laboratory => clc.nu_x + clc.nu_t,
            BbmFrame::Moving => clc.nu_x,
        }
    }
}

/// The two regularized components and the current time.
#[derive(Clone, Debug, PartialEq)]
pub struct ClState<T: Real> {
    pub plus: Field<T>,
    pub minus: Field<T>,
    pub t: T,
}

impl<T: Real> ClState<T> {
    pub fn add_scaled(&self, a: T, d: &Self) -> Self {
        ClState {
            plus: self.plus.add_scaled(a, &d.plus),
            minus: self.minus.add_scaled(a, &d.minus),
            t: self.t + a * d.t,
        }
    }
}

fn filtered<T: Real>(f: Field<T>, dealias: bool) -> Field<T> {
    if dealias {
        f.dealias()
    } else {
        f
    }
}

/// `d_t v^λ` for one direction, in the frame translating with that direction.
///
/// Every flux is written as an exact derivative (`v v_x = (v^2/2)_x` and so on),
/// so the spatial mean of `v^λ` is invariant.
pub fn cl_rhs<T: Real>(
    vlam: &Field<T>,
    direction: Direction,
    p: &RegimeParams<T>,
    clc: &ClConstants<T>,
    frame: BbmFrame,
    dealias: bool,
) -> Result<Field<T>> {
    if !(clc.nu_t > T::zero()) {
        return Err(Error::NutNonpositive {
            nu_t: clc.nu_t.to_f64_lossy(),
        });
    }
    let (eps, mu) = (p.eps, p.mu);
    let v = vlam;
    let v2 = v * v;
    let v3 = &v2 * v;
    let v4 = &v2 * &v2;
    let vx = v.ddx();
    let flux = v2
        .scale(eps * clc.alpha1 / T::lit(2.0))
        .add_scaled(eps * eps * clc.alpha2 / T::lit(3.0), &v3)
        .add_scaled(eps * eps * eps * clc.alpha3 / T::lit(4.0), &v4)
        .add_scaled(mu * eps * clc.kappa1, &(v * &v.ddx2()))
        .add_scaled(mu * eps * clc.kappa2, &(&vx * &vx));
    let forcing = filtered(flux, dealias)
        .ddx()
        .add_scaled(mu * frame.dispersion(clc), &v.ddx3());
    let rate = invert_helmholtz(mu * clc.nu_t, &forcing)?;
    Ok(rate.scale(-direction.sign::<T>()))
}

/// The decoupled model with its numerical options.
#[derive(Clone, Debug)]
pub struct ClModel<T: Real> {
    pub params: RegimeParams<T>,
    pub cl_params: ClParams<T>,
    pub consts: ClConstants<T>,
    pub frame: BbmFrame,
    pub dealias: bool,
}

impl<T: Real> ClModel<T> {
    pub fn new(params: RegimeParams<T>, cl_params: ClParams<T>) -> Result<Self> {
        let consts = derive_cl_constants(&params, &cl_params)?;
        Ok(ClModel {
            params,
            cl_params,
            consts,
            frame: BbmFrame::default(),
            dealias: true,
        })
    }

    pub fn rhs(&self, s: &ClState<T>) -> Result<ClState<T>> {
        Ok(ClState {
            plus: cl_rhs(&s.plus, Direction::Right, &self.params, &self.consts, self.frame, self.dealias)?,
            minus: cl_rhs(&s.minus, Direction::Left, &self.params, &self.consts, self.frame, self.dealias)?,
            t: T::one(),
        })
    }

    /// Speed bound in the moving frames: the dispersive limit `|nu_disp| / nu_t`
    /// plus the nonlinear advection speeds.
    pub fn max_speed(&self, s: &ClState<T>) -> T {
        let c = &self.consts;
        let e = self.params.eps;
        let a = s.plus.max_abs().max(s.minus.max_abs());
        self.frame.dispersion(c).abs() / c.nu_t + e * c.alpha1.abs() * a + e * e * c.alpha2.abs() * a * a + e * e * e * c.alpha3.abs() * a * a * a
    }

    pub fn init(&self, zeta0: &Field<T>, v0: &Field<T>) -> Result<ClState<T>> {
        cl_init_split(zeta0, v0, &self.params, &self.cl_params)
    }

    pub fn reconstruct(&self, s: &ClState<T>) -> Result<State<T>> {
        cl_reconstruct(s, &self.params, &self.cl_params)
    }
}

/// Splits initial data into `v± = (zeta0 ± v0/(gamma+delta))/2` and lifts them to
/// `v±^λ = (1 ± mu lambda d_xx) v±`.
pub fn cl_init_split<T: Real>(
    zeta0: &Field<T>,
    v0: &Field<T>,
    p: &RegimeParams<T>,
    clp: &ClParams<T>,
) -> Result<ClState<T>> {
    if !zeta0.same_grid(v0) {
        return Err(Error::GridMismatch);
    }
    let half = T::lit(0.5);
    let scaled = v0.scale(T::one() / p.gamma_plus_delta());
    let plus = zeta0.add_scaled(T::one(), &scaled).scale(half);
    let minus = zeta0.add_scaled(-T::one(), &scaled).scale(half);
    let c = p.mu * clp.lambda;
    // The lifted data must be recoverable, so the inverse symbols are checked here.
    invert_helmholtz(-c, &plus)?;
    invert_helmholtz(c, &minus)?;
    Ok(ClState {
        plus: apply_helmholtz(-c, &plus),
        minus: apply_helmholtz(c, &minus),
        t: T::zero(),
    })
}

/// `U_CL = (v+(t, x-t) + v-(t, x+t), (gamma+delta)(v+(t, x-t) - v-(t, x+t)))`.
pub fn cl_reconstruct<T: Real>(s: &ClState<T>, p: &RegimeParams<T>, clp: &ClParams<T>) -> Result<State<T>> {
    let c = p.mu * clp.lambda;
    let plus = invert_helmholtz(-c, &s.plus)?.shift(s.t);
    let minus = invert_helmholtz(c, &s.minus)?.shift(-s.t);
    let zeta = &plus + &minus;
    let v = (&plus - &minus).scale(p.gamma_plus_delta());
    State::new(zeta, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn params(gamma: f64, delta: f64, eps: f64) -> RegimeParams<f64> {
        RegimeParams::new(0.01, eps, delta, gamma, 0.0).unwrap()
    }

    #[test]
    fn symmetric_layers_constants() {
        let c = derive_cl_constants(&params(0.0, 1.0, 0.1), &ClParams::default()).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-14;
        assert!(close(c.alpha1, 1.5));
        assert!(close(c.alpha2, 0.0));
        assert!(close(c.alpha3, 0.0));
        assert!(close(c.nu_t, 1.0 / 6.0));
        assert!(close(c.nu_x, 0.0));
        assert!(close(c.kappa1, 1.0 / 6.0));
        assert!(close(c.kappa2, 0.25));
    }

    #[test]
    fn critical_ratio_removes_quadratic_term() {
        let c = derive_cl_constants(&params(0.25, 0.5, 0.1), &ClParams::default()).unwrap();
        assert_eq!(c.alpha1, 0.0);
    }

    #[test]
    fn negative_nu_t_is_rejected() {
        let (gamma, delta) = (0.2, 0.9);
        let p = params(gamma, delta, 0.1);
        let lambda = -(1.0 + gamma * delta) / (6.0 * delta * (delta + gamma)) - 1e-3;
        let err = derive_cl_constants(&p, &ClParams { theta: 1.0, lambda }).unwrap_err();
        assert!(matches!(err, Error::NutNonpositive { .. }));
    }

    #[test]
    fn zero_is_stationary() {
        let p = params(0.0, 1.0, 0.1);
        let m = ClModel::new(p, ClParams::default()).unwrap();
        let g = Grid::new(10.0, 64).unwrap();
        let z = Field::zeros(&g);
        let s = m.init(&z, &z).unwrap();
        assert_eq!(s.plus.max_abs(), 0.0);
        let d = m.rhs(&s).unwrap();
        assert_eq!(d.plus.max_abs(), 0.0);
        assert_eq!(d.minus.max_abs(), 0.0);
    }

    #[test]
    fn right_moving_data_has_no_left_part() {
        let p = params(0.3, 0.8, 0.1);
        let g = Grid::new(10.0, 64).unwrap();
        let zeta = Field::from_fn(&g, |x: f64| (-(x - 5.0).powi(2)).exp());
        let v = zeta.scale(p.gamma_plus_delta());
        let s = cl_init_split(&zeta, &v, &p, &ClParams::default()).unwrap();
        assert!(s.minus.max_abs() < 1e-16);
        assert!((&s.plus - &zeta).max_abs() < 1e-15);
    }

    #[test]
    fn split_reconstruct_round_trip() {
        let p = params(0.3, 0.8, 0.1);
        let g = Grid::new(10.0, 128).unwrap();
        let zeta = Field::from_fn(&g, |x: f64| (-(x - 5.0).powi(2)).exp());
        let v = Field::from_fn(&g, |x: f64| 0.3 * (2.0 * PI * x / 10.0).sin());
        for lambda in [0.0, 0.05, -0.05] {
            let clp = ClParams { theta: 1.0, lambda };
            let s = cl_init_split(&zeta, &v, &p, &clp).unwrap();
            if lambda == 0.0 {
                let plain = zeta.add_scaled(1.0 / p.gamma_plus_delta(), &v).scale(0.5);
                assert!((&s.plus - &plain).max_abs() < 1e-15);
            }
            let u = cl_reconstruct(&s, &p, &clp).unwrap();
            assert!((&u.zeta - &zeta).max_abs() <= 1e-12);
            assert!((&u.v - &v).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn reconstruction_is_periodic_in_time() {
        let p = params(0.3, 0.8, 0.1);
        let l = 10.0;
        let g = Grid::new(l, 128).unwrap();
        let zeta = Field::from_fn(&g, |x: f64| (-(x - 3.0).powi(2)).exp());
        let v = Field::from_fn(&g, |x: f64| (-(x - 6.0).powi(2)).exp());
        let clp = ClParams::default();
        let s0 = cl_init_split(&zeta, &v, &p, &clp).unwrap();
        let s1 = ClState { t: l, ..s0.clone() };
        let a = cl_reconstruct(&s0, &p, &clp).unwrap();
        let b = cl_reconstruct(&s1, &p, &clp).unwrap();
        assert!((&a.zeta - &b.zeta).max_abs() <= 1e-12);
        assert!((&a.v - &b.v).max_abs() <= 1e-12);
    }

    #[test]
    fn singular_lambda_is_rejected() {
        let p = params(0.3, 0.8, 0.1);
        let g = Grid::new(1.0, 64).unwrap();
        let k = g.k_max();
        let lambda = 2.0 / (p.mu * k * k);
        let z = Field::from_fn(&g, |x: f64| (2.0 * PI * x).sin());
        let err = cl_init_split(&z, &z, &p, &ClParams { theta: 1.0, lambda }).unwrap_err();
        assert!(matches!(err, Error::SingularSymbol { .. }));
    }

    #[test]
    fn linear_single_mode_phase() {
        // eps = 0: a single mode translates at ∓ mu nu k^2 / (1 + mu nu_t k^2) in the moving
        // frame, with nu = nu_x (face value) or nu_x + nu_t (laboratory BBM term).
        let p = RegimeParams::new(0.05, 0.0, 1.0, 0.0, 0.0).unwrap();
        let clp = ClParams { theta: 0.4, lambda: 0.0 };
        let c = derive_cl_constants(&p, &clp).unwrap();
        assert!(c.nu_x != 0.0);
        let l = 2.0 * PI;
        let g = Grid::new(l, 32).unwrap();
        let k = 3.0;
        let v = Field::from_fn(&g, |x: f64| (k * x).sin());
        for (frame, nu) in [(BbmFrame::Moving, c.nu_x), (BbmFrame::Laboratory, c.nu_x + c.nu_t)] {
            let rate = cl_rhs(&v, Direction::Right, &p, &c, frame, true).unwrap();
            let speed = -p.mu * nu * k * k / (1.0 + p.mu * c.nu_t * k * k);
            // d/dt sin(k(x - s t)) at t = 0 is -s k cos(kx)
            let expected = Field::from_fn(&g, |x: f64| -speed * k * (k * x).cos());
            assert!((&rate - &expected).max_abs() < 1e-12);
            let left = cl_rhs(&v, Direction::Left, &p, &c, frame, true).unwrap();
            assert!((&left + &expected).max_abs() < 1e-12);
        }
    }

    #[test]
    fn laboratory_frame_matches_coupled_dispersion() {
        // 1 - mu (nu_x + nu_t) k^2 agrees with 1 / sqrt(1 + mu nu k^2) to O(mu^2) for any (theta, lambda)
        let p: RegimeParams<f64> = RegimeParams::new(1e-4, 0.0, 0.7, 0.3, 0.2).unwrap();
        let nu = p.nu();
        for (theta, lambda) in [(1.0, 0.0), (0.3, 0.1), (0.0, 0.5)] {
            let c = derive_cl_constants(&p, &ClParams { theta, lambda }).unwrap();
            assert!((c.nu_x + c.nu_t - nu / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn momentum_is_conserved_by_rhs() {
        let p = params(0.3, 0.8, 0.3);
        let c = derive_cl_constants(&p, &ClParams::default()).unwrap();
        let g = Grid::new(20.0, 128).unwrap();
        let v = Field::from_fn(&g, |x: f64| 1.5 * (-(x - 10.0).powi(2)).exp() + 0.2);
        let r = cl_rhs(&v, Direction::Right, &p, &c, BbmFrame::Laboratory, false).unwrap();
        assert!(r.mean().abs() < 1e-15);
    }
}
