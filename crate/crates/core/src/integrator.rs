//! Classical four-stage Runge-Kutta stepping with CFL control, condition
//! monitoring and sampled diagnostics.

use crate::cl_model::{ClModel, ClState};
use crate::diagnostics::{gn_record, DiagRecord, EnergyForm};
use crate::error::{Error, Result};
use crate::gn_model::GnModel;
use crate::grid::State;
use crate::params::{check_h1, check_h2, derive_constants};
use crate::scalar::Real;

/// A vector-space element the stepper can combine linearly.
pub trait OdeState<T>: Clone {
    /// `self + a * d`.
    fn axpy(&self, a: T, d: &Self) -> Self;
}

impl<T: Real> OdeState<T> for State<T> {
    fn axpy(&self, a: T, d: &Self) -> Self {
        self.add_scaled(a, d)
    }
}

impl<T: Real> OdeState<T> for ClState<T> {
    fn axpy(&self, a: T, d: &Self) -> Self {
        self.add_scaled(a, d)
    }
}

/// What the driver needs from a model.
pub trait Evolution<T: Real> {
    type State: OdeState<T>;

    /// Time derivative plus the number of inner solver iterations it cost.
    fn rate(&self, u: &Self::State) -> Result<(Self::State, usize)>;

    /// Upper bound on the advective speed, used for the CFL limit.
    fn max_speed(&self, u: &Self::State) -> T;

    fn dx(&self, u: &Self::State) -> T;

    /// Fails with [`Error::ConditionLost`] when the state left the admissible set.
    fn check(&self, u: &Self::State, t: T) -> Result<()>;

    fn record(&self, u: &Self::State, t: T, diag: &DiagSettings<T>, solver_iters: usize) -> Result<DiagRecord<T>>;
}

fn lost<T: Real>(t: T, condition: &str) -> Error {
    Error::ConditionLost {
        t: t.to_f64_lossy(),
        condition: condition.into(),
    }
}

impl<T: Real> Evolution<T> for GnModel<T> {
    type State = State<T>;

    fn rate(&self, u: &State<T>) -> Result<(State<T>, usize)> {
        self.rhs(u).map(|(d, stats)| (d, stats.iterations))
    }

    fn max_speed(&self, u: &State<T>) -> T {
        GnModel::max_speed(self, u)
    }

    fn dx(&self, u: &State<T>) -> T {
        u.grid().dx()
    }

    fn check(&self, u: &State<T>, t: T) -> Result<()> {
        if !check_h1(&u.zeta, &self.params).ok {
            return Err(lost(t, "H1"));
        }
        if !check_h2(&u.zeta, &self.params, &self.consts).ok {
            return Err(lost(t, "H2"));
        }
        Ok(())
    }

    fn record(&self, u: &State<T>, t: T, diag: &DiagSettings<T>, solver_iters: usize) -> Result<DiagRecord<T>> {
        Ok(gn_record(u, t, diag.sobolev_index, diag.energy_form, &self.params, &self.consts, solver_iters))
    }
}

impl<T: Real> Evolution<T> for ClModel<T> {
    type State = ClState<T>;

    fn rate(&self, u: &ClState<T>) -> Result<(ClState<T>, usize)> {
        self.rhs(u).map(|d| (d, 0))
    }

    fn max_speed(&self, u: &ClState<T>) -> T {
        ClModel::max_speed(self, u)
    }

    fn dx(&self, u: &ClState<T>) -> T {
        u.plus.grid().dx()
    }

    fn check(&self, _u: &ClState<T>, _t: T) -> Result<()> {
        Ok(())
    }

    /// Diagnostics of the reconstructed two-component state, except that
    /// `mass` and `mean_v` hold the means of `v+^λ` and `v-^λ`.
    fn record(&self, u: &ClState<T>, t: T, diag: &DiagSettings<T>, solver_iters: usize) -> Result<DiagRecord<T>> {
        let consts = derive_constants(&self.params)?;
        let full = self.reconstruct(u)?;
        let mut r = gn_record(&full, t, diag.sobolev_index, diag.energy_form, &self.params, &consts, solver_iters);
        r.mass = u.plus.mean();
        r.mean_v = u.minus.mean();
        Ok(r)
    }
}

/// What the recorded diagnostics measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagSettings<T> {
    /// Sobolev index of the recorded norms and energies.
    pub sobolev_index: T,
    pub energy_form: EnergyForm,
}

impl<T: Real> Default for DiagSettings<T> {
    fn default() -> Self {
        DiagSettings {
            sobolev_index: T::one(),
            energy_form: EnergyForm::Es,
        }
    }
}

/// Time-stepping controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepConfig<T> {
    pub dt: T,
    pub t_end: T,
    pub cfl: T,
    /// Record diagnostics every this many steps; the final state is always recorded.
    pub sample_every: usize,
    pub diag: DiagSettings<T>,
    /// Abort once `|U|_{X^s}` exceeds this multiple of its initial value.
    pub blowup_factor: T,
}

impl<T: Real> StepConfig<T> {
    pub fn new(dt: T, t_end: T) -> Self {
        StepConfig {
            dt,
            t_end,
            cfl: T::lit(0.5),
            sample_every: 1,
            diag: DiagSettings::default(),
            blowup_factor: T::lit(100.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.into()));
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return bad("dt must be positive");
        }
        if !(self.t_end >= T::zero()) || !self.t_end.is_finite() {
            return bad("t_end must be non-negative");
        }
        if !(self.cfl > T::zero()) {
            return bad("cfl must be positive");
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1");
        }
        if !(self.blowup_factor > T::one()) {
            return bad("blowup_factor must exceed 1");
        }
        Ok(())
    }
}

/// One classical RK4 step. Returns the new state and the inner iterations spent.
pub fn rk4_step<T, S, F>(u: &S, dt: T, mut rhs: F) -> Result<(S, usize)>
where
    T: Real,
    S: OdeState<T>,
    F: FnMut(&S) -> Result<(S, usize)>,
{
    let half = dt / T::lit(2.0);
    let (k1, i1) = rhs(u)?;
    let (k2, i2) = rhs(&u.axpy(half, &k1))?;
    let (k3, i3) = rhs(&u.axpy(half, &k2))?;
    let (k4, i4) = rhs(&u.axpy(dt, &k3))?;
    let sixth = dt / T::lit(6.0);
    let next = u
        .axpy(sixth, &k1)
        .axpy(T::lit(2.0) * sixth, &k2)
        .axpy(T::lit(2.0) * sixth, &k3)
        .axpy(sixth, &k4);
    Ok((next, i1 + i2 + i3 + i4))
}

/// Sampled output of [`run`].
#[derive(Clone, Debug)]
pub struct Trajectory<T, S> {
    pub samples: Vec<(T, S)>,
    pub records: Vec<DiagRecord<T>>,
    pub steps: usize,
}

impl<T: Copy, S> Trajectory<T, S> {
    pub fn last_state(&self) -> &S {
        &self.samples.last().expect("a trajectory always holds its initial sample").1
    }

    pub fn final_time(&self) -> T {
        self.samples.last().expect("a trajectory always holds its initial sample").0
    }
}

/// Integrates to `cfg.t_end`.
pub fn run<T: Real, M: Evolution<T>>(model: &M, u0: &M::State, cfg: &StepConfig<T>) -> Result<Trajectory<T, M::State>> {
    run_with_observer(model, u0, cfg, |_, _| Ok(()))
}

/// As [`run`], calling `observe` on every sample as soon as it is taken.
pub fn run_with_observer<T, M, O>(
    model: &M,
    u0: &M::State,
    cfg: &StepConfig<T>,
    mut observe: O,
) -> Result<Trajectory<T, M::State>>
where
    T: Real,
    M: Evolution<T>,
    O: FnMut(&DiagRecord<T>, &M::State) -> Result<()>,
{
    cfg.validate()?;
    let diag = &cfg.diag;
    let mut t = T::zero();
    let mut u = u0.clone();
    model.check(&u, t)?;

    let first = model.record(&u, t, diag, 0)?;
    let ceiling = cfg.blowup_factor * first.x_s;
    observe(&first, &u)?;
    let mut traj = Trajectory {
        samples: vec![(t, u.clone())],
        records: vec![first],
        steps: 0,
    };

    let mut iters = 0;
    let mut since_sample = 0;
    while t < cfg.t_end {
        let cfl_dt = cfg.cfl * model.dx(&u) / model.max_speed(&u);
        let h_max = cfg.dt.min(cfl_dt);
        let remaining = cfg.t_end - t;
        // Equal steps that land exactly on t_end.
        let n_left = (remaining / h_max - T::lit(1e-9)).ceil().max(T::one());
        let h = remaining / n_left;
        let (next, it) = rk4_step(&u, h, |w| model.rate(w)).map_err(|e| match e {
            Error::H1Violated { .. } => lost(t, "H1"),
            Error::H2Violated { .. } => lost(t, "H2"),
            other => other,
        })?;
        u = next;
        iters += it;
        traj.steps += 1;
        since_sample += 1;
        t = if n_left == T::one() { cfg.t_end } else { t + h };
        model.check(&u, t)?;

        if since_sample == cfg.sample_every || t >= cfg.t_end {
            let rec = model.record(&u, t, diag, iters)?;
            if !rec.x_s.is_finite() || (ceiling > T::zero() && rec.x_s > ceiling) {
                return Err(Error::Blowup {
                    t: t.to_f64_lossy(),
                    norm: rec.x_s.to_f64_lossy(),
                    ceiling: ceiling.to_f64_lossy(),
                });
            }
            observe(&rec, &u)?;
            traj.samples.push((t, u.clone()));
            traj.records.push(rec);
            iters = 0;
            since_sample = 0;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Field, Grid};
    use crate::params::RegimeParams;

    #[derive(Clone, Debug)]
    struct Scalar(f64);

    impl OdeState<f64> for Scalar {
        fn axpy(&self, a: f64, d: &Self) -> Self {
            Scalar(self.0 + a * d.0)
        }
    }

    #[test]
    fn zero_rate_is_identity() {
        let (u, _) = rk4_step(&Scalar(1.25), 0.1, |_| Ok((Scalar(0.0), 0))).unwrap();
        assert_eq!(u.0, 1.25);
    }

    #[test]
    fn decay_local_error_is_fifth_order() {
        let err = |h: f64| {
            let (u, _) = rk4_step(&Scalar(1.0), h, |w| Ok((Scalar(-w.0), 0))).unwrap();
            (u.0 - (-h).exp()).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        let order = (e1 / e2).log2();
        assert!(order > 4.8 && order < 5.2, "local order {order}");
    }

    fn gn(eps: f64) -> GnModel<f64> {
        let p = RegimeParams::new(0.05, eps, 1.0, 0.0, 0.0).unwrap();
        let c = derive_constants(&p).unwrap();
        GnModel::new(p, c)
    }

    #[test]
    fn rest_state_trajectory() {
        let m = gn(0.1);
        let g = Grid::new(10.0, 32).unwrap();
        let mut cfg = StepConfig::new(0.1, 1.0);
        cfg.sample_every = 3;
        let traj = run(&m, &State::zeros(&g), &cfg).unwrap();
        assert_eq!(traj.final_time(), 1.0);
        assert_eq!(traj.samples.len(), 5);
        for (_, u) in &traj.samples {
            assert_eq!(u.max_abs(), 0.0);
        }
        assert!(traj.records.iter().all(|r| r.h1_min == 1.0 && r.q1_min == 1.0));
    }

    #[test]
    fn steps_land_on_t_end() {
        let m = gn(0.1);
        let g = Grid::new(10.0, 32).unwrap();
        let u0 = State::new(Field::from_fn(&g, |x: f64| 0.01 * (0.2 * std::f64::consts::PI * x).cos()), Field::zeros(&g)).unwrap();
        // cfl * dx = 0.15625 binds before dt = 0.3
        let traj = run(&m, &u0, &StepConfig::new(0.3, 1.0)).unwrap();
        assert_eq!(traj.steps, 7);
        assert_eq!(traj.final_time(), 1.0);
        let loose = StepConfig { cfl: 5.0, ..StepConfig::new(0.3, 1.0) };
        let traj = run(&m, &u0, &loose).unwrap();
        assert_eq!(traj.steps, 4);
        assert_eq!(traj.final_time(), 1.0);
    }

    #[test]
    fn lost_ellipticity_is_reported() {
        // kappa1 = 1 at gamma = 0, delta = 1: q1 = 1 + eps zeta turns negative once eps zeta < -1.
        let m = gn(1.0);
        let g = Grid::new(10.0, 32).unwrap();
        let zeta = Field::from_fn(&g, |x: f64| -1.2 * (-(x - 5.0f64).powi(2)).exp());
        let u0 = State::new(zeta, Field::zeros(&g)).unwrap();
        let err = run(&m, &u0, &StepConfig::new(0.01, 1.0)).unwrap_err();
        assert!(matches!(err, Error::ConditionLost { .. }), "{err:?}");
    }

    #[test]
    fn invalid_config_is_rejected() {
        let m = gn(0.1);
        let g = Grid::new(10.0, 32).unwrap();
        let err = run(&m, &State::zeros(&g), &StepConfig::new(0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidParams(_)));
    }
}
