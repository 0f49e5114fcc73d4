//! The experiment registry and the code that runs each experiment.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde_json::{json, Value as Json};

use super::config::{ExperimentConfig, InitialData, Profile, Value};
use super::output::{cell, Column, LinePlot, OutputDir};
use crate::cl_model::{derive_cl_constants, ClModel, ClParams};
use crate::diagnostics::{linear_fit, log_log_slope, twin_divergence, DiagRecord};
use crate::elliptic::TContext;
use crate::error::{Error, Result};
use crate::gn_model::{expansion_residual_q, expansion_residual_r, linear_dispersion, right_moving_mode, GnModel};
use crate::grid::{Field, Grid, State};
use crate::integrator::{run_with_observer, Evolution, StepConfig, Trajectory};
use crate::params::{check_h1, check_h2, check_regime, derive_constants, ModelConstants, RegimeParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    OperatorProps,
    Dispersion,
    ExpansionResidual,
    FormulationEquivalence,
    Conservation,
    EnergyGrowth,
    StabilityTwin,
    GnVsCl,
    TimeOrder,
    Constants,
}

/// Direction in which a metric is compared with its threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    /// Pass when `metric <= threshold`.
    Max,
    /// Pass when `metric >= threshold`.
    Min,
}

impl Bound {
    pub fn name(self) -> &'static str {
        match self {
            Bound::Max => "max",
            Bound::Min => "min",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ThresholdSpec {
    pub name: &'static str,
    pub default: f64,
    pub bound: Bound,
    pub doc: &'static str,
}

macro_rules! th {
    ($name:literal, $default:expr, $bound:ident, $doc:literal) => {
        ThresholdSpec { name: $name, default: $default, bound: Bound::$bound, doc: $doc }
    };
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::OperatorProps,
        Experiment::Dispersion,
        Experiment::ExpansionResidual,
        Experiment::FormulationEquivalence,
        Experiment::Conservation,
        Experiment::EnergyGrowth,
        Experiment::StabilityTwin,
        Experiment::GnVsCl,
        Experiment::TimeOrder,
        Experiment::Constants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::OperatorProps => "operator-props",
            Experiment::Dispersion => "dispersion",
            Experiment::ExpansionResidual => "expansion-residual",
            Experiment::FormulationEquivalence => "formulation-equivalence",
            Experiment::Conservation => "conservation",
            Experiment::EnergyGrowth => "energy-growth",
            Experiment::StabilityTwin => "stability-twin",
            Experiment::GnVsCl => "gn-vs-cl",
            Experiment::TimeOrder => "time-order",
            Experiment::Constants => "constants",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|e| e.name()).collect()
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::OperatorProps => "symmetry, coercivity and invertibility of the elliptic operator on random admissible elevations",
            Experiment::Dispersion => "phase speed of a small-amplitude Fourier mode against the linear dispersion relation",
            Experiment::ExpansionResidual => "eps-scaling of the residuals of the asymptotic expansions of Q and R",
            Experiment::FormulationEquivalence => "direct against condensed right-hand side on random states",
            Experiment::Conservation => "drift of mean(zeta) in a coupled run and of mean(v+-^lambda) in a decoupled run",
            Experiment::EnergyGrowth => "fitted energy growth rate over t in [0, 1/eps] for two values of eps",
            Experiment::StabilityTwin => "growth and linearity of the difference between perturbed twin runs",
            Experiment::GnVsCl => "X^s distance between the coupled solution and the reconstructed decoupled approximation",
            Experiment::TimeOrder => "self-convergence order of the Runge-Kutta stepper on the coupled model",
            Experiment::Constants => "closed-form constants at two hand-checked parameter points",
        }
    }

    pub fn thresholds(self) -> &'static [ThresholdSpec] {
        match self {
            Experiment::OperatorProps => &[
                th!("symmetry_max", 1e-10, Max, "largest relative symmetry defect |(Tu,w)-(u,Tw)| / max(|Tu||w|, |u||Tw|)"),
                th!("coercivity_slack", 1e-9, Max, "largest h02 min(1,nu) |v|^2 - (Tv,v) for |v|_{H^1_mu} = 1"),
                th!("roundtrip_max", 1e-9, Max, "largest relative L^2 error of invert(apply(v))"),
            ],
            Experiment::Dispersion => &[th!("phase_rel_max", 1e-3, Max, "relative error of the measured phase speed")],
            Experiment::ExpansionResidual => &[
                th!("slope_q_min", 1.9, Min, "log-log slope of the Q residual against eps"),
                th!("slope_r_min", 0.9, Min, "log-log slope of the R residual against eps"),
            ],
            Experiment::FormulationEquivalence => {
                &[th!("rhs_diff_max", 1e-9, Max, "sup-norm distance between the two right-hand sides")]
            }
            Experiment::Conservation => &[
                th!("mass_drift_max", 1e-12, Max, "max |mean zeta(t) - mean zeta(0)| per unit time, coupled run"),
                th!("cl_mean_drift_max", 1e-12, Max, "max |mean v+-^lambda(t) - mean v+-^lambda(0)|, decoupled run"),
            ],
            Experiment::EnergyGrowth => &[
                th!("ratio_min", 0.4, Min, "smallest ratio of fitted rates eps*lambda at consecutive eps"),
                th!("ratio_max", 0.6, Max, "largest ratio of fitted rates eps*lambda at consecutive eps"),
            ],
            Experiment::StabilityTwin => &[
                th!("growth_max", 10.0, Max, "max over t of |dU(t)| / |dU(0)|"),
                th!("linearity_max", 0.05, Max, "max over t of | |dU_2p| / (2 |dU_p|) - 1 |"),
                th!("linear_regime_max", 1e-3, Max, "largest difference norm of the doubled perturbation"),
            ],
            Experiment::GnVsCl => &[th!("slope_min", 0.9, Min, "log-log slope of the X^s error against eps0")],
            Experiment::TimeOrder => &[th!("order_min", 3.9, Min, "observed order from three step sizes")],
            Experiment::Constants => &[th!("abs_err_max", 1e-14, Max, "largest absolute error of a constant")],
        }
    }

    /// Sweep keys the experiment needs.
    pub fn sweeps(self) -> &'static [&'static str] {
        match self {
            Experiment::ExpansionResidual | Experiment::EnergyGrowth => &["sweep.eps_list"],
            Experiment::GnVsCl => &["sweep.mu_list"],
            _ => &[],
        }
    }

    /// Keys whose defaults differ from the shared ones.
    pub(crate) fn default_overrides(self) -> Vec<(&'static str, Value)> {
        use Value::{Int, List, Num, Text};
        let common_nonlinear = || {
            vec![
                ("regime.gamma", Num(0.1)),
                ("regime.delta", Num(0.6)),
                ("regime.mu", Num(0.2)),
                ("regime.eps", Num(0.1)),
            ]
        };
        match self {
            Experiment::OperatorProps | Experiment::FormulationEquivalence => vec![
                ("regime.gamma", Num(0.3)),
                ("regime.delta", Num(0.8)),
                ("regime.mu", Num(0.3)),
                ("regime.eps", Num(0.5)),
                ("grid.length", Num(20.0)),
                ("solver.tol", Num(1e-13)),
                ("run.samples", Int(if self == Experiment::OperatorProps { 50 } else { 20 })),
            ],
            Experiment::Dispersion => vec![
                ("grid.length", Num(1.0)),
                ("init.profile", Text("cosine-mode".into())),
                ("init.amplitude", Num(1e-4)),
                ("step.dt", Num(0.01)),
                ("step.t_end", Num(5.0)),
                ("step.sample_every", Int(10)),
            ],
            Experiment::ExpansionResidual => vec![
                ("regime.gamma", Num(0.5)),
                ("regime.delta", Num(1.5)),
                ("grid.length", Num(20.0)),
                ("grid.n", Int(512)),
                ("sweep.eps_list", List(vec![0.1, 0.05, 0.025])),
            ],
            Experiment::Conservation => {
                let mut v = common_nonlinear();
                v.push(("step.t_end", Num(2.0)));
                v
            }
            Experiment::EnergyGrowth => {
                let mut v = common_nonlinear();
                v.extend([
                    ("sweep.eps_list", List(vec![0.1, 0.05])),
                    ("step.sample_every", Int(4)),
                ]);
                v
            }
            Experiment::StabilityTwin => {
                let mut v = common_nonlinear();
                v.push(("step.sample_every", Int(8)));
                v
            }
            Experiment::GnVsCl => vec![
                ("regime.gamma", Num(0.25)),
                ("regime.delta", Num(0.5)),
                ("grid.n", Int(512)),
                ("init.width", Num(1.0)),
                ("step.dt", Num(0.01)),
                ("solver.tol", Num(1e-13)),
                ("sweep.mu_list", List(vec![4e-3, 1e-3, 2.5e-4])),
            ],
            Experiment::TimeOrder => {
                let mut v = common_nonlinear();
                v.extend([
                    ("step.t_end", Num(2.0)),
                    ("step.cfl", Num(1e6)),
                    ("step.sample_every", Int(1_000_000)),
                    ("solver.tol", Num(1e-13)),
                ]);
                v
            }
            Experiment::Constants => vec![],
        }
    }
}

/// One threshold comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub criterion: &'static str,
    pub metric: f64,
    pub threshold: &'static str,
    pub threshold_value: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl Verdict {
    pub fn to_json(&self) -> Json {
        json!({
            "kind": "verdict",
            "criterion": self.criterion,
            "metric": finite_or_null(self.metric),
            "threshold": self.threshold,
            "threshold_value": self.threshold_value,
            "bound": self.bound.name(),
            "pass": self.pass,
        })
    }
}

fn finite_or_null(x: f64) -> Json {
    if x.is_finite() {
        json!(x)
    } else {
        Json::Null
    }
}

/// Verdicts plus experiment-specific fitted quantities.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub verdicts: Vec<Verdict>,
    pub summary: Json,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    out: &'a OutputDir,
    pool: &'a ThreadPool,
}

impl Ctx<'_> {
    fn verdict(&self, criterion: &'static str, metric: f64, threshold: &'static str) -> Verdict {
        let spec = self
            .cfg
            .experiment
            .thresholds()
            .iter()
            .find(|t| t.name == threshold)
            .unwrap_or_else(|| panic!("{threshold} is not a threshold of {}", self.cfg.experiment.name()));
        let value = self.cfg.threshold(threshold);
        let pass = match spec.bound {
            Bound::Max => metric <= value,
            Bound::Min => metric >= value,
        };
        Verdict {
            criterion,
            metric,
            threshold,
            threshold_value: value,
            bound: spec.bound,
            pass,
        }
    }

    /// Constants for `p` after the regime check.
    fn admit(&self, p: &RegimeParams<f64>) -> Result<ModelConstants<f64>> {
        let report = check_regime(p, &self.cfg.bounds());
        if !report.in_ch && !self.cfg.force() {
            return Err(Error::RegimeViolation(format!(
                "mu = {}, eps = {}, delta = {}, gamma = {}, bo_inv = {} (in shallow-water set: {}, nu margin {:e}); set regime.force = true or pass --force to run anyway",
                p.mu, p.eps, p.delta, p.gamma, p.bo_inv, report.in_sw, report.nu_margin
            )));
        }
        derive_constants(p)
    }

    fn grid(&self) -> Result<Arc<Grid<f64>>> {
        Grid::new(self.cfg.num("grid.length"), self.cfg.int("grid.n"))
    }

    fn gn_model(&self, p: &RegimeParams<f64>) -> Result<GnModel<f64>> {
        let c = self.admit(p)?;
        let mut model = GnModel::new(p.clone(), c);
        model.solver = self.cfg.solver();
        Ok(model)
    }

    fn cl_model(&self, p: &RegimeParams<f64>) -> Result<ClModel<f64>> {
        let mut model = ClModel::new(p.clone(), self.cfg.cl_params())?;
        model.frame = self.cfg.cl_frame();
        Ok(model)
    }

    fn logged_run<M: Evolution<f64>>(
        &self,
        file: &str,
        description: &str,
        model: &M,
        u0: &M::State,
        step: &StepConfig<f64>,
        mut observe: impl FnMut(&DiagRecord<f64>, &M::State),
    ) -> Result<Trajectory<f64, M::State>> {
        let mut csv = self.out.trajectory(file, description)?;
        run_with_observer(model, u0, step, |rec, u| {
            observe(rec, u);
            csv.record(rec)
        })
    }

    fn table(&self, file: &str, description: &str, columns: &[Column], rows: &[Vec<f64>]) -> Result<()> {
        let mut csv = self.out.csv(file, description, columns)?;
        for row in rows {
            csv.row(&row.iter().map(|&x| cell(x)).collect::<Vec<_>>())?;
        }
        Ok(())
    }
}

/// Runs one experiment, writing its CSV and SVG files into `out`.
pub fn run(cfg: &ExperimentConfig, out: &OutputDir, pool: &ThreadPool) -> Result<Outcome> {
    let ctx = Ctx { cfg, out, pool };
    match cfg.experiment {
        Experiment::OperatorProps => operator_props(&ctx),
        Experiment::Dispersion => dispersion(&ctx),
        Experiment::ExpansionResidual => expansion_residual(&ctx),
        Experiment::FormulationEquivalence => formulation_equivalence(&ctx),
        Experiment::Conservation => conservation(&ctx),
        Experiment::EnergyGrowth => energy_growth(&ctx),
        Experiment::StabilityTwin => stability_twin(&ctx),
        Experiment::GnVsCl => gn_vs_cl(&ctx),
        Experiment::TimeOrder => time_order(&ctx),
        Experiment::Constants => constants(&ctx),
    }
}

/// Initial state described by `init`.
///
/// Localized profiles are centred at `center * L` on the periodic line, have
/// their mean removed, and carry the right-moving velocity `(gamma+delta) zeta`.
/// The cosine mode carries the exact linear right-moving velocity.
pub fn initial_state(
    init: &InitialData,
    grid: &Arc<Grid<f64>>,
    p: &RegimeParams<f64>,
    c: &ModelConstants<f64>,
) -> State<f64> {
    let l = grid.length();
    let x0 = init.center * l;
    let shape = |y: f64| match init.profile {
        Profile::Sech2 => 1.0 / y.cosh().powi(2),
        _ => (-y * y).exp(),
    };
    match init.profile {
        Profile::CosineMode => right_moving_mode(grid, init.mode, init.amplitude, p, c),
        Profile::Gaussian | Profile::Sech2 => {
            let raw = Field::from_fn(grid, |x| {
                let d = (x - x0 + 0.5 * l).rem_euclid(l) - 0.5 * l;
                init.amplitude * shape(d / init.width)
            });
            let m = raw.mean();
            let zeta = raw.map(|z| z - m);
            let v = zeta.scale(p.gamma_plus_delta());
            State { zeta, v }
        }
    }
}

/// A smooth zero-mean field built from the first `modes` Fourier modes with
/// `1/j^2` decaying random coefficients, normalized to unit sup-norm.
fn random_smooth(grid: &Arc<Grid<f64>>, rng: &mut ChaCha8Rng, modes: usize) -> Field<f64> {
    let k0 = 2.0 * std::f64::consts::PI / grid.length();
    let coeffs: Vec<(f64, f64, f64)> = (1..=modes)
        .map(|j| {
            let w = 1.0 / (j * j) as f64;
            (k0 * j as f64, w * rng.gen_range(-1.0..1.0), w * rng.gen_range(-1.0..1.0))
        })
        .collect();
    let f = Field::from_fn(grid, |x| coeffs.iter().map(|&(k, a, b)| a * (k * x).cos() + b * (k * x).sin()).sum());
    f.scale(1.0 / f.max_abs())
}

/// A random elevation that keeps both depths and both ellipticity
/// coefficients at least 40% of their rest values.
fn random_elevation(grid: &Arc<Grid<f64>>, rng: &mut ChaCha8Rng, p: &RegimeParams<f64>, c: &ModelConstants<f64>) -> Field<f64> {
    let worst = [1.0, p.delta, c.kappa1.abs(), c.kappa2.abs()].into_iter().fold(0.0, f64::max);
    let cap = if p.eps > 0.0 { (0.6 / (p.eps * worst)).min(1.0) } else { 1.0 };
    let amplitude = rng.gen_range(0.2..1.0) * cap;
    random_smooth(grid, rng, 8).scale(amplitude)
}

fn operator_props(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let p = cfg.regime()?;
    let c = ctx.admit(&p)?;
    let grid = ctx.grid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.int("run.seed") as u64);
    let cases: Vec<_> = (0..cfg.int("run.samples"))
        .map(|_| {
            let zeta = random_elevation(&grid, &mut rng, &p, &c);
            let u = random_smooth(&grid, &mut rng, 8);
            let w = random_smooth(&grid, &mut rng, 8);
            (zeta, u, w)
        })
        .collect();
    let opts = cfg.solver();
    let rows: Vec<Vec<f64>> = ctx.pool.install(|| {
        cases
            .par_iter()
            .enumerate()
            .map(|(i, (zeta, u, w))| {
                if !check_h1(zeta, &p).ok || !check_h2(zeta, &p, &c).ok {
                    return Err(Error::Degenerate(format!("sample {i} violates the admissibility conditions")));
                }
                let t = TContext::new(zeta, &p, &c);
                let (tu, tw) = (t.apply(u), t.apply(w));
                let scale = (tu.l2_norm() * w.l2_norm()).max(u.l2_norm() * tw.l2_norm());
                let symmetry = (tu.inner(w) - u.inner(&tw)).abs() / scale;
                let v = u.scale(1.0 / u.h1mu_norm(p.mu));
                let floor = t.h02() * c.nu.min(1.0);
                let deficit = floor - t.apply(&v).inner(&v);
                let (back, stats) = t.invert(&tu, opts)?;
                let roundtrip = (&back - u).l2_norm() / u.l2_norm();
                Ok(vec![i as f64, zeta.max_abs(), t.h02(), symmetry, deficit, roundtrip, stats.iterations as f64])
            })
            .collect::<Result<Vec<_>>>()
    })?;
    ctx.table(
        "operator_props.csv",
        "One row per random sample of the elliptic-operator checks.",
        &[
            ("sample", "sample index"),
            ("zeta_max_abs", "sup-norm of the random elevation"),
            ("h02", "min(min q1, min q2)"),
            ("symmetry_defect", "|(Tu,w)-(u,Tw)| / max(|Tu||w|, |u||Tw|)"),
            ("coercivity_deficit", "h02 min(1,nu) - (Tv,v) for |v|_{H^1_mu} = 1; negative means coercive"),
            ("roundtrip_error", "|invert(apply(u)) - u| / |u|"),
            ("solver_iters", "conjugate-gradient iterations of the inversion"),
        ],
        &rows,
    )?;
    let max_col = |j: usize| rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
    let (sym, def, rt) = (max_col(3), max_col(4), max_col(5));
    Ok(Outcome {
        verdicts: vec![
            ctx.verdict("operator symmetry", sym, "symmetry_max"),
            ctx.verdict("operator coercivity", def, "coercivity_slack"),
            ctx.verdict("invert/apply round trip", rt, "roundtrip_max"),
        ],
        summary: json!({
            "samples": rows.len(),
            "max_symmetry_defect": sym,
            "max_coercivity_deficit": def,
            "max_roundtrip_error": rt,
            "nu": c.nu,
        }),
    })
}

fn dispersion(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let p = cfg.regime()?;
    let model = ctx.gn_model(&p)?;
    let grid = ctx.grid()?;
    let init = cfg.init();
    let u0 = initial_state(&init, &grid, &p, &model.consts);
    let k = 2.0 * std::f64::consts::PI * init.mode as f64 / grid.length();
    let mut phases: Vec<(f64, f64)> = Vec::new();
    ctx.logged_run(
        "dispersion_trajectory.csv",
        "Diagnostics of the small-amplitude mode run.",
        &model,
        &u0,
        &cfg.step(),
        |rec, u| {
            let coeff = u.zeta.spectrum()[init.mode];
            let raw = coeff.im.atan2(coeff.re);
            // Unwrap against the previous sample.
            let mut phase = raw;
            if let Some(&(_, prev)) = phases.last() {
                let turns = ((prev - raw) / (2.0 * std::f64::consts::PI)).round();
                phase = raw + turns * 2.0 * std::f64::consts::PI;
            }
            phases.push((rec.t, phase));
        },
    )?;
    let ts: Vec<f64> = phases.iter().map(|x| x.0).collect();
    let ph: Vec<f64> = phases.iter().map(|x| x.1).collect();
    let (_, slope) = linear_fit(&ts, &ph)?;
    let measured = -slope / k;
    let expected = linear_dispersion(k, &p, &model.consts);
    let rel = (measured - expected).abs() / expected;
    ctx.table(
        "dispersion_phase.csv",
        "Unwrapped phase of the excited Fourier coefficient of zeta.",
        &[("t", "sample time"), ("phase", "unwrapped argument of the mode coefficient")],
        &phases.iter().map(|&(t, f)| vec![t, f]).collect::<Vec<_>>(),
    )?;
    ctx.out.plot(
        "dispersion_phase.svg",
        &LinePlot {
            title: "Phase of the excited mode".into(),
            x_label: "t".into(),
            y_label: "phase".into(),
            series: vec![
                ("measured".into(), phases.clone()),
                ("linear theory".into(), ts.iter().map(|&t| (t, ph[0] - k * expected * t)).collect()),
            ],
            ..LinePlot::default()
        },
    )?;
    Ok(Outcome {
        verdicts: vec![ctx.verdict("linear phase speed", rel, "phase_rel_max")],
        summary: json!({
            "k": k,
            "measured_speed": measured,
            "expected_speed": expected,
            "relative_error": rel,
        }),
    })
}

fn expansion_residual(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let base = cfg.regime()?;
    let mu = base.mu;
    let grid = ctx.grid()?;
    let s = cfg.num("run.residual_s");
    let eps_list = cfg.list("sweep.eps_list").to_vec();
    let rows: Vec<Vec<f64>> = ctx.pool.install(|| {
        eps_list
            .par_iter()
            .map(|&eps| {
                let p = base.with_scales(mu, eps);
                let c = ctx.admit(&p)?;
                let u = initial_state(&cfg.init(), &grid, &p, &c);
                let q = expansion_residual_q(&u.zeta, &u.v, &p, &c, s);
                let r = expansion_residual_r(&u.zeta, &u.v, &p, &c, s);
                Ok(vec![eps, q, r])
            })
            .collect::<Result<Vec<_>>>()
    })?;
    ctx.table(
        "expansion_residual.csv",
        "Residuals of the truncated expansions of Q and R, one row per eps.",
        &[
            ("eps", "nonlinearity parameter"),
            ("residual_q", "H^s norm of the Q expansion residual"),
            ("residual_r", "H^s norm of the R expansion residual"),
        ],
        &rows,
    )?;
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    let slope_q = log_log_slope(&col(0), &col(1)).unwrap_or(f64::NAN);
    let slope_r = log_log_slope(&col(0), &col(2)).unwrap_or(f64::NAN);
    ctx.out.plot(
        "expansion_residual.svg",
        &LinePlot {
            title: "Expansion residuals".into(),
            x_label: "eps".into(),
            y_label: "residual".into(),
            log_x: true,
            log_y: true,
            series: vec![
                ("Q".into(), rows.iter().map(|r| (r[0], r[1])).collect()),
                ("R".into(), rows.iter().map(|r| (r[0], r[2])).collect()),
            ],
        },
    )?;
    Ok(Outcome {
        verdicts: vec![
            ctx.verdict("Q residual slope", slope_q, "slope_q_min"),
            ctx.verdict("R residual slope", slope_r, "slope_r_min"),
        ],
        summary: json!({ "slope_q": finite_or_null(slope_q), "slope_r": finite_or_null(slope_r), "s": s }),
    })
}

fn formulation_equivalence(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let p = cfg.regime()?;
    let model = ctx.gn_model(&p)?;
    let grid = ctx.grid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.int("run.seed") as u64);
    let states: Vec<State<f64>> = (0..cfg.int("run.samples"))
        .map(|_| {
            let zeta = random_elevation(&grid, &mut rng, &p, &model.consts);
            let v = random_smooth(&grid, &mut rng, 8);
            State { zeta, v }
        })
        .collect();
    let rows: Vec<Vec<f64>> = ctx.pool.install(|| {
        states
            .par_iter()
            .enumerate()
            .map(|(i, u)| {
                let (a, _) = model.rhs(u)?;
                let (b, _) = model.rhs_condensed(u)?;
                let diff = a.sub(&b).max_abs();
                Ok(vec![i as f64, diff, a.max_abs()])
            })
            .collect::<Result<Vec<_>>>()
    })?;
    ctx.table(
        "formulation_equivalence.csv",
        "One row per random state comparing the two right-hand-side formulations.",
        &[
            ("sample", "sample index"),
            ("rhs_diff", "sup-norm of the difference of the two right-hand sides"),
            ("rhs_sup", "sup-norm of the direct right-hand side"),
        ],
        &rows,
    )?;
    let worst = rows.iter().map(|r| r[1]).fold(f64::NEG_INFINITY, f64::max);
    Ok(Outcome {
        verdicts: vec![ctx.verdict("direct vs condensed right-hand side", worst, "rhs_diff_max")],
        summary: json!({ "samples": rows.len(), "max_rhs_diff": worst }),
    })
}

/// `max_t |m(t) - m(0)| / per`.
fn drift(records: &[DiagRecord<f64>], select: impl Fn(&DiagRecord<f64>) -> f64, per: f64) -> f64 {
    let m0 = select(&records[0]);
    let worst = records.iter().map(|r| (select(r) - m0).abs()).fold(0.0, f64::max);
    worst / per.max(f64::MIN_POSITIVE)
}

fn conservation(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let p = cfg.regime()?;
    let gn = ctx.gn_model(&p)?;
    let cl = ctx.cl_model(&p)?;
    let grid = ctx.grid()?;
    let u0 = initial_state(&cfg.init(), &grid, &p, &gn.consts);
    let cl0 = cl.init(&u0.zeta, &u0.v)?;
    let step = cfg.step();
    let (gn_traj, cl_traj) = ctx.pool.install(|| {
        rayon::join(
            || ctx.logged_run("conservation_gn.csv", "Coupled-model run.", &gn, &u0, &step, |_, _| ()),
            || {
                ctx.logged_run(
                    "conservation_cl.csv",
                    "Decoupled-model run; mass and mean_v hold the means of v+^lambda and v-^lambda.",
                    &cl,
                    &cl0,
                    &step,
                    |_, _| (),
                )
            },
        )
    });
    let (gn_traj, cl_traj) = (gn_traj?, cl_traj?);
    let t_end = step.t_end;
    let gn_drift = drift(&gn_traj.records, |r| r.mass, t_end);
    let cl_drift = drift(&cl_traj.records, |r| r.mass, 1.0).max(drift(&cl_traj.records, |r| r.mean_v, 1.0));
    Ok(Outcome {
        verdicts: vec![
            ctx.verdict("coupled mass drift", gn_drift, "mass_drift_max"),
            ctx.verdict("decoupled mean drift", cl_drift, "cl_mean_drift_max"),
        ],
        summary: json!({
            "gn_mass_drift_per_time": gn_drift,
            "cl_mean_drift": cl_drift,
            "gn_steps": gn_traj.steps,
            "cl_steps": cl_traj.steps,
        }),
    })
}

fn energy_growth(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let base = cfg.regime()?;
    let grid = ctx.grid()?;
    let mut eps_list = cfg.list("sweep.eps_list").to_vec();
    eps_list.sort_by(|a, b| b.total_cmp(a));
    let (mu_per_eps, horizon) = (cfg.num("run.mu_per_eps"), cfg.num("run.horizon"));
    // (eps, mu, fitted eps * lambda, energy series)
    type GrowthRun = (f64, f64, f64, Vec<(f64, f64)>);
    let runs: Vec<GrowthRun> = ctx.pool.install(|| {
        eps_list
            .par_iter()
            .map(|&eps| {
                let mu = mu_per_eps * eps;
                let p = base.with_scales(mu, eps);
                let model = ctx.gn_model(&p)?;
                let u0 = initial_state(&cfg.init(), &grid, &p, &model.consts);
                let step = StepConfig {
                    t_end: horizon / eps,
                    ..cfg.step()
                };
                let traj = ctx.logged_run(
                    &format!("energy_growth_eps{eps:e}.csv"),
                    "Coupled-model run of the energy-growth experiment at one eps.",
                    &model,
                    &u0,
                    &step,
                    |_, _| (),
                )?;
                let series: Vec<(f64, f64)> = traj.records.iter().map(|r| (r.t, r.e_s)).collect();
                let ts: Vec<f64> = series.iter().map(|x| x.0).collect();
                let ls: Vec<f64> = series.iter().map(|x| x.1.ln()).collect();
                // Slope of ln E against t, which is eps * lambda.
                let rate = linear_fit(&ts, &ls)?.1;
                Ok((eps, mu, rate, series))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let ratios: Vec<f64> = runs.windows(2).map(|w| w[1].2 / w[0].2).collect();
    ctx.table(
        "energy_growth.csv",
        "Fitted growth of the energy functional, one row per eps.",
        &[
            ("eps", "nonlinearity parameter"),
            ("mu", "shallowness parameter"),
            ("t_end", "final time"),
            ("eps_lambda", "least-squares slope of ln E_s against t"),
            ("lambda", "eps_lambda / eps"),
        ],
        &runs.iter().map(|r| vec![r.0, r.1, horizon / r.0, r.2, r.2 / r.0]).collect::<Vec<_>>(),
    )?;
    ctx.out.plot(
        "energy_growth.svg",
        &LinePlot {
            title: "Energy functional".into(),
            x_label: "t".into(),
            y_label: "E_s".into(),
            log_y: true,
            series: runs.iter().map(|r| (format!("eps = {}", r.0), r.3.clone())).collect(),
            ..LinePlot::default()
        },
    )?;
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Outcome {
        verdicts: vec![
            ctx.verdict("growth-rate ratio (lower)", lo, "ratio_min"),
            ctx.verdict("growth-rate ratio (upper)", hi, "ratio_max"),
        ],
        summary: json!({
            "eps": runs.iter().map(|r| r.0).collect::<Vec<_>>(),
            "eps_lambda": runs.iter().map(|r| r.2).collect::<Vec<_>>(),
            "ratios": ratios,
        }),
    })
}

fn stability_twin(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let p = cfg.regime()?;
    let model = ctx.gn_model(&p)?;
    let grid = ctx.grid()?;
    let u0 = initial_state(&cfg.init(), &grid, &p, &model.consts);
    let amp = cfg.num("run.perturbation");
    let k0 = 2.0 * std::f64::consts::PI / grid.length();
    let bump = Field::from_fn(&grid, |x| (k0 * x).sin());
    let step = StepConfig {
        t_end: cfg.num("run.horizon") / p.eps.max(f64::MIN_POSITIVE),
        ..cfg.step()
    };
    let twins = [0.0, amp, 2.0 * amp];
    let trajs: Vec<Trajectory<f64, State<f64>>> = ctx.pool.install(|| {
        twins
            .par_iter()
            .enumerate()
            .map(|(i, &a)| {
                let start = State {
                    zeta: u0.zeta.add_scaled(a, &bump),
                    v: u0.v.clone(),
                };
                ctx.logged_run(
                    &format!("stability_twin_{i}.csv"),
                    "Twin run; file 0 is unperturbed, files 1 and 2 carry the perturbation and twice it.",
                    &model,
                    &start,
                    &step,
                    |_, _| (),
                )
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let d1 = twin_divergence(&trajs[0].samples, &trajs[1].samples, cfg.num("diag.s"), p.mu, p.eps)?;
    let d2 = twin_divergence(&trajs[0].samples, &trajs[2].samples, cfg.num("diag.s"), p.mu, p.eps)?;
    let growth = d1.differences.iter().copied().fold(0.0, f64::max) / d1.differences[0];
    let linearity = d1
        .differences
        .iter()
        .zip(&d2.differences)
        .map(|(a, b)| (b / (2.0 * a) - 1.0).abs())
        .fold(0.0, f64::max);
    let largest = d2.differences.iter().copied().fold(0.0, f64::max);
    ctx.table(
        "stability_twin.csv",
        "X^s distance of each perturbed twin from the unperturbed run.",
        &[
            ("t", "sample time"),
            ("diff_p", "distance for the perturbation"),
            ("diff_2p", "distance for twice the perturbation"),
        ],
        &d1.times
            .iter()
            .zip(d1.differences.iter().zip(&d2.differences))
            .map(|(&t, (&a, &b))| vec![t, a, b])
            .collect::<Vec<_>>(),
    )?;
    ctx.out.plot(
        "stability_twin.svg",
        &LinePlot {
            title: "Twin-run divergence".into(),
            x_label: "t".into(),
            y_label: "|dU|_{X^s}".into(),
            log_y: true,
            series: vec![
                ("p".into(), d1.times.iter().copied().zip(d1.differences.iter().copied()).collect()),
                ("2p".into(), d2.times.iter().copied().zip(d2.differences.iter().copied()).collect()),
            ],
            ..LinePlot::default()
        },
    )?;
    Ok(Outcome {
        verdicts: vec![
            ctx.verdict("perturbation growth", growth, "growth_max"),
            ctx.verdict("response linearity", linearity, "linearity_max"),
            ctx.verdict("linear regime", largest, "linear_regime_max"),
        ],
        summary: json!({
            "growth": growth,
            "linearity_defect": linearity,
            "max_difference_2p": largest,
            "fitted_rate": d1.rate.map(finite_or_null).unwrap_or(Json::Null),
            "t_end": step.t_end,
        }),
    })
}

fn gn_vs_cl(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let base = cfg.regime()?;
    let grid = ctx.grid()?;
    let ratio = cfg.num("run.eps_per_sqrt_mu");
    let s = cfg.num("diag.s");
    let step = cfg.step();
    let mu_list = cfg.list("sweep.mu_list").to_vec();
    let rows: Vec<Vec<f64>> = ctx.pool.install(|| {
        mu_list
            .par_iter()
            .map(|&mu| {
                let eps = ratio * mu.sqrt();
                if eps > 1.0 {
                    return Err(Error::config(None, Some("run.eps_per_sqrt_mu"), format!("eps = {eps} exceeds 1 at mu = {mu}")));
                }
                let p = base.with_scales(mu, eps);
                let gn = ctx.gn_model(&p)?;
                let cl = ctx.cl_model(&p)?;
                let u0 = initial_state(&cfg.init(), &grid, &p, &gn.consts);
                let cl0 = cl.init(&u0.zeta, &u0.v)?;
                let (a, b) = rayon::join(
                    || ctx.logged_run(&format!("gn_vs_cl_mu{mu:e}_gn.csv"), "Coupled run at one mu.", &gn, &u0, &step, |_, _| ()),
                    || ctx.logged_run(&format!("gn_vs_cl_mu{mu:e}_cl.csv"), "Decoupled run at one mu.", &cl, &cl0, &step, |_, _| ()),
                );
                let (a, b) = (a?, b?);
                let recon = cl.reconstruct(b.last_state())?;
                let err = a.last_state().sub(&recon).xs_norm(s, mu);
                let eps0 = (eps * (p.delta * p.delta - p.gamma).abs()).max(mu);
                Ok(vec![mu, eps, eps0, err, a.steps as f64, b.steps as f64])
            })
            .collect::<Result<Vec<_>>>()
    })?;
    ctx.table(
        "gn_vs_cl.csv",
        "Distance at t_end between the coupled solution and the reconstructed decoupled approximation.",
        &[
            ("mu", "shallowness parameter"),
            ("eps", "nonlinearity parameter"),
            ("eps0", "max(eps |delta^2 - gamma|, mu)"),
            ("error", "X^s norm of U_GN(t_end) - U_CL(t_end)"),
            ("gn_steps", "time steps of the coupled run"),
            ("cl_steps", "time steps of the decoupled run"),
        ],
        &rows,
    )?;
    let eps0: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    let slope = log_log_slope(&eps0, &errs).unwrap_or(f64::NAN);
    ctx.out.plot(
        "gn_vs_cl.svg",
        &LinePlot {
            title: "Coupled vs decoupled".into(),
            x_label: "eps0".into(),
            y_label: "X^s error".into(),
            log_x: true,
            log_y: true,
            series: vec![("error".into(), eps0.iter().copied().zip(errs.iter().copied()).collect())],
        },
    )?;
    Ok(Outcome {
        verdicts: vec![ctx.verdict("convergence slope in eps0", slope, "slope_min")],
        summary: json!({ "slope": finite_or_null(slope), "eps0": eps0, "errors": errs }),
    })
}

fn time_order(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let p = cfg.regime()?;
    let model = ctx.gn_model(&p)?;
    let grid = ctx.grid()?;
    let u0 = initial_state(&cfg.init(), &grid, &p, &model.consts);
    let base = cfg.step();
    let dts = [base.dt, base.dt / 2.0, base.dt / 4.0];
    let finals: Vec<(f64, usize, State<f64>)> = ctx.pool.install(|| {
        dts.par_iter()
            .map(|&dt| {
                let step = StepConfig { dt, ..base };
                let traj = ctx.logged_run(
                    &format!("time_order_dt{dt:e}.csv"),
                    "Coupled run at one step size.",
                    &model,
                    &u0,
                    &step,
                    |_, _| (),
                )?;
                let nominal = (step.t_end / dt - 1e-9).ceil().max(1.0) as usize;
                if traj.steps != nominal {
                    return Err(Error::config(
                        None,
                        Some("step.cfl"),
                        format!("the CFL limit shortened the step at dt = {dt} ({} steps instead of {nominal}); raise step.cfl", traj.steps),
                    ));
                }
                Ok((dt, traj.steps, traj.last_state().clone()))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let s = cfg.num("diag.s");
    let e1 = finals[0].2.sub(&finals[1].2).xs_norm(s, p.mu);
    let e2 = finals[1].2.sub(&finals[2].2).xs_norm(s, p.mu);
    let order = (e1 / e2).log2();
    ctx.table(
        "time_order.csv",
        "Self-convergence of the time stepper; diff is the distance to the run with half the step.",
        &[("dt", "step size"), ("steps", "number of steps"), ("diff", "X^s distance to the next finer run")],
        &[
            vec![finals[0].0, finals[0].1 as f64, e1],
            vec![finals[1].0, finals[1].1 as f64, e2],
        ],
    )?;
    Ok(Outcome {
        verdicts: vec![ctx.verdict("RK4 observed order", order, "order_min")],
        summary: json!({ "order": finite_or_null(order), "differences": [e1, e2], "dt": dts }),
    })
}

/// Hand-derived constants of two parameter points.
pub fn constant_table() -> Result<Vec<(&'static str, &'static str, f64, f64)>> {
    let a = RegimeParams::new(1.0, 0.1, 1.0, 0.0, 0.0)?;
    let ca = derive_constants(&a)?;
    let cla = derive_cl_constants(&a, &ClParams { theta: 1.0, lambda: 0.0 })?;
    let b = RegimeParams::new(1.0, 0.1, 0.5, 0.25, 0.0)?;
    let cb = derive_constants(&b)?;
    let clb = derive_cl_constants(&b, &ClParams::default())?;
    let (sa, sb) = ("gamma=0 delta=1", "gamma=1/4 delta=1/2");
    Ok(vec![
        (sa, "nu_bar", ca.nu_bar, 1.0 / 3.0),
        (sa, "nu", ca.nu, 1.0 / 3.0),
        (sa, "alpha", ca.alpha, 1.0),
        (sa, "beta", ca.beta, 1.0),
        (sa, "kappa1", ca.kappa1, 1.0),
        (sa, "kappa2", ca.kappa2, 3.0),
        (sa, "varsigma", ca.varsigma, 1.0),
        (sa, "kappa", ca.kappa, 2.0 / 3.0),
        (sa, "cl_alpha1", cla.alpha1, 1.5),
        (sa, "cl_alpha2", cla.alpha2, 0.0),
        (sa, "cl_alpha3", cla.alpha3, 0.0),
        (sa, "cl_nu_t", cla.nu_t, 1.0 / 6.0),
        (sa, "cl_nu_x", cla.nu_x, 0.0),
        (sa, "cl_kappa1", cla.kappa1, 1.0 / 6.0),
        (sa, "cl_kappa2", cla.kappa2, 0.25),
        (sb, "nu_bar", cb.nu_bar, 1.0),
        (sb, "alpha", cb.alpha, 4.0 / 3.0),
        (sb, "beta", cb.beta, 0.0),
        (sb, "kappa1", cb.kappa1, -1.0 / 3.0),
        (sb, "kappa2", cb.kappa2, 0.0),
        (sb, "varsigma", cb.varsigma, 8.0 / 9.0),
        (sb, "cl_alpha1", clb.alpha1, 0.0),
    ])
}

fn constants(ctx: &Ctx) -> Result<Outcome> {
    let table = constant_table()?;
    let mut csv = ctx.out.csv(
        "constants.csv",
        "Derived constants against their hand-derived values.",
        &[
            ("point", "parameter point"),
            ("name", "constant"),
            ("computed", "value from the closed formulas"),
            ("expected", "hand-derived value"),
            ("abs_err", "absolute difference"),
        ],
    )?;
    let mut worst: f64 = 0.0;
    for (point, name, got, want) in &table {
        let err = (got - want).abs();
        worst = worst.max(err);
        csv.row(&[point.to_string(), name.to_string(), cell(*got), cell(*want), cell(err)])?;
    }
    Ok(Outcome {
        verdicts: vec![ctx.verdict("constant identities", worst, "abs_err_max")],
        summary: json!({ "constants": table.len(), "max_abs_err": worst }),
    })
}
