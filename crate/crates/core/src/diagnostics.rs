//! Energy functional, norm equivalence, growth-rate fits and twin-run metrics.

use crate::elliptic::TContext;
use crate::error::{Error, Result};
use crate::gn_model::DepthFunction;
use crate::grid::{Field, State};
use crate::params::{check_h1, check_h2, ModelConstants, RegimeParams};
use crate::scalar::Real;

/// One row of the diagnostics stream.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagRecord<T> {
    pub t: T,
    pub e_s: T,
    pub x_s: T,
    /// `mean(zeta)`.
    pub mass: T,
    pub mean_v: T,
    pub h1_min: T,
    pub h2_min: T,
    pub q1_min: T,
    pub q2_min: T,
    /// Elliptic iterations spent since the previous record.
    pub solver_iters: usize,
}

impl<T: Real> DiagRecord<T> {
    pub const COLUMNS: [&'static str; 10] = [
        "t", "E_s", "X_s", "mass", "mean_v", "h1_min", "h2_min", "q1_min", "q2_min", "solver_iters",
    ];

    pub fn csv_row(&self) -> String {
        use crate::grid::fmt17;
        [self.t, self.e_s, self.x_s, self.mass, self.mean_v, self.h1_min, self.h2_min, self.q1_min, self.q2_min]
            .iter()
            .map(|&x| fmt17(x))
            .chain(std::iter::once(self.solver_iters.to_string()))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Which normalization of the velocity block the energy uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EnergyForm {
    /// `(Λ^s v, T Λ^s v) / (gamma + delta)`.
    #[default]
    Es,
    /// `(Λ^s v, T Λ^s v)` with no normalization, as in the symmetrizer form.
    Symmetrizer,
}

/// `E^s(U)` with coefficients frozen at the reference elevation `zeta_ref`:
/// `E^2 = (Λ^s zeta, (Q0/f) Λ^s zeta) + (Λ^s v, T Λ^s v) / (gamma + delta)`.
pub fn energy_es<T: Real>(
    u: &State<T>,
    zeta_ref: &Field<T>,
    s: T,
    p: &RegimeParams<T>,
    c: &ModelConstants<T>,
    form: EnergyForm,
) -> Result<T> {
    if !u.zeta.same_grid(zeta_ref) {
        return Err(Error::GridMismatch);
    }
    let h1 = check_h1(zeta_ref, p);
    if !h1.ok {
        return Err(Error::H1Violated {
            h1_min: h1.h1_min.to_f64_lossy(),
            h2_min: h1.h2_min.to_f64_lossy(),
        });
    }
    let ctx = TContext::new(zeta_ref, p, c);
    ctx.ensure_elliptic()?;

    let depth = DepthFunction::new(p);
    let gd = p.gamma_plus_delta();
    let weight = zeta_ref.zip_map(ctx.q1(), |z, q1| gd * q1 / depth.value(p.eps * z));
    let lz = u.zeta.lambda_s(s);
    let lv = u.v.lambda_s(s);
    let zeta_block = lz.inner(&(&weight * &lz));
    let v_block = lv.inner(&ctx.apply(&lv));
    let v_block = match form {
        EnergyForm::Es => v_block / gd,
        EnergyForm::Symmetrizer => v_block,
    };
    Ok((zeta_block + v_block).max(T::zero()).sqrt())
}

/// Self-energy: the reference elevation is the state's own.
pub fn self_energy<T: Real>(u: &State<T>, s: T, p: &RegimeParams<T>, c: &ModelConstants<T>) -> Result<T> {
    energy_es(u, &u.zeta, s, p, c, EnergyForm::Es)
}

/// `E^s(U) / |U|_{X^s}`.
pub fn equivalence_ratio<T: Real>(
    u: &State<T>,
    zeta_ref: &Field<T>,
    s: T,
    p: &RegimeParams<T>,
    c: &ModelConstants<T>,
) -> Result<T> {
    let norm = u.xs_norm(s, p.mu);
    if norm == T::zero() {
        return Err(Error::ZeroState);
    }
    Ok(energy_es(u, zeta_ref, s, p, c, EnergyForm::Es)? / norm)
}

/// Observed range of [`equivalence_ratio`] over a family of states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioRange<T> {
    pub lo: T,
    pub hi: T,
}

pub fn equivalence_sweep<'a, T: Real>(
    states: impl IntoIterator<Item = &'a State<T>>,
    zeta_ref: &Field<T>,
    s: T,
    p: &RegimeParams<T>,
    c: &ModelConstants<T>,
) -> Result<RatioRange<T>> {
    let mut range: Option<RatioRange<T>> = None;
    for u in states {
        let r = equivalence_ratio(u, zeta_ref, s, p, c)?;
        range = Some(match range {
            None => RatioRange { lo: r, hi: r },
            Some(q) => RatioRange {
                lo: q.lo.min(r),
                hi: q.hi.max(r),
            },
        });
    }
    range.ok_or_else(|| Error::Degenerate("empty sweep".into()))
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub fn linear_fit<T: Real>(xs: &[T], ys: &[T]) -> Result<(T, T)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least two paired samples, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = T::count(xs.len());
    let mx = xs.iter().fold(T::zero(), |a, &x| a + x) / n;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
    }
    if sxx == T::zero() {
        return Err(Error::Degenerate("abscissae are all equal".into()));
    }
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope<T: Real>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.iter().chain(ys).any(|&v| !(v > T::zero())) {
        return Err(Error::Degenerate("log-log fit needs positive data".into()));
    }
    let lx: Vec<T> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = ys.iter().map(|y| y.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.1)
}

/// Fitted exponent `λ` of `E(t) ~ E0 exp(eps λ t)`.
pub fn fit_growth_rate<T: Real>(series: &[(T, T)], eps: T) -> Result<T> {
    if series.len() < 3 {
        return Err(Error::Degenerate(format!("need at least 3 samples, got {}", series.len())));
    }
    if series.iter().any(|&(_, e)| !(e > T::zero())) {
        return Err(Error::Degenerate("energies must be positive".into()));
    }
    if !(eps > T::zero()) {
        return Err(Error::Degenerate("growth rate is normalized by eps, which must be positive".into()));
    }
    let ts: Vec<T> = series.iter().map(|&(t, _)| t).collect();
    let ls: Vec<T> = series.iter().map(|&(_, e)| e.ln()).collect();
    Ok(linear_fit(&ts, &ls)?.1 / eps)
}

/// `|U1 - U2|_{X^s}` at each shared sample time.
#[derive(Clone, Debug, PartialEq)]
pub struct TwinDivergence<T> {
    pub times: Vec<T>,
    pub differences: Vec<T>,
    /// Fitted `λ` of the difference series, when it is positive throughout.
    pub rate: Option<T>,
}

pub fn twin_divergence<T: Real>(
    a: &[(T, State<T>)],
    b: &[(T, State<T>)],
    s: T,
    mu: T,
    eps: T,
) -> Result<TwinDivergence<T>> {
    if a.len() != b.len() {
        return Err(Error::Mismatch(format!("{} samples against {}", a.len(), b.len())));
    }
    let mut times = Vec::with_capacity(a.len());
    let mut differences = Vec::with_capacity(a.len());
    for ((ta, ua), (tb, ub)) in a.iter().zip(b) {
        if ta != tb {
            return Err(Error::Mismatch(format!("sample times {ta} and {tb} differ")));
        }
        if ua.grid() != ub.grid() {
            return Err(Error::Mismatch("grids differ".into()));
        }
        times.push(*ta);
        differences.push(ua.sub(ub).xs_norm(s, mu));
    }
    let series: Vec<(T, T)> = times.iter().copied().zip(differences.iter().copied()).collect();
    let rate = fit_growth_rate(&series, eps).ok();
    Ok(TwinDivergence {
        times,
        differences,
        rate,
    })
}

/// Builds a full record for a Green-Naghdi state. Margins are reported, not enforced.
pub fn gn_record<T: Real>(
    u: &State<T>,
    t: T,
    s: T,
    form: EnergyForm,
    p: &RegimeParams<T>,
    c: &ModelConstants<T>,
    solver_iters: usize,
) -> DiagRecord<T> {
    let d = check_h1(&u.zeta, p);
    let q = check_h2(&u.zeta, p, c);
    let e_s = if d.ok && q.ok {
        energy_es(u, &u.zeta, s, p, c, form).unwrap_or_else(|_| T::nan())
    } else {
        T::nan()
    };
    DiagRecord {
        t,
        e_s,
        x_s: u.xs_norm(s, p.mu),
        mass: u.zeta.mean(),
        mean_v: u.v.mean(),
        h1_min: d.h1_min,
        h2_min: d.h2_min,
        q1_min: q.q1_min,
        q2_min: q.q2_min,
        solver_iters,
    }
}
