//! Bisection for the critical exponent on the known bracket, driven by the
//! phase-plane classifier.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::emden_fowler::{
    classify_profile, extract_c1, extract_c1_direct, extract_c1_from_derivative, to_phase_shared, PhaseTrajectory, PlateauEstimate,
    ShotOutcome,
};
use crate::error::{Error, Result};
use crate::integrator::{Integrator, RadialProfile, SolverOptions, StopCondition};
use crate::params::{Bracket, OpSign, Params};
use crate::quadrature::{integrate_log, Quadrature};
use crate::radial_operator::power_nonlinearity;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalOptions {
    pub p_tol: f64,
    /// Initial classification horizon in log-radius.
    pub t_max: f64,
    pub t_growth: f64,
    /// Hard ceiling on the horizon; `None` picks `min(120, 600/(Ñ-2))`.
    pub t_cap: Option<f64>,
    pub max_iterations: usize,
    /// Run the bisection even when `λ = Λ`.
    pub force_bisection: bool,
    pub solver: SolverOptions,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        CriticalOptions {
            p_tol: 1e-10,
            t_max: 35.0,
            t_growth: 1.5,
            t_cap: None,
            max_iterations: 200,
            force_bisection: false,
            solver: entire_space_solver(),
        }
    }
}

/// Solver settings for shots on the whole space: the profile decays over many
/// decades, so the absolute floor is pushed far below any reachable value.
pub fn entire_space_solver() -> SolverOptions {
    SolverOptions { rel_tol: 1e-10, abs_tol: 1e-30, ..SolverOptions::default() }
}

impl CriticalOptions {
    pub fn with_p_tol(mut self, p_tol: f64) -> Self {
        self.p_tol = p_tol;
        self
    }

    pub fn forced(mut self) -> Self {
        self.force_bisection = true;
        self
    }

    fn cap(&self, params: &Params) -> f64 {
        self.t_cap
            .unwrap_or_else(|| (600.0 / (params.dimension_like() - 2.0)).min(120.0))
            .max(self.t_max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub p: f64,
    pub t_max: f64,
    pub outcome: ShotOutcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalStatus {
    Converged,
    /// Analytic value at `λ = Λ`.
    Exact,
    /// Shots stayed undetermined at the horizon cap before the width target.
    HorizonLimited,
    BudgetExhausted,
}

#[derive(Clone, Debug)]
pub struct CriticalResult {
    pub params: Params,
    pub p_star: f64,
    pub p_tolerance: f64,
    pub bracket: (f64, f64),
    pub status: CriticalStatus,
    pub iterations: usize,
    pub t_max: f64,
    pub history: Vec<HistoryEntry>,
    /// Fast-decay candidate with `u(0) = 1`.
    pub profile: Arc<RadialProfile>,
    pub r0: f64,
    pub c1: PlateauEstimate,
    pub c1_direct: PlateauEstimate,
    pub c1_derivative: PlateauEstimate,
}

/// Flat JSON view of a result.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalSummary {
    pub params: Params,
    pub op_sign: OpSign,
    pub p_star: f64,
    pub p_tolerance: f64,
    pub exact_mode: bool,
    pub status: CriticalStatus,
    pub c1: f64,
    pub c1_err: f64,
    pub c1_direct: f64,
    pub c1_direct_err: f64,
    pub c1_derivative: f64,
    pub c1_derivative_err: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub u_at_r0: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub t_max: f64,
    pub history: Vec<HistoryEntry>,
}

struct Shooter {
    params: Params,
    solver: SolverOptions,
}

impl Shooter {
    fn shoot(&self, p: f64, t_max: f64) -> Result<RadialProfile> {
        Integrator::new(self.params, p)
            .with_options(self.solver)
            .integrate(1.0, StopCondition::EfTime(t_max))
    }
}

pub fn find_critical(params: &Params, p_tol: f64) -> Result<CriticalResult> {
    find_critical_with(params, &CriticalOptions::default().with_p_tol(p_tol))
}

pub fn find_critical_with(params: &Params, opts: &CriticalOptions) -> Result<CriticalResult> {
    if !(opts.p_tol > 0.0) {
        return Err(Error::InvalidParams(format!("p tolerance must be positive (got {})", opts.p_tol)));
    }
    if !(opts.t_max > 0.0) || !(opts.t_growth > 1.0) {
        return Err(Error::InvalidParams("t_max must be positive and t_growth above 1".into()));
    }
    let shooter = Shooter { params: *params, solver: opts.solver };
    let cap = opts.cap(params);
    let n = params.n();

    let (lo0, hi0) = match params.exponent_bracket() {
        Bracket::Exact(p) if !opts.force_bisection => {
            let t_final = (opts.t_max * opts.t_growth).min(cap);
            let profile = Arc::new(shooter.shoot(p, t_final)?);
            return package(params, p, 0.0, (p, p), CriticalStatus::Exact, 0, t_final, Vec::new(), profile);
        }
        Bracket::Exact(_) => ((n + 1.0) / (n - 2.0), (n + 2.0) / (n - 2.0) + 1.0),
        b @ Bracket::Open { .. } => b.shrunk().expect("open bracket"),
    };

    let mut history = Vec::new();
    let mut t_max = opts.t_max;
    // Classify with horizon growth; returns the last outcome.
    let classify_at = |p: f64, t_max: &mut f64, history: &mut Vec<HistoryEntry>| -> Result<ShotOutcome> {
        loop {
            let outcome = classify_profile(&shooter.shoot(p, *t_max)?);
            history.push(HistoryEntry { p, t_max: *t_max, outcome: outcome.clone() });
            if !outcome.is_undetermined() || *t_max >= cap {
                return Ok(outcome);
            }
            *t_max = (*t_max * opts.t_growth).min(cap);
        }
    };

    let lo_out = classify_at(lo0, &mut t_max, &mut history)?;
    let hi_out = classify_at(hi0, &mut t_max, &mut history)?;
    if !lo_out.is_crossing() || !hi_out.is_slow_decay() {
        return Err(Error::BracketViolated {
            lo: lo0,
            hi: hi0,
            lo_outcome: lo_out.label().into(),
            hi_outcome: hi_out.label().into(),
        });
    }

    let (mut lo, mut hi) = (lo0, hi0);
    let mut iterations = 0;
    let status = loop {
        if hi - lo < opts.p_tol {
            break CriticalStatus::Converged;
        }
        if iterations >= opts.max_iterations {
            break CriticalStatus::BudgetExhausted;
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break CriticalStatus::Converged;
        }
        match classify_at(mid, &mut t_max, &mut history)? {
            ShotOutcome::Crossing { .. } => lo = mid,
            ShotOutcome::SlowDecay { .. } => hi = mid,
            ShotOutcome::Undetermined { .. } => break CriticalStatus::HorizonLimited,
        }
    };

    let p_star = 0.5 * (lo + hi);
    let t_final = (t_max * opts.t_growth).min(cap);
    let profile = Arc::new(shooter.shoot(p_star, t_final)?);
    package(params, p_star, hi - lo, (lo0, hi0), status, iterations, t_final, history, profile)
}

#[allow(clippy::too_many_arguments)]
fn package(
    params: &Params,
    p_star: f64,
    p_tolerance: f64,
    bracket: (f64, f64),
    status: CriticalStatus,
    iterations: usize,
    t_max: f64,
    history: Vec<HistoryEntry>,
    profile: Arc<RadialProfile>,
) -> Result<CriticalResult> {
    let r0 = profile.inflection()?;
    let traj = to_phase_shared(profile.clone(), params.exponent_constants(p_star)?)?;
    let c1 = extract_c1(&traj)?;
    let c1_direct = extract_c1_direct(&traj)?;
    let c1_derivative = extract_c1_from_derivative(&traj)?;
    Ok(CriticalResult {
        params: *params,
        p_star,
        p_tolerance,
        bracket,
        status,
        iterations,
        t_max,
        history,
        profile,
        r0,
        c1,
        c1_direct,
        c1_derivative,
    })
}

impl CriticalResult {
    pub fn exact_mode(&self) -> bool {
        self.status == CriticalStatus::Exact
    }

    pub fn converged(&self) -> bool {
        matches!(self.status, CriticalStatus::Converged | CriticalStatus::Exact | CriticalStatus::HorizonLimited)
    }

    pub fn trajectory(&self) -> Result<PhaseTrajectory> {
        to_phase_shared(self.profile.clone(), self.params.exponent_constants(self.p_star)?)
    }

    /// `U(R0)`.
    pub fn u_at_r0(&self) -> f64 {
        self.profile.evaluate(self.r0).map(|v| v.0).unwrap_or(f64::NAN)
    }

    /// Crossing entries all lie below slow-decay entries.
    pub fn history_consistent(&self) -> bool {
        let max_cross = self
            .history
            .iter()
            .filter(|h| h.outcome.is_crossing())
            .map(|h| h.p)
            .fold(f64::NEG_INFINITY, f64::max);
        let min_slow = self
            .history
            .iter()
            .filter(|h| h.outcome.is_slow_decay())
            .map(|h| h.p)
            .fold(f64::INFINITY, f64::min);
        max_cross < min_slow
    }

    /// Re-extract `c1` from a shot with the horizon stretched by `factor`.
    pub fn c1_with_horizon(&self, factor: f64) -> Result<PlateauEstimate> {
        let profile = Integrator::new(self.params, self.p_star)
            .with_options(*self.profile.options())
            .integrate(1.0, StopCondition::EfTime(self.t_max * factor))?;
        extract_c1(&to_phase_shared(Arc::new(profile), self.params.exponent_constants(self.p_star)?)?)
    }

    /// Radius where the stored profile hands over to the power-law tail
    /// `c1 r^{2-Ñ}`: the end of the derivative plateau.
    pub fn tail_radius(&self) -> f64 {
        self.c1_derivative.t_end.exp().clamp(self.r0, self.profile.truncation_radius())
    }

    /// `∫_{a}^{∞} U^q r^m dr` for `a ≥ R0`: quadrature on the profile up to
    /// [`tail_radius`](Self::tail_radius), then the closed-form tail.
    pub fn outer_integral(&self, a: f64, q: f64, m: f64) -> Result<Quadrature> {
        let nt = self.params.dimension_like();
        self.outer_quadrature(a, |u, _, r| power_nonlinearity(u, q) * r.powf(m), self.c1.value.powf(q), (2.0 - nt) * q + m, q)
    }

    /// `∫_a^∞ g(U, U', r) dr` where `g ~ coef r^e` along the tail. `weight` is the
    /// power of `c1` in `coef`, used to propagate the `c1` error.
    pub fn outer_quadrature<G: Fn(f64, f64, f64) -> f64>(&self, a: f64, g: G, coef: f64, e: f64, weight: f64) -> Result<Quadrature> {
        if !(e < -1.0) {
            return Err(Error::DivergentTail(e));
        }
        let b = self.tail_radius();
        let mut out = if b > a {
            log_radius_integral(&self.profile, a, b, g)?
        } else {
            Quadrature { value: 0.0, error: 0.0, evaluations: 0 }
        };
        let start = a.max(b);
        let tail = -coef * start.powf(e + 1.0) / (e + 1.0);
        out.value += tail;
        out.error += tail.abs() * weight * self.c1.err / self.c1.value;
        Ok(out)
    }

    /// `∫_a^b U^q r^m dr` on the stored profile, integrated in `log r`.
    pub fn profile_integral(&self, a: f64, b: f64, q: f64, m: f64) -> Result<Quadrature> {
        log_radius_integral(&self.profile, a, b, |u, _, r| power_nonlinearity(u, q) * r.powf(m))
    }

    /// Constant offset between the stored profile and `U` near the handover radius `b`:
    /// `c1 b^{2-Ñ} - u(b)`. A slightly off-critical shot differs from `U` there by a
    /// constant, which `u'` does not see.
    pub fn tail_shift(&self) -> f64 {
        let b = self.tail_radius();
        let k = self.params.dimension_like() - 2.0;
        match self.profile.evaluate(b) {
            Ok((u, _)) => self.c1.value * b.powf(-k) - u,
            Err(_) => 0.0,
        }
    }

    /// `(U, U')` at any `r ≥ 0`: the profile corrected by [`tail_shift`](Self::tail_shift)
    /// up to the tail radius, `c1 r^{2-Ñ}` beyond.
    pub fn u_extended(&self, r: f64) -> Result<(f64, f64)> {
        let b = self.tail_radius();
        if r <= b {
            let (u, du) = self.profile.evaluate(r)?;
            return Ok((u + self.tail_shift(), du));
        }
        let k = self.params.dimension_like() - 2.0;
        let u = self.c1.value * r.powf(-k);
        Ok((u, -k * u / r))
    }

    /// The fast-decay profile shot from `u(0) = α` at the same exponent, processed like a search result.
    pub fn rescaled(&self, alpha: f64) -> Result<CriticalResult> {
        let t = (self.profile.truncation_radius() / self.profile.length_scale()).ln();
        let shot = Integrator::new(self.params, self.p_star).with_options(*self.profile.options()).integrate(alpha, StopCondition::EfTime(t))?;
        let mut out = from_profile(&self.params, self.p_star, Arc::new(shot))?;
        out.p_tolerance = self.p_tolerance;
        out.bracket = self.bracket;
        out.status = self.status;
        out.t_max = self.t_max;
        Ok(out)
    }

    pub fn summary(&self) -> CriticalSummary {
        CriticalSummary {
            params: self.params,
            op_sign: self.params.op,
            p_star: self.p_star,
            p_tolerance: self.p_tolerance,
            exact_mode: self.exact_mode(),
            status: self.status,
            c1: self.c1.value,
            c1_err: self.c1.err,
            c1_direct: self.c1_direct.value,
            c1_direct_err: self.c1_direct.err,
            c1_derivative: self.c1_derivative.value,
            c1_derivative_err: self.c1_derivative.err,
            r0: self.r0,
            u_at_r0: self.u_at_r0(),
            bracket: self.bracket,
            iterations: self.iterations,
            t_max: self.t_max,
            history: self.history.clone(),
        }
    }
}

/// `∫_a^b g(u, u', r) dr` on a profile, integrated in `log r`.
pub fn log_radius_integral<G: Fn(f64, f64, f64) -> f64>(profile: &RadialProfile, a: f64, b: f64, g: G) -> Result<Quadrature> {
    integrate_log(
        |r| match profile.evaluate(r) {
            Ok((u, du)) => g(u, du, r),
            Err(_) => f64::NAN,
        },
        a,
        b,
        1e-11,
        0.0,
    )
}

/// Wrap an entire-space shot at exponent `p` (any model) as a result with status `Exact`.
pub fn from_profile(params: &Params, p: f64, profile: Arc<RadialProfile>) -> Result<CriticalResult> {
    package(params, p, 0.0, (p, p), CriticalStatus::Exact, 0, 0.0, Vec::new(), profile)
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderingReport {
    pub p_minus: f64,
    pub p_plus: f64,
    pub sobolev: f64,
    /// `λ = Λ`: all three coincide.
    pub degenerate: bool,
    pub holds: bool,
}

/// Check `p*- < (N+2)/(N-2) < p*+` from two results on the same `(λ, Λ, N)`.
pub fn critical_ordering_check(plus: &CriticalResult, minus: &CriticalResult) -> Result<OrderingReport> {
    let (a, b) = (plus.params, minus.params);
    if a.op != OpSign::Plus || b.op != OpSign::Minus || a.lambda != b.lambda || a.big_lambda != b.big_lambda || a.dim != b.dim
    {
        return Err(Error::InvalidParams("ordering check needs M+ and M- results on the same (λ, Λ, N)".into()));
    }
    let sobolev = a.sobolev_exponent();
    let degenerate = a.is_laplacian();
    let holds = if degenerate {
        let tol = plus.p_tolerance.max(minus.p_tolerance).max(1e-12);
        (plus.p_star - sobolev).abs() <= tol && (minus.p_star - sobolev).abs() <= tol
    } else {
        minus.p_star < sobolev && sobolev < plus.p_star
    };
    let report = OrderingReport { p_minus: minus.p_star, p_plus: plus.p_star, sobolev, degenerate, holds };
    if !holds {
        return Err(Error::OrderingViolated(format!(
            "p*- = {}, (N+2)/(N-2) = {sobolev}, p*+ = {}",
            minus.p_star, plus.p_star
        )));
    }
    Ok(report)
}
