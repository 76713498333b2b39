//! Positive radial Dirichlet solutions on the unit ball for `p = p* - ε`,
//! realized by rescaling one normalized shot, and the concentration sweeps.
//!
//! With `ũ` the shot from `u(0) = 1` and `R` its first zero, the ball solution
//! is `u(r) = M ũ(R r)` with `M = R^{2/(p-1)}`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::critical::CriticalResult;
use crate::emden_fowler::classify_profile;
use crate::error::{Error, Result};
use crate::integrator::{Integrator, Node, RadialProfile, SolverOptions, StopCondition};
use crate::params::{Bracket, Params};
use crate::radial_operator::{pucci_apply, power_nonlinearity};

/// Horizon (log-radius) for the shot that must reach its first zero.
const BALL_HORIZON: f64 = 120.0;

#[derive(Clone, Debug)]
pub struct BallSolution {
    pub params: Params,
    pub eps: Option<f64>,
    pub p: f64,
    /// First zero of the normalized shot.
    pub big_r: f64,
    pub m: f64,
    /// Inflection of `u` in `(0, 1)`.
    pub r0: f64,
    /// Inflection of `ũ`: `R r0`.
    pub r0_tilde: f64,
    pub du_at_1: f64,
    /// Shot height the solution was built from.
    pub u0: f64,
    shot: Arc<RadialProfile>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BallSummary {
    pub params: Params,
    pub eps: Option<f64>,
    pub p_eps: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    #[serde(rename = "M_eps")]
    pub m: f64,
    pub r0_eps: f64,
    pub r0_tilde: f64,
    pub u_at_r0: f64,
    pub du_at_1: f64,
    pub ode_residual: f64,
    pub single_inflection: bool,
}

pub fn solver_for_ball() -> SolverOptions {
    SolverOptions { rel_tol: 1e-11, abs_tol: 1e-30, ..SolverOptions::default() }
}

/// Solve on the unit ball for exponent `p`.
pub fn solve_ball(params: &Params, p: f64) -> Result<BallSolution> {
    solve_ball_from(params, p, 1.0, solver_for_ball())
}

/// Solve for `p = p* - ε` using a critical result.
pub fn solve_ball_eps(crit: &CriticalResult, eps: f64) -> Result<BallSolution> {
    solve_ball_eps_with(crit, eps, solver_for_ball())
}

pub fn solve_ball_eps_with(crit: &CriticalResult, eps: f64, solver: SolverOptions) -> Result<BallSolution> {
    check_eps(crit, eps)?;
    let mut ball = solve_ball_from(&crit.params, crit.p_star - eps, 1.0, solver)?;
    ball.eps = Some(eps);
    Ok(ball)
}

fn check_eps(crit: &CriticalResult, eps: f64) -> Result<()> {
    let floor = 100.0 * crit.p_tolerance;
    if !(eps > 0.0) || eps < floor {
        return Err(Error::InvalidParams(format!("eps = {eps} below the floor {floor:e} (100 x p tolerance)")));
    }
    if crit.p_star - eps <= 1.0 {
        return Err(Error::InvalidExponent { p: crit.p_star - eps, reason: "p must exceed 1".into() });
    }
    Ok(())
}

/// Solve by shooting from height `u0`; the result does not depend on `u0`.
pub fn solve_ball_from(params: &Params, p: f64, u0: f64, solver: SolverOptions) -> Result<BallSolution> {
    if !(p > 1.0) {
        return Err(Error::InvalidExponent { p, reason: "p must exceed 1".into() });
    }
    match params.exponent_bracket() {
        Bracket::Exact(ps) if p >= ps => return Err(Error::Supercritical { p, p_star: ps }),
        Bracket::Open { hi, .. } if p >= hi => return Err(Error::Supercritical { p, p_star: hi }),
        _ => {}
    }
    let shot = Integrator::new(*params, p).with_options(solver).integrate(u0, StopCondition::EfTime(BALL_HORIZON))?;
    let big_r = match classify_profile(&shot) {
        crate::emden_fowler::ShotOutcome::Crossing { r } => r,
        _ => {
            let p_star = match params.exponent_bracket() {
                Bracket::Exact(v) => v,
                Bracket::Open { lo, .. } => lo,
            };
            return Err(Error::Supercritical { p, p_star });
        }
    };
    let m = u0 * big_r.powf(2.0 / (p - 1.0));
    let r0_tilde = shot.inflection()?;
    let r0 = r0_tilde / big_r;
    let (_, du_end) = shot.evaluate(big_r)?;
    let du_at_1 = (m / u0) * big_r * du_end;
    Ok(BallSolution { params: *params, eps: None, p, big_r, m, r0, r0_tilde, du_at_1, u0, shot: Arc::new(shot) })
}

impl BallSolution {
    pub fn shot(&self) -> &RadialProfile {
        &self.shot
    }

    /// `(u, u')` at `r ∈ [0, 1]`.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::OutOfRange { r, max: 1.0 });
        }
        let s = (self.big_r * r).min(self.big_r);
        let (v, dv) = self.shot.evaluate(s)?;
        let k = self.m / self.u0;
        Ok((k * v, k * self.big_r * dv))
    }

    pub fn ddu(&self, r: f64) -> Result<f64> {
        let s = (self.big_r * r).min(self.big_r);
        Ok(self.m / self.u0 * self.big_r * self.big_r * self.shot.ddu_at(s)?)
    }

    /// Rescaled `ũ(r) = u(r / M^{(p-1)/2}) / M` on `[0, R]`.
    pub fn rescaled(&self, r: f64) -> Result<(f64, f64)> {
        let (v, dv) = self.shot.evaluate(r)?;
        Ok((v / self.u0, dv / self.u0))
    }

    pub fn rescaled_ddu(&self, r: f64) -> Result<f64> {
        Ok(self.shot.ddu_at(r)? / self.u0)
    }

    /// Uniform grid of `n + 1` nodes on `[0, 1]`.
    pub fn grid(&self, n: usize) -> Result<Vec<Node>> {
        (0..=n)
            .map(|i| {
                let r = i as f64 / n as f64;
                let (u, du) = self.eval(r)?;
                Ok(Node { r, u, du, ddu: self.ddu(r)? })
            })
            .collect()
    }

    /// Largest `|M(D²u) + u^p| / u(0)^p` over a grid on `(0, 1]`.
    pub fn ode_residual(&self) -> Result<f64> {
        let dim = self.params.dim as usize;
        let scale = self.m.powf(self.p);
        let mut worst = 0.0f64;
        for i in 1..=400 {
            let r = i as f64 / 400.0;
            let (u, du) = self.eval(r)?;
            let ddu = self.ddu(r)?;
            let mut eigs = vec![du / r; dim];
            eigs[0] = ddu;
            let res = pucci_apply(&self.params, &eigs) + power_nonlinearity(u, self.p);
            worst = worst.max(res.abs() / scale);
        }
        Ok(worst)
    }

    pub fn u_at_r0(&self) -> f64 {
        self.eval(self.r0).map(|v| v.0).unwrap_or(f64::NAN)
    }

    pub fn summary(&self) -> BallSummary {
        BallSummary {
            params: self.params,
            eps: self.eps,
            p_eps: self.p,
            big_r: self.big_r,
            m: self.m,
            r0_eps: self.r0,
            r0_tilde: self.r0_tilde,
            u_at_r0: self.u_at_r0(),
            du_at_1: self.du_at_1,
            ode_residual: self.ode_residual().unwrap_or(f64::NAN),
            single_inflection: self.shot.events().single_inflection(),
        }
    }

    /// CSV on a uniform grid over `[0, 1]`, header `r,u,du,ddu`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W, n: usize) -> Result<()> {
        writeln!(w, "r,u,du,ddu")?;
        for node in self.grid(n)? {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", node.r, node.u, node.du, node.ddu)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

pub fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Polynomial extrapolation to `ε = 0` through the last `order + 1` points `(ε, value)`.
pub fn richardson(points: &[(f64, f64)], order: usize) -> f64 {
    if points.is_empty() {
        return f64::NAN;
    }
    let tail = &points[points.len().saturating_sub(order + 1)..];
    let xs: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let mut t: Vec<f64> = tail.iter().map(|p| p.1).collect();
    for level in 1..tail.len() {
        for i in 0..tail.len() - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            t[i] = (xi * t[i + 1] - xj * t[i]) / (xi - xj);
        }
    }
    t[0]
}

pub(crate) fn fmt_seq(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6e}")).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub p_eps: f64,
    #[serde(rename = "M_eps")]
    pub m: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r0_eps: f64,
    pub r0_tilde: f64,
    pub u_r0_over_m: f64,
    pub du_at_1: f64,
    /// `sup_{r ≥ r1} u_ε` for each `r1`.
    pub sup_outer: Vec<(f64, f64)>,
    /// `(K, min(K, R), sup_{[0, min(K,R)]} |ũ_ε - U|)`.
    pub sup_rescaled_diff: Vec<(f64, f64, f64)>,
    /// `sup_{[0.1,1]} |M^κ u_ε - c1 (r^{2-Ñ} - 1)|`.
    pub green_diff: f64,
    pub invariance_lhs: f64,
    pub invariance_rhs: f64,
    /// `sup_{[r̃0, R]} ũ'(r) r^{Ñ-1}`.
    pub flux_sup: f64,
    pub decay_bound: f64,
    pub derivative_bound: f64,
    pub decay_envelope_violations: usize,
    pub decay_envelope_worst: f64,
    /// `ũ(r_ε) r_ε^{Ñ-2}` for `r_ε = √R` (limit `c1`) and `r_ε = R/2` (limit `c1(1 - 2^{2-Ñ})`).
    pub conv_sqrt: f64,
    pub conv_half: f64,
    pub ode_residual: f64,
    pub single_inflection: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub params: Params,
    pub p_star: f64,
    pub c1: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub u_at_r0: f64,
    /// Decay-envelope constant built from the limit profile (with slack).
    pub envelope_constant: f64,
    pub excluded: Vec<(f64, String)>,
    pub rows: Vec<SweepRow>,
    pub checks: Vec<Check>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Final over initial `sup_{[r1, 1]} u_ε` for `r1 = OUTER_RADII[j]`.
    pub fn outer_decay_ratio(&self, j: usize) -> Option<f64> {
        Some(self.rows.last()?.sup_outer.get(j)?.1 / self.rows.first()?.sup_outer.get(j)?.1)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// CSV table, one row per ε.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "eps,p_eps,M_eps,R,r0_eps,r0_tilde,u_r0_over_m,du_at_1,green_diff,flux_sup")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.eps, r.p_eps, r.m, r.big_r, r.r0_eps, r.r0_tilde, r.u_r0_over_m, r.du_at_1, r.green_diff, r.flux_sup
            )?;
        }
        Ok(())
    }
}

pub const OUTER_RADII: [f64; 3] = [0.1, 0.25, 0.5];
pub const RESCALED_WINDOWS: [f64; 3] = [1.0, 5.0, 10.0];
/// Slack on constants taken from the limit profile.
pub const LIMIT_SLACK: f64 = 0.1;

/// Solve each ε in parallel; rows ordered as `eps_list`. Values below the floor are excluded.
pub fn solve_sweep(crit: &CriticalResult, eps_list: &[f64]) -> (Vec<BallSolution>, Vec<(f64, String)>) {
    let results: Vec<(f64, Result<BallSolution>)> =
        eps_list.par_iter().map(|&e| (e, solve_ball_eps(crit, e))).collect();
    let mut balls = Vec::new();
    let mut excluded = Vec::new();
    for (e, r) in results {
        match r {
            Ok(b) => balls.push(b),
            Err(err) => excluded.push((e, err.to_string())),
        }
    }
    (balls, excluded)
}

/// Decay-envelope constant `C = C_b / ((Ñ-2) C_e^{Ñ/(Ñ-2)})` from the limit profile:
/// `C_b = -U'(R0) R0^{Ñ-1}`, `C_e = sup_{r ≥ R0} U r^{Ñ-2}`.
pub fn envelope_constant(crit: &CriticalResult) -> Result<f64> {
    let nt = crit.params.dimension_like();
    let (_, du0) = crit.profile.evaluate(crit.r0)?;
    let cb = -du0 * crit.r0.powf(nt - 1.0);
    let b = crit.tail_radius();
    let mut ce = crit.c1.value;
    let n = 2000;
    for i in 0..=n {
        let r = crit.r0 * (b / crit.r0).powf(i as f64 / n as f64);
        let (u, _) = crit.profile.evaluate(r)?;
        ce = ce.max(u * r.powf(nt - 2.0));
    }
    Ok(cb / ((nt - 2.0) * ce.powf(nt / (nt - 2.0))))
}

fn sweep_row(crit: &CriticalResult, ball: &BallSolution, env_c: f64) -> Result<SweepRow> {
    let nt = crit.params.dimension_like();
    let k = nt - 2.0;
    let p = ball.p;
    let eps = ball.eps.unwrap_or(crit.p_star - p);
    let kappa = (p * k - nt) / 2.0;
    let big_r = ball.big_r;

    let sup_outer = OUTER_RADII
        .iter()
        .map(|&r1| {
            let n = 400;
            let mut best = 0.0f64;
            for i in 0..=n {
                let r = r1 + (1.0 - r1) * i as f64 / n as f64;
                best = best.max(ball.eval(r)?.0);
            }
            Ok((r1, best))
        })
        .collect::<Result<Vec<_>>>()?;

    let sup_rescaled_diff = RESCALED_WINDOWS
        .iter()
        .map(|&kw| {
            let keff = kw.min(big_r).min(crit.profile.truncation_radius());
            let n = 2000;
            let mut worst = 0.0f64;
            for i in 0..=n {
                let r = keff * i as f64 / n as f64;
                let (v, _) = ball.rescaled(r)?;
                let (uu, _) = crit.profile.evaluate(r)?;
                worst = worst.max((v - uu).abs());
            }
            Ok((kw, keff, worst))
        })
        .collect::<Result<Vec<_>>>()?;

    let mk = ball.m.powf(kappa);
    let mut green_diff = 0.0f64;
    for i in 0..=900 {
        let r = 0.1 + 0.9 * i as f64 / 900.0;
        let (u, _) = ball.eval(r)?;
        green_diff = green_diff.max((mk * u - crit.c1.value * (r.powf(-k) - 1.0)).abs());
    }

    let two_over = 2.0 / (p - 1.0);
    let invariance_lhs = ball.r0.powf(two_over) * ball.eval(ball.r0)?.0;
    let invariance_rhs = ball.r0_tilde.powf(two_over) * ball.rescaled(ball.r0_tilde)?.0;

    let mut flux_sup = f64::NEG_INFINITY;
    let mut decay_bound = 0.0f64;
    let mut derivative_bound = 0.0f64;
    let n = 2000;
    for i in 0..=n {
        let r = big_r * i as f64 / n as f64;
        let (v, dv) = ball.rescaled(r)?;
        decay_bound = decay_bound.max(v * r.powf(k));
        derivative_bound = derivative_bound.max(dv.abs() * r.powf(nt - 1.0));
        if r >= ball.r0_tilde && i < n {
            flux_sup = flux_sup.max(dv * r.powf(nt - 1.0));
        }
    }

    let (ur0, _) = ball.eval(ball.r0)?;
    let c_used = (1.0 - LIMIT_SLACK) * env_c;
    let mut violations = 0;
    let mut worst_ratio = 0.0f64;
    for i in 0..=1000 {
        let r = ball.r0 + (1.0 - ball.r0) * i as f64 / 1000.0;
        let (u, _) = ball.eval(r)?;
        let bound = ur0
            * (1.0
                + c_used * ur0.powf(2.0 / k) * ball.m.powf(p - nt / k) * (r * r - ball.r0 * ball.r0))
                .powf(-k / 2.0);
        let ratio = u / bound;
        worst_ratio = worst_ratio.max(ratio);
        if u > bound * (1.0 + 1e-12) {
            violations += 1;
        }
    }

    let rs = big_r.sqrt();
    let conv_sqrt = ball.rescaled(rs)?.0 * rs.powf(k);
    let rh = big_r / 2.0;
    let conv_half = ball.rescaled(rh)?.0 * rh.powf(k);

    Ok(SweepRow {
        eps,
        p_eps: p,
        m: ball.m,
        big_r,
        r0_eps: ball.r0,
        r0_tilde: ball.r0_tilde,
        u_r0_over_m: ur0 / ball.m,
        du_at_1: ball.du_at_1,
        sup_outer,
        sup_rescaled_diff,
        green_diff,
        invariance_lhs,
        invariance_rhs,
        flux_sup,
        decay_bound,
        derivative_bound,
        decay_envelope_violations: violations,
        decay_envelope_worst: worst_ratio,
        conv_sqrt,
        conv_half,
        ode_residual: ball.ode_residual()?,
        single_inflection: ball.shot.events().single_inflection(),
    })
}

/// Concentration sweep over decreasing ε.
pub fn concentration_sweep(crit: &CriticalResult, eps_list: &[f64]) -> Result<ConvergenceReport> {
    let mut sorted = eps_list.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.dedup();
    let (balls, excluded) = solve_sweep(crit, &sorted);
    let env_c = envelope_constant(crit)?;
    let rows: Vec<SweepRow> = balls.par_iter().map(|b| sweep_row(crit, b, env_c)).collect::<Result<_>>()?;
    let nt = crit.params.dimension_like();
    let u_r0 = crit.u_at_r0();

    let col = |f: &dyn Fn(&SweepRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let mut checks = Vec::new();
    let ms = col(&|r| r.m);
    checks.push(Check::new("M_eps increasing", strictly_increasing(&ms), fmt_seq(&ms)));
    for (j, r1) in OUTER_RADII.iter().enumerate() {
        let v = col(&|r| r.sup_outer[j].1);
        checks.push(Check::new(format!("sup u on [{r1}, 1] decreasing"), strictly_decreasing(&v), fmt_seq(&v)));
    }
    for (j, kw) in RESCALED_WINDOWS.iter().enumerate() {
        let v = col(&|r| r.sup_rescaled_diff[j].2);
        checks.push(Check::new(format!("sup |u~ - U| on [0, {kw}] decreasing"), strictly_decreasing(&v), fmt_seq(&v)));
    }
    let g = col(&|r| r.green_diff);
    checks.push(Check::new("Green-function limit error decreasing", strictly_decreasing(&g), fmt_seq(&g)));

    let r0t = col(&|r| (r.r0_tilde - crit.r0).abs());
    checks.push(Check::new("rescaled inflection approaches R0", strictly_decreasing(&r0t), fmt_seq(&r0t)));
    let ur = col(&|r| (r.u_r0_over_m - u_r0).abs());
    checks.push(Check::new("u(r0)/M approaches U(R0)", strictly_decreasing(&ur), fmt_seq(&ur)));
    let inv = col(&|r| ((r.invariance_lhs - r.invariance_rhs) / r.invariance_rhs).abs());
    checks.push(Check::new("scaling identity at the inflection", inv.iter().all(|&d| d <= 1e-10), fmt_seq(&inv)));

    let flux = col(&|r| r.flux_sup);
    let flux_max = flux.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new("u~' r^(N~-1) bounded away from 0", flux_max < 0.0, format!("max {flux_max:.6e}")));
    let bound_c = rows.iter().map(|r| r.decay_bound.max(r.derivative_bound)).fold(0.0, f64::max);
    checks.push(Check::new("uniform decay bounds", bound_c.is_finite(), format!("C = {bound_c:.6e}")));
    let viol: usize = rows.iter().map(|r| r.decay_envelope_violations).sum();
    checks.push(Check::new("decay envelope holds", viol == 0, format!("{viol} violations, C = {env_c:.6e}")));

    let cs = col(&|r| (r.conv_sqrt - crit.c1.value).abs());
    checks.push(Check::new("u~(r) r^(N~-2) at sqrt(R) approaches c1", strictly_decreasing(&cs), fmt_seq(&cs)));
    let half_target = crit.c1.value * (1.0 - 2f64.powf(2.0 - nt));
    let ch = col(&|r| (r.conv_half - half_target).abs());
    checks.push(Check::new("u~(r) r^(N~-2) at R/2 approaches c1 (1 - 2^(2-N~))", strictly_decreasing(&ch), fmt_seq(&ch)));
    let res = col(&|r| r.ode_residual);
    checks.push(Check::new("rescaled ODE residual", res.iter().all(|&v| v <= 1e-8), fmt_seq(&res)));
    checks.push(Check::new(
        "single inflection",
        rows.iter().all(|r| r.single_inflection),
        String::new(),
    ));

    Ok(ConvergenceReport {
        params: crit.params,
        p_star: crit.p_star,
        c1: crit.c1.value,
        r0: crit.r0,
        u_at_r0: u_r0,
        envelope_constant: env_c,
        excluded,
        rows,
        checks,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeLimitReport {
    pub params: Params,
    /// `(ε, M^κ u'(1))`.
    pub rows: Vec<(f64, f64)>,
    pub cauchy: Vec<f64>,
    /// Shrink factor of successive Cauchy differences.
    pub cauchy_ratios: Vec<f64>,
    /// First-order Richardson limit from the last two rows.
    pub extrapolated: f64,
    /// `U'(R0) R0^{Ñ-1} - (1/ℓ) ∫_{R0}^∞ U^p r^{Ñ-1} dr`.
    pub integrated_limit: f64,
    /// `-U(R0)^p R0^Ñ / ℓ - (1/ℓ) ∫ ...`: the closed form without the `(Ñ-1)` factor.
    pub displayed_limit: f64,
    /// `-(Ñ-2) c1`.
    pub flux_limit: f64,
    pub checks: Vec<Check>,
}

impl DerivativeLimitReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `M^κ u'_ε(1)` along the sweep, against the limit from `U`.
pub fn derivative_limit_sweep(crit: &CriticalResult, eps_list: &[f64]) -> Result<DerivativeLimitReport> {
    let mut sorted = eps_list.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.dedup();
    let (balls, _) = solve_sweep(crit, &sorted);
    let nt = crit.params.dimension_like();
    let rows: Vec<(f64, f64)> = balls
        .iter()
        .map(|b| {
            let kappa = (b.p * (nt - 2.0) - nt) / 2.0;
            (b.eps.unwrap_or(crit.p_star - b.p), b.m.powf(kappa) * b.du_at_1)
        })
        .collect();
    let cauchy: Vec<f64> = rows.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let cauchy_ratios: Vec<f64> = cauchy.windows(2).map(|w| w[0] / w[1]).collect();
    let extrapolated = richardson(&rows, 1);
    let ell = crit.params.outer_coef();
    let p = crit.p_star;
    let (u_r0, du_r0) = crit.profile.evaluate(crit.r0)?;
    let flux = crit.outer_integral(crit.r0, p, nt - 1.0)?.value;
    let integrated_limit = du_r0 * crit.r0.powf(nt - 1.0) - flux / ell;
    let displayed_limit = -u_r0.powf(p) * crit.r0.powf(nt) / ell - flux / ell;
    let flux_limit = -(nt - 2.0) * crit.c1.value;
    let mut checks = vec![
        Check::new("Cauchy differences decreasing", strictly_decreasing(&cauchy), fmt_seq(&cauchy)),
        Check::new("limit negative", integrated_limit < 0.0 && extrapolated < 0.0, format!("{integrated_limit:.6e}")),
    ];
    let rel = ((integrated_limit - flux_limit) / flux_limit).abs();
    checks.push(Check::new("integrated limit equals -(N~-2) c1", rel < 1e-6, format!("rel {rel:.3e}")));
    Ok(DerivativeLimitReport {
        params: crit.params,
        rows,
        cauchy,
        cauchy_ratios,
        extrapolated,
        integrated_limit,
        displayed_limit,
        flux_limit,
        checks,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HeightIndependence {
    pub u0: f64,
    pub m_diff: f64,
    /// `sup |u_1 - u_{u0}| / M` on a uniform grid.
    pub sup_diff: f64,
}

/// Build the same ball solution from two shot heights and compare.
pub fn height_independence(params: &Params, p: f64, u0: f64) -> Result<HeightIndependence> {
    let a = solve_ball_from(params, p, 1.0, solver_for_ball())?;
    let b = solve_ball_from(params, p, u0, solver_for_ball())?;
    let mut worst = 0.0f64;
    for i in 0..=2000 {
        let r = i as f64 / 2000.0;
        worst = worst.max((a.eval(r)?.0 - b.eval(r)?.0).abs());
    }
    Ok(HeightIndependence { u0, m_diff: ((a.m - b.m) / a.m).abs(), sup_diff: worst / a.m })
}
