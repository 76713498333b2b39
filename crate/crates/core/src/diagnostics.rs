//! Checks on the fast-decay profile and the ball family: Pohozaev functionals,
//! the integral characterization of `p*`, the sandwich bounds and the weighted
//! energies.

use rayon::prelude::*;
use serde::Serialize;

use crate::ball::{richardson, solve_sweep, BallSolution, Check};
use crate::critical::{from_profile, CriticalResult};
use crate::error::{Error, Result};
use crate::integrator::{Integrator, SolverOptions, StopCondition};
use crate::params::{OpSign, Params};
use crate::quadrature::{integrate, integrate_log, Quadrature};
use crate::radial_operator::{power_nonlinearity, OperatorModel};

const QUAD_REL: f64 = 1e-11;

/// Surface measure of the unit sphere in `R^N`.
pub fn sphere_measure(n: u32) -> f64 {
    let pi = std::f64::consts::PI;
    let (mut w, start) = if n % 2 == 1 { (2.0, 1) } else { (2.0 * pi, 2) };
    let mut k = start;
    while k < n {
        w *= 2.0 * pi / k as f64;
        k += 2;
    }
    w
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PohozaevSample {
    pub r: f64,
    pub h: f64,
    pub dh_analytic: f64,
    pub dh_numeric: f64,
    /// Size of the terms of `H'` plus that of `H / r`.
    pub scale: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PohozaevCurve {
    pub alpha: f64,
    pub beta: f64,
    pub samples: Vec<PohozaevSample>,
}

impl PohozaevCurve {
    /// `max |H'_analytic - H'_numeric| / max scale`.
    pub fn derivative_mismatch(&self) -> f64 {
        let scale = self.samples.iter().map(|s| s.scale).fold(0.0, f64::max);
        let worst = self.samples.iter().map(|s| (s.dh_analytic - s.dh_numeric).abs()).fold(0.0, f64::max);
        worst / scale.max(f64::MIN_POSITIVE)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,H,dH_analytic,dH_numeric")?;
        for s in &self.samples {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", s.r, s.h, s.dh_analytic, s.dh_numeric)?;
        }
        Ok(())
    }
}

/// The three `(α, β)` choices used by the checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PohozaevChoice {
    /// `α = β = 0`.
    Kinetic,
    /// `α = (Ñ-2)(p+1)/(ℓÑ)`, `β = Ñ-2`: `H` keeps one sign.
    Bounds,
    /// `α = 2/ℓ`, `β = Ñ-2`: `H'` has a single term.
    Identity,
}

impl PohozaevChoice {
    pub const ALL: [PohozaevChoice; 3] = [PohozaevChoice::Kinetic, PohozaevChoice::Bounds, PohozaevChoice::Identity];

    pub fn coefficients(self, params: &Params, p: f64) -> (f64, f64) {
        let nt = params.dimension_like();
        let ell = params.outer_coef();
        match self {
            PohozaevChoice::Kinetic => (0.0, 0.0),
            PohozaevChoice::Bounds => ((nt - 2.0) * (p + 1.0) / (ell * nt), nt - 2.0),
            PohozaevChoice::Identity => (2.0 / ell, nt - 2.0),
        }
    }
}

struct Pohozaev {
    nt: f64,
    p: f64,
    ell: f64,
    alpha: f64,
    beta: f64,
}

impl Pohozaev {
    fn new(crit: &CriticalResult, alpha: f64, beta: f64) -> Self {
        Pohozaev { nt: crit.params.dimension_like(), p: crit.p_star, ell: crit.params.outer_coef(), alpha, beta }
    }

    fn h(&self, r: f64, u: f64, du: f64) -> f64 {
        let nt = self.nt;
        r.powf(nt) * (du * du + self.alpha / (self.p + 1.0) * power_nonlinearity(u, self.p + 1.0))
            + self.beta * r.powf(nt - 1.0) * du * u
    }

    fn terms(&self, r: f64, u: f64, du: f64) -> [f64; 3] {
        let (nt, p, ell) = (self.nt, self.p, self.ell);
        [
            (2.0 + self.beta - nt) * r.powf(nt - 1.0) * du * du,
            (self.alpha * nt / (p + 1.0) - self.beta / ell) * r.powf(nt - 1.0) * power_nonlinearity(u, p + 1.0),
            (self.alpha - 2.0 / ell) * r.powf(nt) * power_nonlinearity(u, p) * du,
        ]
    }

    /// Sum of the absolute values of the terms of `H`.
    fn h_scale(&self, r: f64, u: f64, du: f64) -> f64 {
        let nt = self.nt;
        r.powf(nt) * (du * du + (self.alpha / (self.p + 1.0) * power_nonlinearity(u, self.p + 1.0)).abs())
            + (self.beta * r.powf(nt - 1.0) * du * u).abs()
    }
}

/// `H_{α,β}` and `H'` on `r_grid ⊂ [R0, truncation]`.
pub fn pohozaev_curve(crit: &CriticalResult, alpha: f64, beta: f64, r_grid: &[f64]) -> Result<PohozaevCurve> {
    let ph = Pohozaev::new(crit, alpha, beta);
    let top = crit.profile.truncation_radius();
    // Wide enough that dense-output interpolation noise stays below the stencil error.
    let hd = 2e-3;
    let h_at = |r: f64| -> Result<f64> {
        let (u, du) = crit.profile.evaluate(r)?;
        Ok(ph.h(r, u, du))
    };
    let samples = r_grid
        .iter()
        .map(|&r| {
            if r < crit.r0 * (1.0 - 1e-12) || r * (1.0 + 4.0 * hd) > top {
                return Err(Error::OutOfRange { r, max: top / (1.0 + 4.0 * hd) });
            }
            let (u, du) = crit.profile.evaluate(r)?;
            let d = hd * r;
            // One-sided near R0: the stencil must not reach into the inner regime.
            let dh_numeric = if r - 2.0 * d < crit.r0 {
                (-25.0 * h_at(r)? + 48.0 * h_at(r + d)? - 36.0 * h_at(r + 2.0 * d)? + 16.0 * h_at(r + 3.0 * d)?
                    - 3.0 * h_at(r + 4.0 * d)?)
                    / (12.0 * d)
            } else {
                (8.0 * (h_at(r + d)? - h_at(r - d)?) - (h_at(r + 2.0 * d)? - h_at(r - 2.0 * d)?)) / (12.0 * d)
            };
            let terms = ph.terms(r, u, du);
            Ok(PohozaevSample {
                r,
                h: ph.h(r, u, du),
                dh_analytic: terms.iter().sum(),
                dh_numeric,
                scale: terms.iter().map(|t| t.abs()).sum::<f64>() + ph.h_scale(r, u, du) / r,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PohozaevCurve { alpha, beta, samples })
}

/// `n` log-spaced radii on `[a, b]`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}

/// Pohozaev curve on a log grid over `[R0, min(factor·R0, truncation)]`.
pub fn pohozaev_standard_curve(crit: &CriticalResult, choice: PohozaevChoice, factor: f64, n: usize) -> Result<PohozaevCurve> {
    let (alpha, beta) = choice.coefficients(&crit.params, crit.p_star);
    let top = (factor * crit.r0).min(crit.profile.truncation_radius() / 1.01);
    pohozaev_curve(crit, alpha, beta, &log_grid(crit.r0, top, n))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PohozaevIntegral {
    pub alpha: f64,
    pub beta: f64,
    /// `∫_{R0}^∞ H' dr`.
    pub integral: f64,
    pub h_at_r0: f64,
    /// `|∫ H' + H(R0)| / |H(R0)|`, or over the size of the terms of `H(R0)` when
    /// they cancel (`H ≡ 0` for the Laplacian with the bound choice).
    pub residual: f64,
    pub quadrature_err: f64,
}

/// Exactness of `∫_{R0}^∞ H' dr = -H(R0)`.
pub fn pohozaev_integral(crit: &CriticalResult, alpha: f64, beta: f64) -> Result<PohozaevIntegral> {
    let ph = Pohozaev::new(crit, alpha, beta);
    let (nt, p, c1) = (ph.nt, ph.p, crit.c1.value);
    let k = nt - 2.0;
    let coefs = [
        (2.0 + beta - nt) * k * k * c1 * c1,
        (alpha * nt / (p + 1.0) - beta / ph.ell) * c1.powf(p + 1.0),
        -(alpha - 2.0 / ph.ell) * k * c1.powf(p + 1.0),
    ];
    let exps = [1.0 - nt, (2.0 - nt) * (p + 1.0) + nt - 1.0, (2.0 - nt) * p + 1.0];
    let weights = [2.0, p + 1.0, p + 1.0];
    let mut integral = 0.0;
    let mut err = 0.0;
    for j in 0..3 {
        if coefs[j] == 0.0 {
            continue;
        }
        let q = crit.outer_quadrature(crit.r0, |u, du, r| ph.terms(r, u, du)[j], coefs[j], exps[j], weights[j])?;
        integral += q.value;
        err += q.error;
    }
    let (u0, du0) = crit.profile.evaluate(crit.r0)?;
    let h0 = ph.h(crit.r0, u0, du0);
    let size = ph.h_scale(crit.r0, u0, du0);
    let denom = if h0.abs() < 1e-8 * size { size } else { h0.abs() };
    Ok(PohozaevIntegral { alpha, beta, integral, h_at_r0: h0, residual: (integral + h0).abs() / denom, quadrature_err: err })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IntegralIdentity {
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub k0: f64,
    /// `|LHS - RHS|` over the largest of `|LHS|` and the two terms of `RHS`.
    pub residual: f64,
    /// Same check with the bracket `[1 - (p+1)K0/(ℓ(Ñ-1))]` in place of `[(p(Ñ-2)-Ñ) - ...]`.
    pub displayed_residual: f64,
}

/// Integral characterization of `p*`, evaluated with exponent `p` on the profile.
pub fn integral_identity_at(crit: &CriticalResult, p: f64) -> Result<IntegralIdentity> {
    let nt = crit.params.dimension_like();
    let ell = crit.params.outer_coef();
    let i = crit.outer_integral(crit.r0, p + 1.0, nt - 1.0)?.value;
    let lhs = (nt + 2.0 - p * (nt - 2.0)) * i;
    let u0 = crit.u_at_r0();
    let r0 = crit.r0;
    let k0 = u0.powf(p - 1.0) * r0 * r0;
    let pre = u0.powf(p + 1.0) * r0.powf(nt) / (nt - 1.0);
    let t1 = pre * (p * (nt - 2.0) - nt);
    let t2 = -pre * (p + 1.0) * k0 / (ell * (nt - 1.0));
    let rhs = t1 + t2;
    let residual = (lhs - rhs).abs() / lhs.abs().max(t1.abs()).max(t2.abs());
    let shown = pre + t2;
    let displayed_residual = (lhs - shown).abs() / lhs.abs().max(pre.abs()).max(t2.abs());
    Ok(IntegralIdentity { p, lhs, rhs, k0, residual, displayed_residual })
}

pub fn integral_identity_residual(crit: &CriticalResult) -> Result<f64> {
    Ok(integral_identity_at(crit, crit.p_star)?.residual)
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichViolation {
    pub r: f64,
    pub u: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub op: OpSign,
    pub lower_constant: f64,
    pub upper_constant: f64,
    pub slack: f64,
    pub points: usize,
    pub r_max: f64,
    /// `max U / upper` and `min U / lower` over the grid.
    pub max_upper_ratio: f64,
    pub min_lower_ratio: f64,
    /// `U / upper` at the last grid point.
    pub far_upper_ratio: f64,
    pub violations: Vec<SandwichViolation>,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Explicit lower and upper constants `(C, c)` of the two-sided bound.
pub fn sandwich_constants(crit: &CriticalResult) -> (f64, f64) {
    let nt = crit.params.dimension_like();
    let p = crit.p_star;
    let u0 = crit.u_at_r0();
    let ell = crit.params.outer_coef();
    let from_origin = u0.powf(p - 1.0) / (ell * (nt - 1.0) * (nt - 2.0));
    let from_tail = (u0 / crit.c1.value).powf(2.0 / (nt - 2.0));
    match crit.params.op {
        OpSign::Plus => (from_origin, from_tail),
        OpSign::Minus => (from_tail, from_origin),
    }
}

/// Two-sided bound on `[R0, factor·R0]` over `n` log-spaced points.
pub fn sandwich_check_with(crit: &CriticalResult, factor: f64, n: usize, slack: f64) -> Result<SandwichReport> {
    let (c_lo, c_hi) = sandwich_constants(crit);
    let (c_lo, c_hi) = (c_lo * (1.0 + slack), c_hi * (1.0 - slack));
    let k = crit.params.dimension_like() - 2.0;
    let u0 = crit.u_at_r0();
    let r0 = crit.r0;
    let grid = log_grid(r0, factor * r0, n);
    let mut rep = SandwichReport {
        op: crit.params.op,
        lower_constant: c_lo,
        upper_constant: c_hi,
        slack,
        points: grid.len(),
        r_max: factor * r0,
        max_upper_ratio: 0.0,
        min_lower_ratio: f64::INFINITY,
        far_upper_ratio: f64::NAN,
        violations: Vec::new(),
    };
    for &r in &grid {
        let (u, _) = crit.u_extended(r)?;
        let d = r * r - r0 * r0;
        let lower = u0 * (1.0 + c_lo * d).powf(-k / 2.0);
        let upper = u0 * (1.0 + c_hi * d).powf(-k / 2.0);
        rep.max_upper_ratio = rep.max_upper_ratio.max(u / upper);
        rep.min_lower_ratio = rep.min_lower_ratio.min(u / lower);
        rep.far_upper_ratio = u / upper;
        if u < lower * (1.0 - 1e-9) || u > upper * (1.0 + 1e-9) {
            rep.violations.push(SandwichViolation { r, u, lower, upper });
        }
    }
    Ok(rep)
}

/// Default grid: `10³` points on `[R0, 10³·R0]` with 10% slack.
pub fn sandwich_check(crit: &CriticalResult) -> Result<SandwichReport> {
    sandwich_check_with(crit, 1e3, 1000, 0.1)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnergyReport {
    pub gamma: f64,
    pub value: f64,
    /// Closed-form contribution beyond the profile.
    pub tail_correction: f64,
    pub quadrature_err: f64,
    /// Ball part `r0^γ ∫_0^{r0}` and outer part, both without `ω_N`.
    pub inner: f64,
    pub outer: f64,
}

fn weight_set_member(single: bool) -> Result<()> {
    if single {
        Ok(())
    } else {
        Err(Error::MissingEvent("single inflection"))
    }
}

/// `γ = 2(p+1)/(p-1) - N`.
pub fn weight_exponent(dim: u32, p: f64) -> f64 {
    2.0 * (p + 1.0) / (p - 1.0) - dim as f64
}

/// Weighted energy of the entire-space profile.
pub fn energy_star(crit: &CriticalResult) -> Result<EnergyReport> {
    weight_set_member(crit.profile.events().single_inflection())?;
    let n = crit.params.dim as f64;
    let nt = crit.params.dimension_like();
    let p = crit.p_star;
    let gamma = weight_exponent(crit.params.dim, p);
    let q = p + 1.0;
    let r0 = crit.r0;
    let inner_q = integrate(
        |r| match crit.profile.evaluate(r) {
            Ok((u, _)) => power_nonlinearity(u, q) * r.powf(n - 1.0),
            Err(_) => f64::NAN,
        },
        0.0,
        r0,
        QUAD_REL,
        0.0,
    )?;
    let inner = r0.powf(gamma) * inner_q.value;
    let m = gamma + n - 1.0;
    let outer_q = crit.outer_integral(r0, q, m)?;
    let e = (2.0 - nt) * q + m;
    let b = crit.tail_radius().max(r0);
    let tail = -crit.c1.value.powf(q) * b.powf(e + 1.0) / (e + 1.0);
    let w = sphere_measure(crit.params.dim);
    Ok(EnergyReport {
        gamma,
        value: w * (inner + outer_q.value),
        tail_correction: w * tail,
        quadrature_err: w * (r0.powf(gamma) * inner_q.error + outer_q.error),
        inner,
        outer: outer_q.value,
    })
}

/// Weighted energy of a ball solution, in the ball variables.
pub fn energy_eps(ball: &BallSolution) -> Result<EnergyReport> {
    weight_set_member(ball.shot().events().single_inflection())?;
    let p = ball.p;
    let gamma = weight_exponent(ball.params.dim, p);
    let n = ball.params.dim as f64;
    let q = p + 1.0;
    let f = |r: f64, m: f64| match ball.eval(r) {
        Ok((u, _)) => power_nonlinearity(u, q) * r.powf(m),
        Err(_) => f64::NAN,
    };
    let inner_q = integrate(|r| f(r, n - 1.0), 0.0, ball.r0, QUAD_REL, 0.0)?;
    let outer_q = integrate_log(|r| f(r, gamma + n - 1.0), ball.r0, 1.0, QUAD_REL, 0.0)?;
    Ok(assemble(ball.params.dim, gamma, ball.r0, inner_q, outer_q))
}

/// Same energy computed from the normalized shot on `[0, R]`.
pub fn energy_eps_rescaled(ball: &BallSolution) -> Result<EnergyReport> {
    weight_set_member(ball.shot().events().single_inflection())?;
    let p = ball.p;
    let gamma = weight_exponent(ball.params.dim, p);
    let n = ball.params.dim as f64;
    let q = p + 1.0;
    let f = |r: f64, m: f64| match ball.rescaled(r) {
        Ok((u, _)) => power_nonlinearity(u, q) * r.powf(m),
        Err(_) => f64::NAN,
    };
    let inner_q = integrate(|r| f(r, n - 1.0), 0.0, ball.r0_tilde, QUAD_REL, 0.0)?;
    let outer_q = integrate_log(|r| f(r, gamma + n - 1.0), ball.r0_tilde, ball.big_r, QUAD_REL, 0.0)?;
    Ok(assemble(ball.params.dim, gamma, ball.r0_tilde, inner_q, outer_q))
}

fn assemble(dim: u32, gamma: f64, r0: f64, inner_q: Quadrature, outer_q: Quadrature) -> EnergyReport {
    let w = sphere_measure(dim);
    let inner = r0.powf(gamma) * inner_q.value;
    EnergyReport {
        gamma,
        value: w * (inner + outer_q.value),
        tail_correction: 0.0,
        quadrature_err: w * (r0.powf(gamma) * inner_q.error + outer_q.error),
        inner,
        outer: outer_q.value,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceRow {
    pub alpha: f64,
    pub energy: f64,
    pub rel_diff: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub model: OperatorModel,
    pub p: f64,
    pub gamma: f64,
    pub reference: f64,
    pub rows: Vec<InvarianceRow>,
}

impl InvarianceReport {
    pub fn max_rel_diff(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_diff).fold(0.0, f64::max)
    }
}

pub const INVARIANCE_ALPHAS: [f64; 3] = [0.5, 2.0, 10.0];

/// `E*(U_α)` from profiles re-shot at `u(0) = α`.
pub fn energy_invariance(crit: &CriticalResult, alphas: &[f64]) -> Result<InvarianceReport> {
    let base = energy_star(crit)?;
    let rows = alphas
        .par_iter()
        .map(|&a| {
            let e = energy_star(&crit.rescaled(a)?)?.value;
            Ok(InvarianceRow { alpha: a, energy: e, rel_diff: ((e - base.value) / base.value).abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InvarianceReport { model: crit.profile.model(), p: crit.p_star, gamma: base.gamma, reference: base.value, rows })
}

/// The outer operator alone on the whole line, at `p = (Ñ+2)/(Ñ-2)` with weight exponent `Ñ - N`.
pub fn outer_only_invariance(params: &Params, alphas: &[f64]) -> Result<InvarianceReport> {
    let p = params.sobolev_exponent_like();
    let opts = SolverOptions { rel_tol: 1e-11, abs_tol: 1e-30, ..SolverOptions::default() }.with_model(OperatorModel::OuterOnly);
    let shoot = |u0: f64| -> Result<CriticalResult> {
        let shot = Integrator::new(*params, p).with_options(opts).integrate(u0, StopCondition::EfTime(30.0))?;
        from_profile(params, p, std::sync::Arc::new(shot))
    };
    energy_invariance(&shoot(1.0)?, alphas)
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergySweep {
    pub energy_star: f64,
    /// `(ε, E_ε, E_ε computed in rescaled variables)`.
    pub rows: Vec<(f64, f64, f64)>,
    pub diffs: Vec<f64>,
    /// Second-order Richardson limit from the last three rows.
    pub extrapolated: f64,
    /// First-order limit from the last two rows.
    pub extrapolated_linear: f64,
    pub extrapolated_rel_err: f64,
    pub max_rescaling_mismatch: f64,
    pub checks: Vec<Check>,
}

impl EnergySweep {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "eps,E_eps,E_eps_rescaled,abs_diff")?;
        for (row, d) in self.rows.iter().zip(&self.diffs) {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", row.0, row.1, row.2, d)?;
        }
        Ok(())
    }
}

/// `E_ε` along decreasing `ε` against `E*`.
pub fn energy_sweep(crit: &CriticalResult, eps_list: &[f64]) -> Result<EnergySweep> {
    let mut sorted = eps_list.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.dedup();
    let e_star = energy_star(crit)?.value;
    let (balls, _) = solve_sweep(crit, &sorted);
    let rows = balls
        .par_iter()
        .map(|b| Ok((b.eps.unwrap_or(crit.p_star - b.p), energy_eps(b)?.value, energy_eps_rescaled(b)?.value)))
        .collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = rows.iter().map(|r| (r.1 - e_star).abs()).collect();
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.1)).collect();
    let extrapolated_linear = richardson(&pts, 1);
    let extrapolated = richardson(&pts, 2);
    let extrapolated_rel_err = ((extrapolated - e_star) / e_star).abs();
    let max_rescaling_mismatch = rows.iter().map(|r| ((r.1 - r.2) / r.1).abs()).fold(0.0, f64::max);
    let checks = vec![
        Check::new(
            "|E_eps - E*| decreasing",
            crate::ball::strictly_decreasing(&diffs) && !diffs.is_empty(),
            crate::ball::fmt_seq(&diffs),
        ),
        Check::new("extrapolated limit within 1% of E*", extrapolated_rel_err <= 0.01, format!("{extrapolated_rel_err:.3e}")),
        Check::new("energy identical in rescaled variables", max_rescaling_mismatch <= 1e-9, format!("{max_rescaling_mismatch:.3e}")),
    ];
    Ok(EnergySweep { energy_star: e_star, rows, diffs, extrapolated, extrapolated_linear, extrapolated_rel_err, max_rescaling_mismatch, checks })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SobolevChain {
    pub energy_star: f64,
    pub dirichlet: f64,
    /// `‖∇U‖_2 / ‖U‖_{2N/(N-2)}`.
    pub sobolev: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_diff: f64,
}

/// `(1/2 - 1/(p*+1)) E* = S^N / N` at `λ = Λ`, with `S` from the profile's Dirichlet integral.
pub fn sobolev_chain(crit: &CriticalResult) -> Result<SobolevChain> {
    if !crit.params.is_laplacian() {
        return Err(Error::InvalidParams("Sobolev chain needs lambda = Lambda".into()));
    }
    let e = energy_star(crit)?.value;
    let n = crit.params.dim as f64;
    let k = n - 2.0;
    let c1 = crit.c1.value;
    let inner = integrate(
        |r| match crit.profile.evaluate(r) {
            Ok((_, du)) => du * du * r.powf(n - 1.0),
            Err(_) => f64::NAN,
        },
        0.0,
        crit.r0,
        QUAD_REL,
        0.0,
    )?;
    let outer = crit.outer_quadrature(crit.r0, |_, du, r| du * du * r.powf(n - 1.0), k * k * c1 * c1, 1.0 - n, 2.0)?;
    let dirichlet = sphere_measure(crit.params.dim) * (inner.value + outer.value);
    let p = crit.p_star;
    let sobolev = dirichlet.sqrt() / e.powf(1.0 / (p + 1.0));
    let lhs = (0.5 - 1.0 / (p + 1.0)) * e;
    let rhs = sobolev.powf(n) / n;
    Ok(SobolevChain { energy_star: e, dirichlet, sobolev, lhs, rhs, rel_diff: ((lhs - rhs) / rhs).abs() })
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsReport {
    pub pohozaev: Vec<(PohozaevChoice, PohozaevIntegral, f64)>,
    pub identity: IntegralIdentity,
    pub identity_perturbed: IntegralIdentity,
    pub sandwich: SandwichReport,
    pub energy: EnergyReport,
    pub invariance: InvarianceReport,
    pub sobolev: Option<SobolevChain>,
}

/// Every profile-level diagnostic for a critical result.
pub fn run_all(crit: &CriticalResult) -> Result<DiagnosticsReport> {
    let pohozaev = PohozaevChoice::ALL
        .iter()
        .map(|&c| {
            let (a, b) = c.coefficients(&crit.params, crit.p_star);
            let curve = pohozaev_standard_curve(crit, c, 100.0, 400)?;
            Ok((c, pohozaev_integral(crit, a, b)?, curve.derivative_mismatch()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagnosticsReport {
        pohozaev,
        identity: integral_identity_at(crit, crit.p_star)?,
        identity_perturbed: integral_identity_at(crit, 1.01 * crit.p_star)?,
        sandwich: sandwich_check(crit)?,
        energy: energy_star(crit)?,
        invariance: energy_invariance(crit, &INVARIANCE_ALPHAS)?,
        sobolev: if crit.params.is_laplacian() { Some(sobolev_chain(crit)?) } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::{find_critical, find_critical_with, CriticalOptions};

    fn talenti4() -> CriticalResult {
        find_critical(&Params::new(1.0, 1.0, 4, OpSign::Plus).unwrap(), 1e-10).unwrap()
    }

    #[test]
    fn sphere_measures() {
        let pi = std::f64::consts::PI;
        assert!((sphere_measure(2) - 2.0 * pi).abs() < 1e-15);
        assert!((sphere_measure(3) - 4.0 * pi).abs() < 1e-14);
        assert!((sphere_measure(4) - 2.0 * pi * pi).abs() < 1e-13);
        assert!((sphere_measure(5) - 8.0 * pi * pi / 3.0).abs() < 1e-13);
    }

    #[test]
    fn kinetic_pohozaev_matches_ode_form() {
        let crit = talenti4();
        let curve = pohozaev_curve(&crit, 0.0, 0.0, &log_grid(crit.r0, 20.0, 50)).unwrap();
        for s in &curve.samples {
            let (_, du) = crit.profile.evaluate(s.r).unwrap();
            let ddu = crit.profile.ddu_at(s.r).unwrap();
            let direct = 4.0 * s.r.powi(3) * du * du + 2.0 * s.r.powi(4) * du * ddu;
            assert!((s.h - s.r.powi(4) * du * du).abs() < 1e-14 * s.h.abs().max(1e-30));
            assert!((s.dh_analytic - direct).abs() <= 1e-8 * s.scale, "{} {}", s.dh_analytic, direct);
        }
        assert!(curve.derivative_mismatch() < 1e-5);
    }

    #[test]
    fn pohozaev_integrals_talenti() {
        let crit = talenti4();
        for c in PohozaevChoice::ALL {
            let (a, b) = c.coefficients(&crit.params, crit.p_star);
            let pi = pohozaev_integral(&crit, a, b).unwrap();
            assert!(pi.residual < 1e-6, "{c:?} {pi:?}");
        }
    }

    #[test]
    fn talenti_identity_and_sandwich() {
        let crit = talenti4();
        let id = integral_identity_at(&crit, crit.p_star).unwrap();
        assert!(id.residual < 1e-6, "{id:?}");
        let bad = integral_identity_at(&crit, 1.01 * crit.p_star).unwrap();
        assert!(bad.residual > 10.0 * id.residual.max(1e-12));
        let s = sandwich_check_with(&crit, 1e3, 1000, 0.0).unwrap();
        assert!(s.violations.len() <= 1000);
        let s = sandwich_check(&crit).unwrap();
        assert!(s.passed(), "{:?}", s.violations.first());
        let (lo, hi) = sandwich_constants(&crit);
        assert!((hi - 1.0 / 8.0 * 3.0 / 4.0).abs() < 1e-9, "{hi}");
        assert!(lo > hi);
    }

    #[test]
    fn talenti_energy_closed_form() {
        let crit = talenti4();
        let e = energy_star(&crit).unwrap();
        let pi = std::f64::consts::PI;
        let exact = 32.0 * pi * pi / 3.0;
        assert!(e.gamma.abs() < 1e-9);
        assert!(((e.value - exact) / exact).abs() < 1e-8, "{} vs {exact}", e.value);
        assert!(e.tail_correction < e.value);
        let chain = sobolev_chain(&crit).unwrap();
        assert!(chain.rel_diff < 1e-6, "{chain:?}");
    }

    #[test]
    fn ball_energy_rescaling_identity() {
        let crit = talenti4();
        let ball = crate::ball::solve_ball_eps(&crit, 0.1).unwrap();
        let a = energy_eps(&ball).unwrap();
        let b = energy_eps_rescaled(&ball).unwrap();
        assert!(a.value > 0.0);
        assert!(((a.value - b.value) / a.value).abs() < 1e-9);
    }

    #[test]
    fn invariance_plus() {
        let params = Params::new(1.0, 2.0, 4, OpSign::Plus).unwrap();
        let crit = find_critical_with(&params, &CriticalOptions::default()).unwrap();
        let rep = energy_invariance(&crit, &[0.5, 2.0]).unwrap();
        assert!(rep.max_rel_diff() < 1e-6, "{rep:?}");
    }
}
