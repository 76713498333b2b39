//! Emden–Fowler phase plane: `x(t) = r^{λ2} u(r)`, `r = e^t`.
//!
//! In the convex regime the radial equation becomes the autonomous
//! `x'' - (λ1+λ2) x' + λ1 λ2 x = -x^p / ℓ`, with `ℓ` the outer coefficient.

use std::collections::VecDeque;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::RadialProfile;
use crate::params::ExponentConstants;
use crate::quadrature::simpson;
use crate::radial_operator::power_nonlinearity;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t: f64,
    pub x: f64,
    pub dx: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShotOutcome {
    /// `u` vanishes at `r`.
    Crossing { r: f64 },
    /// `x'` returned to zero at `x > 0`, or the trajectory settled on the
    /// stable equilibrium; `turning_t` is where that was detected.
    SlowDecay { turning_t: f64 },
    Undetermined { reason: String },
}

impl ShotOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            ShotOutcome::Crossing { .. } => "crossing",
            ShotOutcome::SlowDecay { .. } => "slow_decay",
            ShotOutcome::Undetermined { .. } => "undetermined",
        }
    }

    pub fn is_crossing(&self) -> bool {
        matches!(self, ShotOutcome::Crossing { .. })
    }

    pub fn is_slow_decay(&self) -> bool {
        matches!(self, ShotOutcome::SlowDecay { .. })
    }

    pub fn is_undetermined(&self) -> bool {
        matches!(self, ShotOutcome::Undetermined { .. })
    }
}

/// Classify a shot from its native events.
pub fn classify_profile(profile: &RadialProfile) -> ShotOutcome {
    let ev = profile.events();
    if let Some(r) = ev.first_zero {
        return ShotOutcome::Crossing { r };
    }
    if let Some(r) = ev.phase_turn.or(ev.captured) {
        return ShotOutcome::SlowDecay { turning_t: r.ln() };
    }
    let reason = if ev.inflection.is_none() {
        "no convexity change before truncation".to_string()
    } else {
        format!(
            "truncated at t = {:.3} ({:?}) with x > 0 and x' < 0",
            profile.truncation_radius().ln(),
            profile.termination()
        )
    };
    ShotOutcome::Undetermined { reason }
}

/// `{0, (|λ1| λ2 ℓ)^{1/(p-1)}}`.
pub fn equilibria(constants: &ExponentConstants, ell_coef: f64) -> Result<[f64; 2]> {
    if !(constants.lambda1 < 0.0) {
        return Err(Error::NoEquilibrium(constants.lambda1));
    }
    let xs = (constants.lambda1.abs() * constants.lambda2 * ell_coef).powf(1.0 / (constants.p - 1.0));
    Ok([0.0, xs])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauEstimate {
    pub value: f64,
    pub err: f64,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug)]
pub struct PhaseTrajectory {
    constants: ExponentConstants,
    ell: f64,
    points: Vec<PhasePoint>,
    outer_start: f64,
    classification: ShotOutcome,
    profile: Arc<RadialProfile>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryMetadata {
    pub lambda1: f64,
    pub lambda2: f64,
    pub x_s: Option<f64>,
    pub classification: ShotOutcome,
    pub outer_start_t: f64,
    pub points: usize,
}

const GRID_DT: f64 = 0.01;
const MAX_POINTS: usize = 20_000;

/// Sample the profile on a uniform log-radius grid.
pub fn to_phase(profile: &RadialProfile, constants: ExponentConstants) -> Result<PhaseTrajectory> {
    to_phase_shared(Arc::new(profile.clone()), constants)
}

pub fn to_phase_shared(profile: Arc<RadialProfile>, constants: ExponentConstants) -> Result<PhaseTrajectory> {
    if (constants.p - profile.p()).abs() > 1e-12 * profile.p() {
        return Err(Error::InvalidExponent {
            p: constants.p,
            reason: format!("constants built for p = {} but profile has p = {}", constants.p, profile.p()),
        });
    }
    let r0 = profile.inflection()?;
    let r_lo = profile.nodes()[1].r;
    let r_hi = profile.truncation_radius();
    if !(r_hi > r0) {
        return Err(Error::MissingEvent("outer regime coverage"));
    }
    let (t_lo, t_hi) = (r_lo.ln(), r_hi.ln());
    let n = (((t_hi - t_lo) / GRID_DT).ceil() as usize).clamp(200, MAX_POINTS);
    let l2 = constants.lambda2;
    let mut points = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = if i == n { t_hi } else { t_lo + (t_hi - t_lo) * i as f64 / n as f64 };
        let r = if i == n { r_hi } else { t.exp().min(r_hi) };
        let (u, du) = profile.evaluate(r)?;
        let x = r.powf(l2) * u;
        let dx = l2 * x + r.powf(l2 + 1.0) * du;
        points.push(PhasePoint { t, x, dx });
    }
    let classification = classify_profile(&profile);
    Ok(PhaseTrajectory {
        constants,
        ell: profile.params().outer_coef(),
        points,
        outer_start: r0.ln(),
        classification,
        profile,
    })
}

/// Classify against a horizon: a shot truncated early without an event is undetermined.
pub fn classify(traj: &PhaseTrajectory, t_max: f64) -> ShotOutcome {
    match &traj.classification {
        ShotOutcome::Undetermined { .. } => {
            let t_end = traj.points.last().map(|p| p.t).unwrap_or(f64::NEG_INFINITY);
            let scale = traj.profile.length_scale().ln();
            ShotOutcome::Undetermined {
                reason: if t_end - scale < t_max {
                    format!("trajectory ends at t = {t_end:.3} before horizon {t_max}")
                } else {
                    format!("no event up to t = {t_max}; fast-decay candidate")
                },
            }
        }
        other => other.clone(),
    }
}

/// Window of `values` (ordered like `ts`) of width `width` in `t` with the least max-min spread.
fn flattest_window(ts: &[f64], values: &[f64], width: f64) -> Option<PlateauEstimate> {
    if ts.len() < 2 {
        return None;
    }
    let mut best: Option<PlateauEstimate> = None;
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut lo = 0usize;
    for hi in 0..ts.len() {
        while maxq.back().is_some_and(|&j| values[j] <= values[hi]) {
            maxq.pop_back();
        }
        maxq.push_back(hi);
        while minq.back().is_some_and(|&j| values[j] >= values[hi]) {
            minq.pop_back();
        }
        minq.push_back(hi);
        while ts[hi] - ts[lo] > width {
            lo += 1;
            while maxq.front().is_some_and(|&j| j < lo) {
                maxq.pop_front();
            }
            while minq.front().is_some_and(|&j| j < lo) {
                minq.pop_front();
            }
        }
        if ts[hi] - ts[lo] < 0.9 * width {
            continue;
        }
        let (mx, mn) = (values[maxq[0]], values[minq[0]]);
        let spread = mx - mn;
        if best.map_or(true, |b| spread < b.err) {
            best = Some(PlateauEstimate { value: 0.5 * (mx + mn), err: spread, t_start: ts[lo], t_end: ts[hi] });
        }
    }
    best
}

impl PhaseTrajectory {
    pub fn constants(&self) -> &ExponentConstants {
        &self.constants
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// `t = log r0`; the outer regime is `t ≥ outer_start`.
    pub fn outer_start(&self) -> f64 {
        self.outer_start
    }

    pub fn classification(&self) -> &ShotOutcome {
        &self.classification
    }

    pub fn in_outer_regime(&self, t: f64) -> bool {
        t >= self.outer_start
    }

    /// `f(x) = -x^p / ℓ` with the odd extension.
    pub fn forcing(&self, x: f64) -> f64 {
        -power_nonlinearity(x, self.constants.p) / self.ell
    }

    fn outer_points(&self) -> impl Iterator<Item = &PhasePoint> {
        let t0 = self.outer_start;
        self.points.iter().filter(move |pt| pt.t >= t0 && pt.x > 0.0)
    }

    /// Sup-norm residual of the phase-plane equation over the outer regime.
    pub fn equation_residual(&self) -> Result<f64> {
        let c = &self.constants;
        let (l1, l2) = (c.lambda1, c.lambda2);
        let r_end = self.profile.truncation_radius();
        let mut worst = 0.0f64;
        for pt in self.outer_points() {
            let r = pt.t.exp().min(r_end);
            let ddu = self.profile.ddu_at(r)?;
            let w = pt.dx - l2 * pt.x;
            let ddx = l2 * pt.dx + (l2 + 1.0) * w + r.powf(l2 + 2.0) * ddu;
            let res = ddx - (l1 + l2) * pt.dx + l1 * l2 * pt.x - self.forcing(pt.x);
            worst = worst.max(res.abs());
        }
        Ok(worst)
    }

    /// `e^{-λ1 t} x(t) = r^{Ñ-2} u(r)` along the outer regime.
    pub fn decay_ratio(&self) -> Vec<(f64, f64)> {
        let l1 = self.constants.lambda1;
        self.outer_points().map(|pt| (pt.t, (-l1 * pt.t).exp() * pt.x)).collect()
    }

    /// `-r^{Ñ-1} u'(r) / (Ñ-2)` along the outer regime.
    pub fn derivative_ratio(&self) -> Vec<(f64, f64)> {
        let c = &self.constants;
        let k = c.dim_like - 2.0;
        self.outer_points()
            .map(|pt| (pt.t, -(-c.lambda1 * pt.t).exp() * (pt.dx - c.lambda2 * pt.x) / k))
            .collect()
    }

    /// Largest `e^{-λ1 t} x(t)` over the outer regime.
    pub fn decay_ratio_sup(&self) -> f64 {
        self.decay_ratio().iter().map(|v| v.1).fold(0.0, f64::max)
    }

    /// Representation formula from `T` with the measured `(x(T), x'(T))`,
    /// compared with the stored solution on `[T, T + span]`. Returns the
    /// sup-norm discrepancy.
    pub fn representation_residual(&self, t0: f64, span: f64, samples: usize) -> Result<f64> {
        let c = self.constants;
        let (l1, l2) = (c.lambda1, c.lambda2);
        let t_end = self.points.last().map(|p| p.t).unwrap_or(t0);
        if t0 < self.outer_start || t0 + span > t_end {
            return Err(Error::OutOfRange { r: (t0 + span).exp(), max: t_end.exp() });
        }
        let x_at = |t: f64| -> Result<(f64, f64)> {
            let r = t.exp();
            let (u, du) = self.profile.evaluate(r)?;
            let x = r.powf(l2) * u;
            Ok((x, l2 * x + r.powf(l2 + 1.0) * du))
        };
        let (xt, dxt) = x_at(t0)?;
        let xp = (dxt - l1 * xt) / (l2 - l1);
        let xm = xt - xp;
        let f = |s: f64| x_at(s).map(|v| self.forcing(v.0)).unwrap_or(f64::NAN);
        let mut worst = 0.0f64;
        for i in 1..=samples {
            let t = t0 + span * i as f64 / samples as f64;
            let i2 = simpson(|s| f(s) * (-l2 * s).exp(), t0, t, 1e-14, 30);
            let i1 = simpson(|s| f(s) * (-l1 * s).exp(), t0, t, 1e-14, 30);
            let rep = xm * (l1 * (t - t0)).exp()
                + xp * (l2 * (t - t0)).exp()
                + (l2 * t).exp() / (l2 - l1) * i2
                - (l1 * t).exp() / (l2 - l1) * i1;
            let (x, _) = x_at(t)?;
            if !rep.is_finite() {
                return Err(Error::Quadrature("representation formula overflow".into()));
            }
            worst = worst.max((rep - x).abs());
        }
        Ok(worst)
    }

    fn point_at(&self, t: f64) -> Result<PhasePoint> {
        let l2 = self.constants.lambda2;
        let r = t.exp().min(self.profile.truncation_radius());
        let (u, du) = self.profile.evaluate(r)?;
        let x = r.powf(l2) * u;
        Ok(PhasePoint { t, x, dx: l2 * x + r.powf(l2 + 1.0) * du })
    }

    /// Last point where `x'` turns from positive to negative (the maximum of `x`).
    pub fn turning_point(&self) -> Result<PhasePoint> {
        let k = self
            .points
            .windows(2)
            .rposition(|w| w[0].dx > 0.0 && w[1].dx <= 0.0)
            .ok_or(Error::MissingEvent("phase-plane maximum"))?;
        let (mut a, mut b) = (self.points[k].t, self.points[k + 1].t);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if self.point_at(m)?.dx > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        self.point_at(0.5 * (a + b))
    }

    pub fn metadata(&self) -> TrajectoryMetadata {
        TrajectoryMetadata {
            lambda1: self.constants.lambda1,
            lambda2: self.constants.lambda2,
            x_s: equilibria(&self.constants, self.ell).ok().map(|e| e[1]),
            classification: self.classification.clone(),
            outer_start_t: self.outer_start,
            points: self.points.len(),
        }
    }

    /// CSV with header `t,x,dx`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x,dx")?;
        for pt in &self.points {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", pt.t, pt.x, pt.dx)?;
        }
        Ok(())
    }
}

/// `c1` as the fast-mode coefficient `-r^{Ñ-1}u'/(Ñ-2)` plus the flux still to
/// come, `∫_r^∞ u^p ρ^{Ñ-1} dρ / (ℓ(Ñ-2))`. Along an exact fast-decay solution this
/// is constant; a constant shift of `u` (the slow mode) does not enter `u'`.
/// The flux is integrated on the stored solution up to the end of the flattest
/// derivative plateau and closed with the power-law tail beyond.
pub fn extract_c1(traj: &PhaseTrajectory) -> Result<PlateauEstimate> {
    let deriv = extract_c1_from_derivative(traj)?;
    let c = traj.constants;
    let two_kappa = 2.0 * c.kappa();
    if !(two_kappa > 0.0) {
        return Ok(deriv);
    }
    let k = c.dim_like - 2.0;
    let samples: Vec<(f64, f64)> = traj.derivative_ratio().into_iter().filter(|s| s.0 <= deriv.t_end).collect();
    if samples.len() < 8 {
        return Ok(deriv);
    }
    let profile = &traj.profile;
    let p = c.p;
    let flux_density = |t: f64| -> f64 {
        let r = t.exp();
        match profile.evaluate(r) {
            Ok((u, _)) => power_nonlinearity(u, p) * r.powf(c.dim_like),
            Err(_) => f64::NAN,
        }
    };
    let t_c = samples.last().map(|s| s.0).unwrap_or(deriv.t_end);
    let tail = power_nonlinearity(deriv.value, p) * (-two_kappa * t_c).exp() / two_kappa;
    let mut acc = tail;
    let mut corrected = vec![0.0; samples.len()];
    for i in (0..samples.len()).rev() {
        if i + 1 < samples.len() {
            let q = crate::quadrature::integrate(flux_density, samples[i].0, samples[i + 1].0, 1e-12, 0.0)?;
            acc += q.value;
        }
        corrected[i] = samples[i].1 + acc / (traj.ell * k);
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let span = ts[ts.len() - 1] - ts[0];
    let mut est = flattest_window(&ts, &corrected, 0.25 * span).ok_or(Error::MissingEvent("outer regime coverage"))?;
    // Tail closed with an approximate c1: its uncertainty scales with the plateau spread.
    let tail_err = (tail / (traj.ell * k)).abs() * p * deriv.err / deriv.value.abs().max(f64::MIN_POSITIVE);
    est.err += tail_err;
    Ok(est)
}

/// Plateau of `r^{Ñ-2} u(r) = e^{-λ1 t} x(t)` over the flattest quarter of the outer range.
pub fn extract_c1_direct(traj: &PhaseTrajectory) -> Result<PlateauEstimate> {
    plateau(&traj.decay_ratio())
}

/// Plateau of `-r^{Ñ-1} u'(r) / (Ñ-2)`.
pub fn extract_c1_from_derivative(traj: &PhaseTrajectory) -> Result<PlateauEstimate> {
    plateau(&traj.derivative_ratio())
}

fn plateau(samples: &[(f64, f64)]) -> Result<PlateauEstimate> {
    let (ts, vs): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    let span = match (ts.first(), ts.last()) {
        (Some(a), Some(b)) if b > a => b - a,
        _ => return Err(Error::MissingEvent("outer regime coverage")),
    };
    flattest_window(&ts, &vs, 0.25 * span).ok_or(Error::MissingEvent("outer regime coverage"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, StopCondition};
    use crate::params::{OpSign, Params};

    fn lap(dim: u32) -> Params {
        Params::new(1.0, 1.0, dim, OpSign::Plus).unwrap()
    }

    fn shoot(params: &Params, p: f64, t: f64) -> RadialProfile {
        integrate(params, p, 1.0, StopCondition::EfTime(t)).unwrap()
    }

    #[test]
    fn talenti_phase_maximum() {
        let params = lap(4);
        let prof = shoot(&params, 3.0, 12.0);
        let traj = to_phase(&prof, params.exponent_constants(3.0).unwrap()).unwrap();
        let top = traj.turning_point().unwrap();
        assert!((top.x - 2f64.sqrt()).abs() < 1e-9, "{top:?}");
        assert!((top.t - 8f64.sqrt().ln()).abs() < 1e-6);
        let grid_max = traj.points().iter().map(|p| p.x).fold(0.0, f64::max);
        assert!(grid_max <= top.x + 1e-12);
    }

    #[test]
    fn transform_round_trip() {
        let params = Params::new(1.0, 2.0, 4, OpSign::Minus).unwrap();
        let prof = shoot(&params, 2.5, 10.0);
        let c = params.exponent_constants(2.5).unwrap();
        let traj = to_phase(&prof, c).unwrap();
        for pt in traj.points().iter().step_by(37) {
            let r = pt.t.exp().min(prof.truncation_radius());
            let (u, _) = prof.evaluate(r).unwrap();
            assert!((pt.x * r.powf(-c.lambda2) - u).abs() <= 1e-10 * u.abs().max(1e-300));
        }
    }

    #[test]
    fn equilibria_examples() {
        let c = lap(4).exponent_constants(3.0).unwrap();
        let e = equilibria(&c, 1.0).unwrap();
        assert_eq!(e[0], 0.0);
        assert!((e[1] - 1.0).abs() < 1e-15);
        let plus = Params::new(1.0, 2.0, 4, OpSign::Plus).unwrap();
        let c = plus.exponent_constants(6.0).unwrap();
        assert!((equilibria(&c, 2.0).unwrap()[1] - 0.08f64.powf(0.2)).abs() < 1e-14);
        let c = plus.exponent_constants(5.0).unwrap();
        assert!(equilibria(&c, 2.0).is_err());
        let c = plus.exponent_constants(5.0 + 1e-9).unwrap();
        assert!(equilibria(&c, 2.0).unwrap()[1] < 1e-1);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let plus = Params::new(1.0, 2.0, 4, OpSign::Plus).unwrap();
        let c = plus.exponent_constants(6.0).unwrap();
        let xs = equilibria(&c, 2.0).unwrap()[1];
        let res = c.lambda1 * c.lambda2 * xs + xs.powf(6.0) / 2.0;
        assert!(res.abs() < 1e-15);
    }

    #[test]
    fn classification_examples() {
        let params = lap(3);
        assert!(classify_profile(&shoot(&params, 4.5, 35.0)).is_crossing());
        assert!(classify_profile(&shoot(&params, 5.5, 35.0)).is_slow_decay());
        assert!(classify_profile(&shoot(&params, 5.0, 20.0)).is_undetermined());
    }

    #[test]
    fn phase_equation_residual_is_small() {
        for (params, p) in [
            (Params::new(1.0, 2.0, 4, OpSign::Plus).unwrap(), 6.0),
            (Params::new(1.0, 2.0, 4, OpSign::Minus).unwrap(), 2.5),
            (lap(4), 3.0),
        ] {
            let prof = shoot(&params, p, 8.0);
            let traj = to_phase(&prof, params.exponent_constants(p).unwrap()).unwrap();
            let res = traj.equation_residual().unwrap();
            assert!(res < 1e-6, "{params:?} residual {res:e}");
        }
    }

    #[test]
    fn c1_talenti() {
        for (dim, expect) in [(4u32, 8.0), (3, 3f64.sqrt())] {
            let params = lap(dim);
            let p = params.sobolev_exponent();
            let prof = shoot(&params, p, 30.0);
            let traj = to_phase(&prof, params.exponent_constants(p).unwrap()).unwrap();
            let c1 = extract_c1(&traj).unwrap();
            assert!(((c1.value - expect) / expect).abs() < 1e-6, "N={dim}: {c1:?}");
            let d = extract_c1_from_derivative(&traj).unwrap();
            assert!((d.value - c1.value).abs() <= 10.0 * (d.err + c1.err) + 1e-6 * expect, "{d:?}");
            let q = extract_c1_direct(&traj).unwrap();
            assert!((q.value - c1.value).abs() <= q.err + c1.err + 1e-6 * expect, "{q:?}");
        }
    }

    #[test]
    fn representation_formula_reproduces_solution() {
        let params = Params::new(1.0, 2.0, 4, OpSign::Plus).unwrap();
        let prof = shoot(&params, 6.0, 8.0);
        let traj = to_phase(&prof, params.exponent_constants(6.0).unwrap()).unwrap();
        let t0 = traj.outer_start() + 0.5;
        let res = traj.representation_residual(t0, 2.0, 20).unwrap();
        assert!(res < 1e-6, "{res:e}");
    }

    #[test]
    fn trajectory_csv() {
        let params = lap(4);
        let prof = shoot(&params, 3.0, 3.0);
        let traj = to_phase(&prof, params.exponent_constants(3.0).unwrap()).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,x,dx\n"));
        let meta = traj.metadata();
        assert!((meta.x_s.unwrap() - 1.0).abs() < 1e-14);
    }
}
