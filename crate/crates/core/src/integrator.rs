//! Shooting from the origin: adaptive Dormand–Prince 5(4) with dense output
//! and event location for `u = 0`, `u' = 0`, `u'' = 0` and the phase-plane
//! turning point `r u' + λ2 u = 0`.
//!
//! The radial equation switches form whenever `u''` or `u'` changes sign.
//! Each switch is located on the dense output and the step is cut there, so
//! every accepted step integrates a smooth right-hand side.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::radial_operator::{origin_curvature, solve_ddu_with, OperatorModel, RadialState, Regime, DDU_DEAD_BAND};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rel_tol: f64,
    /// Absolute tolerance on `u`, in units of `u(0)`.
    pub abs_tol: f64,
    /// Starting radius in units of the natural length `u0^{-(p-1)/2}`.
    pub r_init: f64,
    pub max_steps: usize,
    pub model: OperatorModel,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            r_init: 1e-6,
            max_steps: 2_000_000,
            model: OperatorModel::Pucci,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_model(mut self, model: OperatorModel) -> Self {
        self.model = model;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCondition {
    /// Stop at the first zero; radius capped at `e^200` natural lengths.
    AtFirstZero,
    /// Stop at the given radius or at the first zero.
    AtRadius(f64),
    /// Stop at `r = e^t` (natural units), the first zero, the phase-plane
    /// turning point, or capture by a stable nonzero equilibrium.
    EfTime(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub r: f64,
    pub u: f64,
    pub du: f64,
    pub ddu: f64,
}

#[derive(Clone, Debug, PartialEq)]
struct Segment {
    r: f64,
    h: f64,
    coeffs: [[f64; 2]; 5],
}

impl Segment {
    fn eval(&self, theta: f64) -> [f64; 2] {
        let c = &self.coeffs;
        let t1 = 1.0 - theta;
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            *o = c[0][i] + theta * (c[1][i] + t1 * (c[2][i] + theta * (c[3][i] + t1 * c[4][i])));
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Events {
    pub first_zero: Option<f64>,
    /// First convexity change.
    pub inflection: Option<f64>,
    pub inflections: Vec<f64>,
    pub derivative_zeros: Vec<f64>,
    /// Radius where `r u' + λ2 u` returned to zero from below after the inflection.
    pub phase_turn: Option<f64>,
    /// Radius where the phase point entered the basin of a stable nonzero equilibrium.
    pub captured: Option<f64>,
}

impl Events {
    pub fn derivative_zero_count(&self) -> usize {
        self.derivative_zeros.len()
    }

    pub fn single_inflection(&self) -> bool {
        self.inflections.len() <= 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    FirstZero,
    Radius,
    PhaseTurn,
    Captured,
    StepUnderflow { r: f64 },
    StepBudget { r: f64 },
}

/// Dense radial solution from the origin.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    params: Params,
    p: f64,
    u0: f64,
    options: SolverOptions,
    origin_curvature: f64,
    nodes: Vec<Node>,
    segments: Vec<Segment>,
    events: Events,
    termination: Termination,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileMetadata {
    pub params: Params,
    pub p: f64,
    pub u0: f64,
    pub events: Events,
    pub termination: Termination,
    pub truncation_radius: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub r_init: f64,
    pub model: OperatorModel,
    pub nodes: usize,
}

/// Taylor start `u(r) = u0 + c2 r²/2`, `u'(r) = c2 r`; local error `O(r⁴)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesStart {
    pub state: RadialState,
    pub ddu: f64,
    pub c2: f64,
    /// Magnitude of the neglected quartic term.
    pub truncation_error: f64,
}

pub fn series_start(params: &Params, p: f64, u0: f64, r_init: f64) -> Result<SeriesStart> {
    series_start_with(params, OperatorModel::Pucci, p, u0, r_init)
}

pub fn series_start_with(
    params: &Params,
    model: OperatorModel,
    p: f64,
    u0: f64,
    r_init: f64,
) -> Result<SeriesStart> {
    if !(r_init > 0.0) {
        return Err(Error::Integration { r: r_init, reason: "r_init must be positive".into() });
    }
    if !(u0 > 0.0) {
        return Err(Error::InvalidParams(format!("u0 must be positive (got {u0})")));
    }
    let c2 = origin_curvature(params, model, p, u0);
    let u = u0 + 0.5 * c2 * r_init * r_init;
    let du = c2 * r_init;
    // u'''' ~ p u0^{p-1} c2 / (coef N) scale; quartic term / 24.
    let c4 = (p * u0.powf(p - 1.0) * c2 / (params.inner_coef() * params.n())).abs();
    Ok(SeriesStart {
        state: RadialState::new(r_init, u, du),
        ddu: c2,
        c2,
        truncation_error: c4 * r_init.powi(4) / 24.0,
    })
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

type Vec2 = [f64; 2];

/// Half-width, relative to `x_s`, of the box around a stable equilibrium that ends a shot.
const CAPTURE_BOX: f64 = 1e-3;

#[inline]
fn axpy(y: Vec2, terms: &[(f64, Vec2)], h: f64) -> Vec2 {
    let mut out = y;
    for &(a, k) in terms {
        out[0] += h * a * k[0];
        out[1] += h * a * k[1];
    }
    out
}

struct StepResult {
    y: Vec2,
    err: Vec2,
    k7: Vec2,
    segment: Segment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EventKind {
    Zero,
    Inflection,
    DerivativeZero,
    PhaseTurn,
}

struct Shooter {
    p: f64,
    n: f64,
    lambda2: f64,
    model: OperatorModel,
}

impl Shooter {
    #[inline]
    fn rhs(&self, regime: &Regime, r: f64, y: Vec2) -> Vec2 {
        [y[1], regime.ddu(self.n, self.p, r, y[0], y[1])]
    }

    fn step(&self, regime: &Regime, r: f64, y: Vec2, k1: Vec2, h: f64) -> StepResult {
        let k2 = self.rhs(regime, r + C2 * h, axpy(y, &[(A21, k1)], h));
        let k3 = self.rhs(regime, r + C3 * h, axpy(y, &[(A31, k1), (A32, k2)], h));
        let k4 = self.rhs(regime, r + C4 * h, axpy(y, &[(A41, k1), (A42, k2), (A43, k3)], h));
        let k5 = self.rhs(
            regime,
            r + C5 * h,
            axpy(y, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], h),
        );
        let k6 = self.rhs(
            regime,
            r + h,
            axpy(y, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)], h),
        );
        let y_new = axpy(y, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)], h);
        let k7 = self.rhs(regime, r + h, y_new);
        let err = axpy(
            [0.0, 0.0],
            &[(E1, k1), (E3, k3), (E4, k4), (E5, k5), (E6, k6), (E7, k7)],
            h,
        );
        let mut coeffs = [[0.0; 2]; 5];
        for i in 0..2 {
            let ydiff = y_new[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            coeffs[0][i] = y[i];
            coeffs[1][i] = ydiff;
            coeffs[2][i] = bspl;
            coeffs[3][i] = ydiff - h * k7[i] - bspl;
            coeffs[4][i] =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        StepResult { y: y_new, err, k7, segment: Segment { r, h, coeffs } }
    }

    fn event_value(&self, kind: EventKind, regime: &Regime, r: f64, y: Vec2) -> f64 {
        match kind {
            EventKind::Zero => y[0],
            EventKind::Inflection => regime.numerator(self.n, self.p, r, y[0], y[1]),
            EventKind::DerivativeZero => y[1],
            EventKind::PhaseTurn => r * y[1] + self.lambda2 * y[0],
        }
    }

    /// Fraction of the step at which `kind` changes sign towards `target_sign`.
    fn locate(&self, kind: EventKind, regime: &Regime, seg: &Segment, target_sign: f64) -> f64 {
        let g = |theta: f64| self.event_value(kind, regime, seg.r + theta * seg.h, seg.eval(theta));
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) * target_sign >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        // Secant polish inside the final bracket.
        let (glo, ghi) = (g(lo), g(hi));
        if glo != ghi && glo * ghi <= 0.0 {
            let s = lo - glo * (hi - lo) / (ghi - glo);
            if s.is_finite() && s >= lo && s <= hi {
                return s;
            }
        }
        hi
    }
}

/// Integrator configured for one `(params, p)`.
#[derive(Clone, Copy, Debug)]
pub struct Integrator {
    pub params: Params,
    pub p: f64,
    pub options: SolverOptions,
}

impl Integrator {
    pub fn new(params: Params, p: f64) -> Self {
        Integrator { params, p, options: SolverOptions::default() }
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    /// Natural length `u0^{-(p-1)/2}` of a shot from height `u0`.
    pub fn length_scale(&self, u0: f64) -> f64 {
        u0.powf(-(self.p - 1.0) / 2.0)
    }

    pub fn integrate(&self, u0: f64, stop: StopCondition) -> Result<RadialProfile> {
        let params = &self.params;
        let p = self.p;
        if !(p > 1.0) {
            return Err(Error::InvalidExponent { p, reason: "p must exceed 1".into() });
        }
        let opts = self.options;
        if !(opts.rel_tol > 0.0) || !(opts.abs_tol >= 0.0) {
            return Err(Error::InvalidParams("tolerances must be positive".into()));
        }
        let len = self.length_scale(u0);
        let r_init = opts.r_init * len;
        let start = series_start_with(params, opts.model, p, u0, r_init)?;
        let shooter = Shooter {
            p,
            n: params.n(),
            lambda2: 2.0 / (p - 1.0),
            model: opts.model,
        };
        let (r_stop, watch_turn) = match stop {
            StopCondition::AtFirstZero => (len * 200f64.exp(), false),
            StopCondition::AtRadius(r) => (r, false),
            StopCondition::EfTime(t) => (len * t.exp(), true),
        };
        if !(r_stop > r_init) {
            return Err(Error::Integration { r: r_stop, reason: "stop radius below start".into() });
        }

        // Stable equilibrium of the phase plane, when the outer regime has one.
        let capture = {
            let c = params.exponent_constants(p)?;
            if watch_turn && c.lambda1 < 0.0 && c.lambda1 + c.lambda2 < 0.0 {
                Some((c.lambda1.abs() * c.lambda2 * params.outer_coef()).powf(1.0 / (p - 1.0)))
            } else {
                None
            }
        };
        let mut events = Events::default();
        let mut nodes = vec![
            Node { r: 0.0, u: u0, du: 0.0, ddu: start.c2 },
            Node { r: r_init, u: start.state.u, du: start.state.du, ddu: start.ddu },
        ];
        let mut segments: Vec<Segment> = Vec::new();

        let mut regime = Regime::select(params, shooter.model, -1.0, -1.0);
        let mut r = r_init;
        let mut y: Vec2 = [start.state.u, start.state.du];
        let mut k1 = shooter.rhs(&regime, r, y);
        let mut h = 0.01 * len;
        let mut turn_armed = false;
        let mut steps = 0usize;
        let abs_u = opts.abs_tol * u0;

        let termination = loop {
            if r >= r_stop * (1.0 - 4.0 * f64::EPSILON) {
                break Termination::Radius;
            }
            if steps >= opts.max_steps {
                break Termination::StepBudget { r };
            }
            steps += 1;
            let h_try = h.min(r_stop - r);
            let st = shooter.step(&regime, r, y, k1, h_try);
            let r_new = r + h_try;
            let sc_u = abs_u + opts.rel_tol * y[0].abs().max(st.y[0].abs());
            let sc_du = abs_u / r_new.max(len) + opts.rel_tol * y[1].abs().max(st.y[1].abs());
            let e0 = st.err[0] / sc_u;
            let e1 = st.err[1] / sc_du;
            let err = ((e0 * e0 + e1 * e1) / 2.0).sqrt();
            if !err.is_finite() || err > 1.0 {
                let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.1) } else { 0.1 };
                h = h_try * fac;
                if h < 1e-14 * r.max(len) {
                    break Termination::StepUnderflow { r };
                }
                continue;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let h_next = h_try * fac;

            // Events at the end of the step.
            let mut pending: Vec<(EventKind, f64)> = Vec::new();
            if y[0] > 0.0 && st.y[0] <= 0.0 {
                pending.push((EventKind::Zero, -1.0));
            }
            {
                let num = regime.numerator(shooter.n, p, r_new, st.y[0], st.y[1]);
                let scale = regime.scale(shooter.n, p, r_new, st.y[0], st.y[1]);
                if num * regime.ddu_sign < 0.0 && num.abs() > DDU_DEAD_BAND * scale {
                    pending.push((EventKind::Inflection, -regime.ddu_sign));
                }
            }
            if st.y[1] * regime.du_sign < 0.0 {
                pending.push((EventKind::DerivativeZero, -regime.du_sign));
            }
            if watch_turn && turn_armed {
                let g = r_new * st.y[1] + shooter.lambda2 * st.y[0];
                if g >= 0.0 && st.y[0] > 0.0 {
                    pending.push((EventKind::PhaseTurn, 1.0));
                }
            }

            if pending.is_empty() {
                segments.push(st.segment);
                r = r_new;
                y = st.y;
                k1 = st.k7;
                let ddu = k1[1];
                nodes.push(Node { r, u: y[0], du: y[1], ddu });
                if watch_turn && events.inflection.is_some() && !turn_armed {
                    turn_armed = r * y[1] + shooter.lambda2 * y[0] < 0.0;
                }
                if let (Some(xs), Some(_)) = (capture, events.inflection) {
                    let rl = r.powf(shooter.lambda2);
                    let (x, dx) = (rl * y[0], rl * (r * y[1] + shooter.lambda2 * y[0]));
                    if (x - xs).abs() <= CAPTURE_BOX * xs && dx.abs() <= CAPTURE_BOX * xs {
                        events.captured = Some(r);
                        break Termination::Captured;
                    }
                }
                h = h_next;
                continue;
            }

            let (kind, theta) = pending
                .iter()
                .map(|&(k, s)| (k, shooter.locate(k, &regime, &st.segment, s)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty");
            let h_e = theta * h_try;
            let loc_tol = 1e-13 * r.max(len);
            if h_e > loc_tol {
                let redo = shooter.step(&regime, r, y, k1, h_e);
                segments.push(redo.segment);
                r += h_e;
                y = redo.y;
            }
            match kind {
                EventKind::Zero => {
                    events.first_zero = Some(r);
                }
                EventKind::Inflection => {
                    events.inflections.push(r);
                    if events.inflection.is_none() {
                        events.inflection = Some(r);
                    }
                    regime = Regime::select(params, shooter.model, -regime.ddu_sign, regime.du_sign);
                }
                EventKind::DerivativeZero => {
                    events.derivative_zeros.push(r);
                    regime = Regime::select(params, shooter.model, regime.ddu_sign, -regime.du_sign);
                }
                EventKind::PhaseTurn => {
                    events.phase_turn = Some(r);
                }
            }
            k1 = shooter.rhs(&regime, r, y);
            let ddu = match kind {
                EventKind::Inflection => 0.0,
                _ => k1[1],
            };
            if h_e > loc_tol {
                nodes.push(Node { r, u: y[0], du: y[1], ddu });
            } else if let Some(last) = nodes.last_mut() {
                last.ddu = ddu;
            }
            if watch_turn && events.inflection.is_some() && !turn_armed {
                turn_armed = r * y[1] + shooter.lambda2 * y[0] < 0.0;
            }
            match kind {
                EventKind::Zero => break Termination::FirstZero,
                EventKind::PhaseTurn => break Termination::PhaseTurn,
                _ => {}
            }
            h = h_next.max(16.0 * loc_tol);
        };

        Ok(RadialProfile {
            params: *params,
            p,
            u0,
            options: opts,
            origin_curvature: start.c2,
            nodes,
            segments,
            events,
            termination,
        })
    }
}

/// Shoot with default solver options.
pub fn integrate(params: &Params, p: f64, u0: f64, stop: StopCondition) -> Result<RadialProfile> {
    Integrator::new(*params, p).integrate(u0, stop)
}

impl RadialProfile {
    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn model(&self) -> OperatorModel {
        self.options.model
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn events(&self) -> &Events {
        &self.events
    }

    pub fn termination(&self) -> &Termination {
        &self.termination
    }

    pub fn truncation_radius(&self) -> f64 {
        self.nodes.last().map(|n| n.r).unwrap_or(0.0)
    }

    pub fn length_scale(&self) -> f64 {
        self.u0.powf(-(self.p - 1.0) / 2.0)
    }

    pub fn inflection(&self) -> Result<f64> {
        self.events.inflection.ok_or(Error::MissingEvent("inflection"))
    }

    pub fn first_zero(&self) -> Result<f64> {
        self.events.first_zero.ok_or(Error::MissingEvent("first zero"))
    }

    /// `(u, u')` at `r` from the dense output.
    pub fn evaluate(&self, r: f64) -> Result<(f64, f64)> {
        let max = self.truncation_radius();
        if !(r >= 0.0) || r > max {
            return Err(Error::OutOfRange { r, max });
        }
        let r_init = self.nodes[1].r;
        if r <= r_init {
            if r == r_init {
                return Ok((self.nodes[1].u, self.nodes[1].du));
            }
            let c2 = self.origin_curvature;
            return Ok((self.u0 + 0.5 * c2 * r * r, c2 * r));
        }
        // segments[k] spans nodes[k+1] .. nodes[k+2]
        let k = self.segments.partition_point(|s| s.r + s.h < r).min(self.segments.len() - 1);
        let node = &self.nodes[k + 2];
        if r == node.r {
            return Ok((node.u, node.du));
        }
        let seg = &self.segments[k];
        let theta = ((r - seg.r) / seg.h).clamp(0.0, 1.0);
        let v = seg.eval(theta);
        Ok((v[0], v[1]))
    }

    /// `u''` from the equation at the interpolated state.
    pub fn ddu_at(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Ok(self.origin_curvature);
        }
        let (u, du) = self.evaluate(r)?;
        Ok(solve_ddu_with(&self.params, self.options.model, self.p, RadialState::new(r, u, du))?.ddu)
    }

    pub fn metadata(&self) -> ProfileMetadata {
        ProfileMetadata {
            params: self.params,
            p: self.p,
            u0: self.u0,
            events: self.events.clone(),
            termination: self.termination.clone(),
            truncation_radius: self.truncation_radius(),
            rel_tol: self.options.rel_tol,
            abs_tol: self.options.abs_tol,
            r_init: self.nodes[1].r,
            model: self.options.model,
            nodes: self.nodes.len(),
        }
    }

    /// CSV with header `r,u,du,ddu`, one row per node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,u,du,ddu")?;
        for n in &self.nodes {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", n.r, n.u, n.du, n.ddu)?;
        }
        Ok(())
    }
}
