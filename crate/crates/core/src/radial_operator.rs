//! Pucci extremal operators restricted to radial functions.
//!
//! For a radial `u` the Hessian has the axial eigenvalue `u''` (multiplicity 1)
//! and the tangential eigenvalue `u'/r` (multiplicity `N-1`). The operator is
//! strictly increasing in `u''`, so `-M(D²u) = f(u)` has a unique solution for
//! `u''` given `(r, u, u')`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;

/// Which radial operator is integrated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorModel {
    /// The extremal operator itself.
    #[default]
    Pucci,
    /// Only the convex-regime form `c·(u'' + (Ñ-1)u'/r)` on the whole half line.
    OuterOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialState {
    pub r: f64,
    pub u: f64,
    pub du: f64,
}

impl RadialState {
    pub fn new(r: f64, u: f64, du: f64) -> Self {
        RadialState { r, u, du }
    }
}

/// Hessian spectrum of a radial function at `r > 0`.
pub fn hessian_eigen_radial(state: RadialState, ddu: f64, dim: u32) -> Result<Vec<f64>> {
    if state.r <= 0.0 {
        return Err(Error::AtOrigin);
    }
    let mut eigs = Vec::with_capacity(dim as usize);
    eigs.push(ddu);
    eigs.extend(std::iter::repeat_n(state.du / state.r, dim as usize - 1));
    Ok(eigs)
}

/// Spectrum at the origin, where `u'/r → u''`.
pub fn hessian_eigen_origin(ddu: f64, dim: u32) -> Vec<f64> {
    vec![ddu; dim as usize]
}

pub fn pucci_apply(params: &Params, eigs: &[f64]) -> f64 {
    let (pos, neg) = (params.positive_weight(), params.negative_weight());
    eigs.iter()
        .map(|&mu| if mu > 0.0 { pos * mu } else if mu < 0.0 { neg * mu } else { 0.0 })
        .sum()
}

/// Odd extension of `u^p`.
#[inline]
pub fn power_nonlinearity(u: f64, p: f64) -> f64 {
    if u >= 0.0 {
        u.powf(p)
    } else {
        -(-u).powf(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DduSolution {
    pub ddu: f64,
    /// `u < 0`: the odd extension of the nonlinearity was used.
    pub extended: bool,
}

/// Fixed choice of eigenvalue weights. Within a regime the right-hand side is
/// smooth; regime changes are handled as integration events.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Regime {
    /// Weight on `u''`.
    pub axial: f64,
    /// Weight on `(N-1)u'/r`.
    pub tangential: f64,
    /// Sign of `u''` this regime assumes (+1, -1).
    pub ddu_sign: f64,
    /// Sign of `u'` this regime assumes (+1, -1).
    pub du_sign: f64,
}

impl Regime {
    pub fn select(params: &Params, model: OperatorModel, ddu_sign: f64, du_sign: f64) -> Regime {
        match model {
            OperatorModel::Pucci => {
                let w = |s: f64| if s > 0.0 { params.positive_weight() } else { params.negative_weight() };
                Regime { axial: w(ddu_sign), tangential: w(du_sign), ddu_sign, du_sign }
            }
            OperatorModel::OuterOnly => {
                let c = params.outer_coef();
                let nt = params.dimension_like();
                Regime {
                    axial: c,
                    tangential: c * (nt - 1.0) / (params.n() - 1.0),
                    ddu_sign,
                    du_sign,
                }
            }
        }
    }

    /// `-f(u) - w_t (N-1) u'/r`; the sign of `u''` equals the sign of this.
    #[inline]
    pub fn numerator(&self, n: f64, p: f64, r: f64, u: f64, du: f64) -> f64 {
        -power_nonlinearity(u, p) - self.tangential * (n - 1.0) * du / r
    }

    #[inline]
    pub fn ddu(&self, n: f64, p: f64, r: f64, u: f64, du: f64) -> f64 {
        self.numerator(n, p, r, u, du) / self.axial
    }

    /// Scale of the numerator's terms, used for dead-band decisions.
    #[inline]
    pub fn scale(&self, n: f64, p: f64, r: f64, u: f64, du: f64) -> f64 {
        power_nonlinearity(u, p).abs() + (self.tangential * (n - 1.0) * du / r).abs()
    }
}

/// Dead band under which `u''` is treated as zero.
pub const DDU_DEAD_BAND: f64 = 1e-14;

/// Solve `M(D²u) = -u^p` for `u''` at a radial state with `r > 0`.
pub fn solve_ddu(params: &Params, p: f64, state: RadialState) -> Result<DduSolution> {
    solve_ddu_with(params, OperatorModel::Pucci, p, state)
}

pub fn solve_ddu_with(
    params: &Params,
    model: OperatorModel,
    p: f64,
    state: RadialState,
) -> Result<DduSolution> {
    if state.r <= 0.0 {
        return Err(Error::AtOrigin);
    }
    let n = params.n();
    let RadialState { r, u, du } = state;
    let du_sign = if du > 0.0 { 1.0 } else { -1.0 };
    // The numerator does not depend on the axial weight, so its sign picks the branch.
    let probe = Regime::select(params, model, -1.0, du_sign);
    let num = probe.numerator(n, p, r, u, du);
    let scale = probe.scale(n, p, r, u, du);
    let ddu = if num.abs() <= DDU_DEAD_BAND * scale {
        0.0
    } else {
        let regime = Regime::select(params, model, num.signum(), du_sign);
        num / regime.axial
    };
    Ok(DduSolution { ddu, extended: u < 0.0 })
}

/// `u''(0)` for a profile with `u(0) = u0`.
pub fn origin_curvature(params: &Params, model: OperatorModel, p: f64, u0: f64) -> f64 {
    let f = power_nonlinearity(u0, p);
    match model {
        // All eigenvalues equal u''(0) < 0.
        OperatorModel::Pucci => -f / (params.negative_weight() * params.n()),
        OperatorModel::OuterOnly => -f / (params.outer_coef() * params.dimension_like()),
    }
}
