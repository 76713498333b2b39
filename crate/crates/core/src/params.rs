//! Problem data `(λ, Λ, N, ±)` and the constants derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance under which `λ = Λ` is treated as the Laplacian case.
pub const LAPLACIAN_REL_TOL: f64 = 1e-12;

/// Relative inward margin applied to the exponent bracket before bisection.
pub const BRACKET_MARGIN: f64 = 1e-9;

/// Which extremal operator is in use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpSign {
    /// Maximal operator `M+`.
    Plus,
    /// Minimal operator `M-`.
    Minus,
}

impl OpSign {
    pub fn as_str(self) -> &'static str {
        match self {
            OpSign::Plus => "plus",
            OpSign::Minus => "minus",
        }
    }
}

impl std::fmt::Display for OpSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OpSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plus" | "+" | "max" => Ok(OpSign::Plus),
            "minus" | "-" | "min" => Ok(OpSign::Minus),
            other => Err(Error::InvalidParams(format!("unknown operator '{other}'"))),
        }
    }
}

/// Validated problem parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub dim: u32,
    pub op: OpSign,
}

/// Dimension-like number `Ñ` of the operator, rejecting `Ñ ≤ 2`.
pub fn dimension_like(lambda: f64, big_lambda: f64, dim: u32, op: OpSign) -> Result<f64> {
    let n = dim as f64;
    let nt = match op {
        OpSign::Plus => lambda / big_lambda * (n - 1.0) + 1.0,
        OpSign::Minus => big_lambda / lambda * (n - 1.0) + 1.0,
    };
    if nt <= 2.0 {
        return Err(Error::DegenerateDimension(nt));
    }
    Ok(nt)
}

impl Params {
    pub fn new(lambda: f64, big_lambda: f64, dim: u32, op: OpSign) -> Result<Self> {
        if !(lambda.is_finite() && big_lambda.is_finite()) || lambda <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "ellipticity constants must be positive and finite (lambda = {lambda}, Lambda = {big_lambda})"
            )));
        }
        if lambda > big_lambda {
            return Err(Error::InvalidParams(format!(
                "require lambda <= Lambda (got {lambda} > {big_lambda})"
            )));
        }
        if dim < 3 {
            return Err(Error::InvalidParams(format!("dimension must be >= 3 (got {dim})")));
        }
        dimension_like(lambda, big_lambda, dim, op)?;
        Ok(Params { lambda, big_lambda, dim, op })
    }

    /// The same ellipticity data with the other operator.
    pub fn with_op(&self, op: OpSign) -> Result<Self> {
        Params::new(self.lambda, self.big_lambda, self.dim, op)
    }

    pub fn n(&self) -> f64 {
        self.dim as f64
    }

    pub fn dimension_like(&self) -> f64 {
        dimension_like(self.lambda, self.big_lambda, self.dim, self.op)
            .expect("validated at construction")
    }

    pub fn is_laplacian(&self) -> bool {
        (self.big_lambda - self.lambda).abs() <= LAPLACIAN_REL_TOL * self.big_lambda
    }

    /// Weight applied to positive Hessian eigenvalues.
    pub fn positive_weight(&self) -> f64 {
        match self.op {
            OpSign::Plus => self.big_lambda,
            OpSign::Minus => self.lambda,
        }
    }

    /// Weight applied to negative Hessian eigenvalues.
    pub fn negative_weight(&self) -> f64 {
        match self.op {
            OpSign::Plus => self.lambda,
            OpSign::Minus => self.big_lambda,
        }
    }

    /// Coefficient of `u''` in the concave (inner) regime: `λ` for `M+`, `Λ` for `M-`.
    pub fn inner_coef(&self) -> f64 {
        self.negative_weight()
    }

    /// Coefficient of `u''` in the convex (outer) regime: `Λ` for `M+`, `λ` for `M-`.
    pub fn outer_coef(&self) -> f64 {
        self.positive_weight()
    }

    /// `(N+2)/(N-2)`.
    pub fn sobolev_exponent(&self) -> f64 {
        let n = self.n();
        (n + 2.0) / (n - 2.0)
    }

    /// `(Ñ+2)/(Ñ-2)`.
    pub fn sobolev_exponent_like(&self) -> f64 {
        let nt = self.dimension_like();
        (nt + 2.0) / (nt - 2.0)
    }

    pub fn exponent_bracket(&self) -> Bracket {
        if self.is_laplacian() {
            return Bracket::Exact(self.sobolev_exponent());
        }
        let nt = self.dimension_like();
        let sob = self.sobolev_exponent();
        match self.op {
            OpSign::Plus => Bracket::Open {
                lo: (nt / (nt - 2.0)).max(sob),
                hi: (nt + 2.0) / (nt - 2.0),
            },
            OpSign::Minus => Bracket::Open {
                lo: (nt + 2.0) / (nt - 2.0),
                hi: sob,
            },
        }
    }

    pub fn exponent_constants(&self, p: f64) -> Result<ExponentConstants> {
        ExponentConstants::new(self.dimension_like(), self.n(), p)
    }
}

/// Interval known to contain the critical exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bracket {
    Open { lo: f64, hi: f64 },
    /// `λ = Λ`: the critical exponent is `(N+2)/(N-2)`.
    Exact(f64),
}

impl Bracket {
    pub fn contains_strictly(&self, p: f64) -> bool {
        match *self {
            Bracket::Open { lo, hi } => lo < p && p < hi,
            Bracket::Exact(v) => p == v,
        }
    }

    /// Endpoints moved inward by [`BRACKET_MARGIN`] (relative).
    pub fn shrunk(&self) -> Option<(f64, f64)> {
        match *self {
            Bracket::Open { lo, hi } => {
                let w = BRACKET_MARGIN * (hi - lo).abs().max(lo.abs());
                Some((lo + w, hi - w))
            }
            Bracket::Exact(_) => None,
        }
    }
}

/// Phase-plane constants for a given exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentConstants {
    pub p: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma: f64,
    /// `Ñ` used to build `lambda1`.
    pub dim_like: f64,
}

impl ExponentConstants {
    pub fn new(dim_like: f64, n: f64, p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidExponent { p, reason: "p must exceed 1".into() });
        }
        let lambda2 = 2.0 / (p - 1.0);
        let lambda1 = -(p * (dim_like - 2.0) - dim_like) / (p - 1.0);
        let gamma = 2.0 * (p + 1.0) / (p - 1.0) - n;
        Ok(ExponentConstants { p, lambda1, lambda2, gamma, dim_like })
    }

    /// `(p(Ñ-2) - Ñ)/2`, the blow-up rate exponent of the Green-function limit.
    pub fn kappa(&self) -> f64 {
        (self.p * (self.dim_like - 2.0) - self.dim_like) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dimension_like_values() {
        assert_eq!(Params::new(1.0, 1.0, 3, OpSign::Plus).unwrap().dimension_like(), 3.0);
        assert_eq!(Params::new(1.0, 2.0, 4, OpSign::Plus).unwrap().dimension_like(), 2.5);
        assert_eq!(Params::new(1.0, 2.0, 4, OpSign::Minus).unwrap().dimension_like(), 7.0);
    }

    #[test]
    fn rejects_small_dimension_like() {
        assert!(matches!(
            Params::new(1.0, 4.0, 4, OpSign::Plus),
            Err(Error::DegenerateDimension(_))
        ));
        assert!(Params::new(1.0, 4.0, 5, OpSign::Plus).is_err());
        assert!(Params::new(1.0, 4.0, 4, OpSign::Minus).is_ok());
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(Params::new(2.0, 1.0, 4, OpSign::Plus).is_err());
        assert!(Params::new(0.0, 1.0, 4, OpSign::Plus).is_err());
        assert!(Params::new(1.0, 1.0, 2, OpSign::Plus).is_err());
        assert!(Params::new(1.0, f64::NAN, 4, OpSign::Plus).is_err());
    }

    #[test]
    fn brackets() {
        let plus = Params::new(1.0, 2.0, 4, OpSign::Plus).unwrap();
        assert_eq!(plus.exponent_bracket(), Bracket::Open { lo: 5.0, hi: 9.0 });
        let minus = Params::new(1.0, 2.0, 4, OpSign::Minus).unwrap();
        match minus.exponent_bracket() {
            Bracket::Open { lo, hi } => {
                assert!((lo - 1.8).abs() < 1e-15);
                assert!((hi - 3.0).abs() < 1e-15);
            }
            b => panic!("unexpected {b:?}"),
        }
        let lap = Params::new(1.0, 1.0, 4, OpSign::Plus).unwrap();
        assert_eq!(lap.exponent_bracket(), Bracket::Exact(3.0));
    }

    #[test]
    fn constants_examples() {
        let lap = Params::new(1.0, 1.0, 4, OpSign::Plus).unwrap();
        let c = lap.exponent_constants(3.0).unwrap();
        assert_eq!((c.lambda1, c.lambda2, c.gamma), (-1.0, 1.0, 0.0));

        let plus = Params::new(1.0, 2.0, 4, OpSign::Plus).unwrap();
        let c = plus.exponent_constants(6.0).unwrap();
        assert!((c.lambda2 - 0.4).abs() < 1e-15);
        assert!((c.lambda1 + 0.1).abs() < 1e-15);
        assert!(plus.exponent_constants(1.0).is_err());
    }

    fn params_strategy() -> impl Strategy<Value = Params> {
        (0.1f64..1.0, 3u32..9, prop::bool::ANY).prop_filter_map("valid", |(ratio, dim, plus)| {
            let op = if plus { OpSign::Plus } else { OpSign::Minus };
            Params::new(ratio, 1.0, dim, op).ok()
        })
    }

    proptest! {
        #[test]
        fn lambda_gap_is_dimension_like_minus_two(params in params_strategy(), p in 1.01f64..20.0) {
            let c = params.exponent_constants(p).unwrap();
            let nt = params.dimension_like();
            prop_assert!(((c.lambda2 - c.lambda1) - (nt - 2.0)).abs() <= 1e-12 * nt.max(1.0));
            prop_assert!(((c.gamma + params.n()) - 2.0 * (p + 1.0) / (p - 1.0)).abs() < 1e-12 * (p + 1.0) / (p - 1.0));
        }

        #[test]
        fn bracket_is_ordered_and_lambda1_negative(params in params_strategy(), s in 0.0f64..1.0) {
            prop_assume!(!params.is_laplacian());
            let Bracket::Open { lo, hi } = params.exponent_bracket() else { unreachable!() };
            prop_assert!(lo < hi);
            let p = lo + s * (hi - lo);
            prop_assume!(p > lo && p < hi);
            prop_assert!(params.exponent_constants(p).unwrap().lambda1 < 0.0);
        }

        #[test]
        fn plus_weight_exponent_range(ratio in 0.1f64..0.999, dim in 3u32..9, s in 0.0f64..=1.0) {
            let Ok(params) = Params::new(ratio, 1.0, dim, OpSign::Plus) else { return Ok(()) };
            let nt = params.dimension_like();
            let (a, b) = (params.sobolev_exponent(), (nt + 2.0) / (nt - 2.0));
            let p = a + s * (b - a);
            let g = params.exponent_constants(p).unwrap().gamma;
            prop_assert!(g <= 1e-12 && g >= nt - params.n() - 1e-12);
        }
    }
}
