use proptest::prelude::*;
use pucci_core::params::{Bracket, OpSign, Params};

fn any_params() -> impl Strategy<Value = Params> {
    (0.2f64..3.0, 1.0f64..4.0, 3u32..8, prop::bool::ANY).prop_filter_map("valid", |(l, ratio, n, plus)| {
        let op = if plus { OpSign::Plus } else { OpSign::Minus };
        Params::new(l, l * ratio, n, op).ok()
    })
}

proptest! {
    #[test]
    fn exponent_gap_is_dimension_like(params in any_params(), s in 0.01f64..0.99) {
        let (lo, hi) = match params.exponent_bracket() {
            Bracket::Open { lo, hi } => (lo, hi),
            Bracket::Exact(v) => (v - 0.5, v + 0.5),
        };
        let p = lo + s * (hi - lo);
        let c = params.exponent_constants(p).unwrap();
        let nt = params.dimension_like();
        prop_assert!((c.lambda2 - c.lambda1 - (nt - 2.0)).abs() <= 1e-12 * nt);
    }

    #[test]
    fn lambda1_negative_inside_bracket(params in any_params(), s in 0.001f64..0.999) {
        if let Bracket::Open { lo, hi } = params.exponent_bracket() {
            prop_assert!(lo < hi);
            let p = lo + s * (hi - lo);
            let c = params.exponent_constants(p).unwrap();
            let nt = params.dimension_like();
            prop_assert_eq!(c.lambda1 < 0.0, p > nt / (nt - 2.0));
            prop_assert!(c.lambda1 < 0.0);
        }
    }

    #[test]
    fn plus_weight_exponent_range(l in 0.2f64..3.0, ratio in 1.0001f64..4.0, n in 3u32..8, s in 0.0f64..=1.0) {
        if let Ok(params) = Params::new(l, l * ratio, n, OpSign::Plus) {
            let nt = params.dimension_like();
            let lo = params.sobolev_exponent();
            let hi = (nt + 2.0) / (nt - 2.0);
            let p = lo + s * (hi - lo);
            let gamma = 2.0 * (p + 1.0) / (p - 1.0) - n as f64;
            prop_assert!(gamma <= 1e-12 && gamma >= nt - n as f64 - 1e-12, "gamma {gamma}");
        }
    }
}

#[test]
fn laplacian_bracket_is_exact() {
    for n in 3..7 {
        let p = Params::new(1.0, 1.0, n, OpSign::Plus).unwrap();
        let sob = (n as f64 + 2.0) / (n as f64 - 2.0);
        assert_eq!(p.exponent_bracket(), Bracket::Exact(sob));
        assert!((p.dimension_like() - n as f64).abs() < 1e-15);
    }
}

#[test]
fn degenerate_plus_dimension_rejected() {
    assert!(Params::new(1.0, 4.0, 4, OpSign::Plus).is_err());
    assert!(Params::new(1.0, 4.0, 5, OpSign::Plus).is_err());
    assert!(Params::new(1.0, 4.0, 4, OpSign::Minus).is_ok());
    assert!(Params::new(0.0, 1.0, 4, OpSign::Plus).is_err());
    assert!(Params::new(2.0, 1.0, 4, OpSign::Plus).is_err());
    assert!(Params::new(1.0, 1.0, 2, OpSign::Plus).is_err());
}
