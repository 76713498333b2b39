use proptest::prelude::*;
use pucci_core::params::{OpSign, Params};
use pucci_core::radial_operator::{hessian_eigen_radial, power_nonlinearity, pucci_apply, solve_ddu, RadialState};

fn any_params() -> impl Strategy<Value = Params> {
    (0.2f64..3.0, 1.0f64..4.0, 3u32..8, prop::bool::ANY).prop_filter_map("valid", |(l, ratio, n, plus)| {
        let op = if plus { OpSign::Plus } else { OpSign::Minus };
        Params::new(l, l * ratio, n, op).ok()
    })
}

proptest! {
    #[test]
    fn round_trip(params in any_params(), p in 1.1f64..8.0, r in 1e-3f64..1e3, u in 1e-6f64..10.0, du in -50.0f64..50.0) {
        let st = RadialState::new(r, u, du);
        let ddu = solve_ddu(&params, p, st).unwrap().ddu;
        let eigs = hessian_eigen_radial(st, ddu, params.dim).unwrap();
        let lhs = pucci_apply(&params, &eigs);
        let f = power_nonlinearity(u, p);
        let scale = f.abs() + (params.big_lambda * (params.n() - 1.0) * du / r).abs();
        prop_assert!((lhs + f).abs() <= 1e-12 * scale, "{lhs} vs {}", -f);
    }

    #[test]
    fn regime_formulas(params in any_params(), p in 1.1f64..8.0, r in 1e-3f64..1e3, u in 1e-6f64..10.0, du in -50.0f64..0.0) {
        let st = RadialState::new(r, u, du);
        let ddu = solve_ddu(&params, p, st).unwrap().ddu;
        let n = params.n();
        let nt = params.dimension_like();
        let f = u.powf(p);
        let (inner, outer) = (params.inner_coef(), params.outer_coef());
        let scale = f / inner.min(outer) + (nt.max(n)) * du.abs() / r;
        if ddu < 0.0 {
            prop_assert!((ddu - (-f / inner - (n - 1.0) * du / r)).abs() <= 1e-12 * scale);
        } else if ddu > 0.0 {
            prop_assert!((ddu + (nt - 1.0) * du / r + f / outer).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn continuous_across_inflection(params in any_params(), p in 1.1f64..8.0, r in 1e-2f64..1e2, u in 1e-3f64..5.0, s in -1e-6f64..1e-6) {
        // du chosen so the concave-branch numerator vanishes, then perturbed.
        let tang = params.negative_weight();
        let du0 = -u.powf(p) * r / (tang * (params.n() - 1.0));
        let a = solve_ddu(&params, p, RadialState::new(r, u, du0 * (1.0 + s))).unwrap().ddu;
        let b = solve_ddu(&params, p, RadialState::new(r, u, du0 * (1.0 - s))).unwrap().ddu;
        let scale = u.powf(p) / params.lambda;
        prop_assert!((a - b).abs() <= 4e-6 * scale, "{a} {b}");
    }

    #[test]
    fn laplacian_rhs(l in 0.5f64..2.0, n in 3u32..8, p in 1.1f64..8.0, r in 1e-3f64..1e3, u in 1e-6f64..10.0, du in -50.0f64..50.0) {
        let params = Params::new(l, l, n, OpSign::Plus).unwrap();
        let ddu = solve_ddu(&params, p, RadialState::new(r, u, du)).unwrap().ddu;
        let expect = -u.powf(p) / l - (n as f64 - 1.0) * du / r;
        let scale = u.powf(p) / l + (n as f64 - 1.0) * du.abs() / r;
        prop_assert!((ddu - expect).abs() <= 1e-12 * scale);
    }
}
