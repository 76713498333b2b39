use proptest::prelude::*;
use pucci_core::critical::{find_critical, find_critical_with, CriticalOptions};
use pucci_core::emden_fowler::{classify_profile, extract_c1_from_derivative, to_phase};
use pucci_core::integrator::{integrate, Integrator, SolverOptions, StopCondition};
use pucci_core::params::{Bracket, OpSign, Params};

fn pucci_case() -> impl Strategy<Value = (Params, f64)> {
    (1.0f64..2.5, 4u32..6, prop::bool::ANY, 0.05f64..0.95).prop_filter_map("valid", |(ratio, n, plus, s)| {
        let op = if plus { OpSign::Plus } else { OpSign::Minus };
        let params = Params::new(1.0, ratio, n, op).ok()?;
        let (lo, hi) = match params.exponent_bracket() {
            Bracket::Open { lo, hi } => (lo, hi),
            Bracket::Exact(v) => (v - 0.5, v + 0.5),
        };
        Some((params, lo + s * (hi - lo)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decreasing_with_single_inflection((params, p) in pucci_case()) {
        let prof = integrate(&params, p, 1.0, StopCondition::EfTime(25.0)).unwrap();
        let top = prof.first_zero().unwrap_or(prof.truncation_radius());
        for node in prof.nodes().iter().filter(|n| n.r > 0.0 && n.r <= top && n.u > 0.0) {
            prop_assert!(node.du <= 0.0, "du = {} at r = {}", node.du, node.r);
        }
        prop_assert!(prof.events().single_inflection(), "{:?}", prof.events().inflections);
        prop_assert_eq!(prof.events().derivative_zero_count(), 0);
    }

    #[test]
    fn rescaling_equivariance((params, p) in pucci_case(), alpha in prop::sample::select(vec![0.5f64, 2.0, 10.0])) {
        let a = integrate(&params, p, 1.0, StopCondition::AtRadius(6.0)).unwrap();
        let s = alpha.powf((p - 1.0) / 2.0);
        let b = integrate(&params, p, alpha, StopCondition::AtRadius(6.0 / s)).unwrap();
        for i in 1..60 {
            let r = 0.1 * i as f64 / s;
            let (ub, _) = b.evaluate(r).unwrap();
            let (ua, _) = a.evaluate(s * r).unwrap();
            prop_assert!((ub - alpha * ua).abs() <= 1e-8 * alpha, "r {r}: {ub} vs {}", alpha * ua);
        }
    }
}

#[test]
fn event_self_convergence() {
    let params = Params::new(1.0, 2.0, 4, OpSign::Plus).unwrap();
    let shoot = |tol: f64| {
        Integrator::new(params, 5.0)
            .with_options(SolverOptions::default().with_tolerances(tol, 1e-30))
            .integrate(1.0, StopCondition::AtFirstZero)
            .unwrap()
    };
    let (a, b) = (shoot(1e-8), shoot(5e-9));
    let (ra, rb) = (a.first_zero().unwrap(), b.first_zero().unwrap());
    assert!((ra - rb).abs() / rb < 10.0 * 1e-8);
    let (ia, ib) = (a.inflection().unwrap(), b.inflection().unwrap());
    assert!((ia - ib).abs() / ib < 10.0 * 1e-8);
}

#[test]
fn classification_has_one_threshold() {
    for op in [OpSign::Plus, OpSign::Minus] {
        let params = Params::new(1.0, 2.0, 4, op).unwrap();
        let Bracket::Open { lo, hi } = params.exponent_bracket() else { unreachable!() };
        let p_star = find_critical(&params, 1e-10).unwrap().p_star;
        let mut labels = Vec::new();
        for i in 0..20 {
            let p = lo + (hi - lo) * ((i as f64 + 0.5) / 20.0).powi(3);
            let prof = integrate(&params, p, 1.0, StopCondition::EfTime(60.0)).unwrap();
            let out = classify_profile(&prof);
            assert!(!out.is_undetermined(), "{op:?} p = {p}: {out:?}");
            assert_eq!(out.is_crossing(), p < p_star, "{op:?} p = {p}, p* = {p_star}");
            labels.push(out.is_crossing());
        }
        let switches = labels.windows(2).filter(|w| w[0] != w[1]).count();
        assert!(switches <= 1, "{op:?} {labels:?}");
        assert!(labels[0] || !labels[19]);
    }
}

#[test]
fn talenti_oracle_and_inflection() {
    let crit = find_critical(&Params::new(1.0, 1.0, 4, OpSign::Plus).unwrap(), 1e-10).unwrap();
    for i in 0..=1000 {
        let r = 10.0 * i as f64 / 1000.0;
        let v = 1.0 / (1.0 + r * r / 8.0);
        assert!((crit.profile.evaluate(r).unwrap().0 - v).abs() <= 1e-7);
    }
    assert!((crit.r0 - (8.0f64 / 3.0).sqrt()).abs() <= 1e-7);
    assert!(((crit.c1.value - 8.0) / 8.0).abs() <= 1e-6);
}

#[test]
fn laplacian_bisection_recovers_sobolev_exponent() {
    for n in 3..=5 {
        let params = Params::new(1.0, 1.0, n, OpSign::Plus).unwrap();
        let crit = find_critical_with(&params, &CriticalOptions::default().forced()).unwrap();
        let sob = (n as f64 + 2.0) / (n as f64 - 2.0);
        assert!((crit.p_star - sob).abs() <= 1e-6, "N = {n}: {}", crit.p_star);
        assert!(crit.history_consistent());
        let c1 = (n as f64 * (n as f64 - 2.0)).powf((n as f64 - 2.0) / 2.0);
        assert!(((crit.c1.value - c1) / c1).abs() <= 1e-6, "N = {n}: c1 = {}", crit.c1.value);
    }
}

#[test]
fn derivative_limit_agrees_with_c1() {
    for op in [OpSign::Plus, OpSign::Minus] {
        let params = Params::new(1.0, 2.0, 4, op).unwrap();
        let crit = find_critical(&params, 1e-10).unwrap();
        let traj = to_phase(&crit.profile, params.exponent_constants(crit.p_star).unwrap()).unwrap();
        let d = extract_c1_from_derivative(&traj).unwrap();
        assert!((d.value - crit.c1.value).abs() <= d.err + crit.c1.err + 1e-6 * crit.c1.value, "{op:?} {d:?} {:?}", crit.c1);
        assert!(crit.history_consistent());
        let again = crit.c1_with_horizon(1.5).unwrap();
        assert!((again.value - crit.c1.value).abs() <= 3.0 * crit.c1.err.max(again.err) + 1e-9 * crit.c1.value, "{op:?} {again:?}");
    }
}

#[test]
fn representation_formula_on_trajectory() {
    let params = Params::new(1.0, 2.0, 4, OpSign::Plus).unwrap();
    let crit = find_critical(&params, 1e-10).unwrap();
    let traj = crit.trajectory().unwrap();
    let t0 = traj.outer_start() + 1.0;
    assert!(traj.representation_residual(t0, 2.0, 40).unwrap() <= 1e-6);
}
