//! Frontier searches against brute-force enumeration on small instances.

mod oracle;

use podloc::frontier::{balanced_box, endpoints, epsilon_constraint, BiObjective, SearchConfig};
use podloc::matheuristic::{mat_frontier, MatConfig};
use podloc::{Instance, ParetoFront, ScenarioSet, Solver, UncertaintyMode};

fn assert_front_matches(
    front: &ParetoFront,
    expected: &[(i64, f64, Vec<bool>)],
    label: &str,
) {
    let got: Vec<(i64, f64)> = front.points().map(|p| (p.f1, p.f2)).collect();
    let want: Vec<(i64, f64)> = expected.iter().map(|&(f1, f2, _)| (f1, f2)).collect();
    assert_eq!(
        got.len(),
        want.len(),
        "{}: front size {} != expected {} ({:?} vs {:?})",
        label,
        got.len(),
        want.len(),
        got,
        want
    );
    for ((gf1, gf2), (wf1, wf2)) in got.iter().zip(&want) {
        assert_eq!(gf1, wf1, "{}: f1 mismatch", label);
        assert!(
            (gf2 - wf2).abs() <= 1e-6,
            "{}: f2 mismatch {} vs {}",
            label,
            gf2,
            wf2
        );
    }
}

fn exact_setup(
    inst: &Instance,
    scen: &ScenarioSet,
    mode: UncertaintyMode,
) -> (BiObjective<'static>, Solver, SearchConfig) {
    // leak is fine in tests: keeps lifetimes simple
    let inst: &'static Instance = Box::leak(Box::new(inst.clone()));
    let scen: &'static ScenarioSet = Box::leak(Box::new(scen.clone()));
    let prob = BiObjective::new(inst, scen, mode).unwrap();
    (prob, Solver::builtin(), SearchConfig::default())
}

#[test]
fn toy_epsilon_front_equals_enumeration() {
    let (inst, scen) = oracle::toy_instance();
    let mode = UncertaintyMode::CVaR { alpha: 0.0 };
    let expected = oracle::oracle_front(&inst, &scen, mode);
    let (prob, solver, cfg) = exact_setup(&inst, &scen, mode);
    let out = epsilon_constraint(&prob, &solver, &cfg).unwrap();
    assert!(out.complete);
    assert_front_matches(&out.front, &expected, "toy eps");

    // the sweep enumerates in strictly decreasing f1 order
    for w in out.discovered.windows(2) {
        assert!(w[0].f1 > w[1].f1, "sweep order violated: {:?}", out.discovered);
    }
    // consecutive front points differ by at least d1 in f1
    let pts: Vec<_> = out.front.points().collect();
    for w in pts.windows(2) {
        assert!(w[1].f1 - w[0].f1 >= cfg.d1);
    }
}

#[test]
fn toy_balanced_box_matches_epsilon() {
    let (inst, scen) = oracle::toy_instance();
    for mode in [
        UncertaintyMode::Expectation,
        UncertaintyMode::WorstCase,
        UncertaintyMode::CVaR { alpha: 0.5 },
    ] {
        let expected = oracle::oracle_front(&inst, &scen, mode);
        let (prob, solver, cfg) = exact_setup(&inst, &scen, mode);
        let eps = epsilon_constraint(&prob, &solver, &cfg).unwrap();
        let bb = balanced_box(&prob, &solver, &cfg).unwrap();
        assert!(eps.complete && bb.complete);
        assert_front_matches(&eps.front, &expected, "eps");
        assert!(
            eps.front.same_points(&bb.front),
            "bb/eps disagree: {:?} vs {:?}",
            bb.front.points().collect::<Vec<_>>(),
            eps.front.points().collect::<Vec<_>>()
        );
    }
}

#[test]
fn toy_endpoints_match_enumeration() {
    let (inst, scen) = oracle::toy_instance();
    let mode = UncertaintyMode::Expectation;
    let all = oracle::enumerate_y(&inst, &scen, mode);

    // brute-force lexicographic extremes
    let zt = all
        .iter()
        .map(|&(f1, f2, _)| (f1, f2))
        .min_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)))
        .unwrap();
    let zb = all
        .iter()
        .map(|&(f1, f2, _)| (f1, f2))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .unwrap();

    let (prob, solver, cfg) = exact_setup(&inst, &scen, mode);
    let (top, bottom) = endpoints(&prob, &solver, &cfg).unwrap();
    assert_eq!(top.point.f1, zt.0);
    assert!((top.point.f2 - zt.1).abs() <= 1e-6);
    assert_eq!(bottom.point.f1, zb.0);
    assert!((bottom.point.f2 - zb.1).abs() <= 1e-6);
    // opening nothing is always the cheap endpoint
    assert_eq!(top.point.f1, 0);
    assert!(top.point.f1 <= bottom.point.f1);
    assert!(bottom.point.f2 <= top.point.f2);
}

#[test]
fn zero_capacity_candidates_collapse_the_front() {
    let (mut inst, scen) = oracle::toy_instance();
    inst.cap = vec![0; inst.n_candidates()];
    let mode = UncertaintyMode::Expectation;
    let (prob, solver, cfg) = exact_setup(&inst, &scen, mode);
    let out = epsilon_constraint(&prob, &solver, &cfg).unwrap();
    assert_eq!(out.front.len(), 1);
    let p = out.front.points().next().unwrap();
    assert_eq!(p.f1, 0);
    let total_mean: f64 = (0..scen.n_scenarios)
        .map(|s| scen.total_demand(s) as f64)
        .sum::<f64>()
        / scen.n_scenarios as f64;
    assert!((p.f2 - total_mean).abs() <= 1e-6);
}

#[test]
fn cvar_specializations_on_toy() {
    let (inst, scen) = oracle::toy_instance();
    let n = scen.n_scenarios as f64;

    let (prob_m1, solver, cfg) = exact_setup(&inst, &scen, UncertaintyMode::Expectation);
    let m1 = epsilon_constraint(&prob_m1, &solver, &cfg).unwrap();
    let (prob_a0, _, _) = exact_setup(&inst, &scen, UncertaintyMode::CVaR { alpha: 0.0 });
    let a0 = epsilon_constraint(&prob_a0, &solver, &cfg).unwrap();
    assert!(m1.front.same_points(&a0.front));

    let (prob_m2, _, _) = exact_setup(&inst, &scen, UncertaintyMode::WorstCase);
    let m2 = epsilon_constraint(&prob_m2, &solver, &cfg).unwrap();
    let alpha_max = 1.0 - 1.0 / n;
    let (prob_a9, _, _) = exact_setup(&inst, &scen, UncertaintyMode::CVaR { alpha: alpha_max });
    let a9 = epsilon_constraint(&prob_a9, &solver, &cfg).unwrap();
    assert!(m2.front.same_points(&a9.front));
}

#[test]
fn single_scenario_modes_coincide() {
    let inst = oracle::random_instance(77);
    let scen = ScenarioSet {
        n_scenarios: 1,
        demand: vec![(0..inst.n).map(|i| inst.pop[i] / 2).collect()],
    };
    let mut fronts = Vec::new();
    for mode in [
        UncertaintyMode::Expectation,
        UncertaintyMode::WorstCase,
        UncertaintyMode::CVaR { alpha: 0.0 },
    ] {
        let (prob, solver, cfg) = exact_setup(&inst, &scen, mode);
        fronts.push(epsilon_constraint(&prob, &solver, &cfg).unwrap().front);
    }
    assert!(fronts[0].same_points(&fronts[1]));
    assert!(fronts[0].same_points(&fronts[2]));
}

#[test]
fn toy_matheuristic_equals_exact_front() {
    let (inst, scen) = oracle::toy_instance();
    let mode = UncertaintyMode::CVaR { alpha: 0.5 };
    let expected = oracle::oracle_front(&inst, &scen, mode);
    let (prob, solver, _) = exact_setup(&inst, &scen, mode);
    let out = mat_frontier(&prob, &solver, &MatConfig::default()).unwrap();
    assert!(out.complete);
    // fixing never cuts the optimum at this scale
    assert_front_matches(&out.front, &expected, "toy mat");
}

#[test]
fn matheuristic_hypervolume_never_exceeds_exact() {
    let (inst, scen) = oracle::toy_instance();
    let mode = UncertaintyMode::Expectation;
    let (prob, solver, cfg) = exact_setup(&inst, &scen, mode);
    let exact = epsilon_constraint(&prob, &solver, &cfg).unwrap();
    let mat = mat_frontier(&prob, &solver, &MatConfig::default()).unwrap();
    let reference = exact.front.nadir().unwrap();
    let hv_exact = podloc::metrics::hypervolume(&exact.front, reference).unwrap();
    let hv_mat = podloc::metrics::hypervolume(&mat.front, reference).unwrap();
    assert!(hv_mat <= hv_exact + 1e-9);
}

#[test]
fn endpoints_time_out_cleanly() {
    let (inst, scen) = oracle::toy_instance();
    let mode = UncertaintyMode::Expectation;
    let (prob, solver, mut cfg) = exact_setup(&inst, &scen, mode);
    cfg.total_time_limit = 1e-9;
    assert!(matches!(
        endpoints(&prob, &solver, &cfg),
        Err(podloc::Error::EndpointsTimeout)
    ));
}
