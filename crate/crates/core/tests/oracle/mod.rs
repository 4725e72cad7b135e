//! Brute-force reference implementations for the oracle-based tests.
//!
//! Everything here enumerates: first stages over all 2^|J| subsets,
//! per-scenario assignments over all node-to-open-POD choices (with sound
//! bound pruning that cannot change the optimum), and CVaR by direct
//! minimization over the candidate order statistics. None of it calls the
//! library's solver, frontier or metrics paths.

use podloc::{Instance, ScenarioSet, UncertaintyMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Best coverable demand for fixed open PODs under one scenario, by
/// exhaustive assignment search.
pub fn oracle_recourse(inst: &Instance, q: &[i64], y: &[bool]) -> i64 {
    let open: Vec<usize> = (0..inst.n_candidates()).filter(|&j| y[j]).collect();
    let total: i64 = q.iter().sum();
    if open.is_empty() {
        return total;
    }
    // nodes that could contribute, with their candidate open PODs
    let mut nodes: Vec<(i64, Vec<usize>)> = Vec::new();
    for i in 0..inst.n {
        if q[i] == 0 {
            continue;
        }
        let pods: Vec<usize> = open
            .iter()
            .copied()
            .filter(|&j| inst.dist[i][j] <= inst.d_max)
            .collect();
        if !pods.is_empty() {
            nodes.push((q[i], pods));
        }
    }
    let suffix: Vec<i64> = {
        let mut s = vec![0i64; nodes.len() + 1];
        for i in (0..nodes.len()).rev() {
            s[i] = s[i + 1] + nodes[i].0;
        }
        s
    };
    let caps: Vec<i64> = open.iter().map(|&j| inst.cap[j]).collect();
    let mut assigned = vec![0i64; open.len()];
    let mut best = 0i64;

    fn covered(assigned: &[i64], caps: &[i64]) -> i64 {
        assigned
            .iter()
            .zip(caps)
            .map(|(&a, &c)| a.min(c))
            .sum()
    }

    fn dfs(
        idx: usize,
        nodes: &[(i64, Vec<usize>)],
        open: &[usize],
        caps: &[i64],
        suffix: &[i64],
        assigned: &mut [i64],
        best: &mut i64,
    ) {
        let now = covered(assigned, caps);
        if now + suffix[idx] <= *best {
            return;
        }
        if idx == nodes.len() {
            *best = (*best).max(now);
            return;
        }
        let (qi, pods) = &nodes[idx];
        for &j in pods {
            let k = open.iter().position(|&o| o == j).unwrap();
            assigned[k] += qi;
            dfs(idx + 1, nodes, open, caps, suffix, assigned, best);
            assigned[k] -= qi;
        }
        // leave the node unassigned
        dfs(idx + 1, nodes, open, caps, suffix, assigned, best);
    }
    dfs(0, &nodes, &open, &caps, &suffix, &mut assigned, &mut best);
    total - best
}

/// CVaR by direct evaluation of the piecewise objective at every candidate
/// threshold.
pub fn oracle_cvar(values: &[f64], alpha: f64) -> f64 {
    let n = values.len() as f64;
    values
        .iter()
        .map(|&eta| {
            eta + values
                .iter()
                .map(|&v| (v - eta).max(0.0))
                .sum::<f64>()
                / ((1.0 - alpha) * n)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn oracle_aggregate(mode: UncertaintyMode, q: &[i64]) -> f64 {
    let vals: Vec<f64> = q.iter().map(|&v| v as f64).collect();
    match mode {
        UncertaintyMode::Expectation => vals.iter().sum::<f64>() / vals.len() as f64,
        UncertaintyMode::WorstCase => vals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
        UncertaintyMode::CVaR { alpha } => oracle_cvar(&vals, alpha),
    }
}

/// All 2^|J| objective vectors.
pub fn enumerate_y(inst: &Instance, scen: &ScenarioSet, mode: UncertaintyMode) -> Vec<(i64, f64, Vec<bool>)> {
    let nj = inst.n_candidates();
    (0u32..(1 << nj))
        .map(|mask| {
            let y: Vec<bool> = (0..nj).map(|j| mask & (1 << j) != 0).collect();
            let f1: i64 = (0..nj).filter(|&j| y[j]).map(|j| inst.gamma[j]).sum();
            let q: Vec<i64> = (0..scen.n_scenarios)
                .map(|s| oracle_recourse(inst, &scen.demand[s], &y))
                .collect();
            (f1, oracle_aggregate(mode, &q), y)
        })
        .collect()
}

/// Non-dominated subset of the enumerated objective vectors, sorted by f1,
/// one representative per objective point (first found wins).
pub fn oracle_front(
    inst: &Instance,
    scen: &ScenarioSet,
    mode: UncertaintyMode,
) -> Vec<(i64, f64, Vec<bool>)> {
    let all = enumerate_y(inst, scen, mode);
    let mut nd: Vec<(i64, f64, Vec<bool>)> = Vec::new();
    'outer: for (f1, f2, y) in &all {
        for (g1, g2, _) in &all {
            let dominates =
                g1 <= f1 && *g2 <= *f2 && (g1 < f1 || *g2 < *f2);
            if dominates {
                continue 'outer;
            }
        }
        if nd
            .iter()
            .any(|(e1, e2, _)| e1 == f1 && (e2 - f2).abs() <= 1e-6)
        {
            continue;
        }
        nd.push((*f1, *f2, y.clone()));
    }
    nd.sort_by(|a, b| a.0.cmp(&b.0));
    nd
}

/// Wait-and-see value per scenario under a cost budget, by enumeration.
pub fn oracle_wait_and_see(inst: &Instance, q: &[i64], budget: i64) -> i64 {
    let nj = inst.n_candidates();
    let mut best = i64::MAX;
    for mask in 0u32..(1 << nj) {
        let y: Vec<bool> = (0..nj).map(|j| mask & (1 << j) != 0).collect();
        let cost: i64 = (0..nj).filter(|&j| y[j]).map(|j| inst.gamma[j]).sum();
        if cost > budget {
            continue;
        }
        best = best.min(oracle_recourse(inst, q, &y));
    }
    best
}

/// Seeded random instance in the oracle-suite ranges: 4-8 nodes, 2-5
/// candidates, opening costs in {1..5} thousand, distances against a 6 km
/// radius.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = rng.random_range(4..=8);
    let nj = rng.random_range(2..=5.min(n));
    let mut picks: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let k = rng.random_range(0..=i);
        picks.swap(i, k);
    }
    let mut candidates = picks[..nj].to_vec();
    candidates.sort_unstable();

    let pop: Vec<i64> = (0..n).map(|_| rng.random_range(20..=200)).collect();
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..nj).map(|_| rng.random_range(0.0..12.0)).collect())
        .collect();
    let gamma: Vec<i64> = (0..nj).map(|_| 1000 * rng.random_range(1..=5)).collect();
    let cap: Vec<i64> = (0..nj).map(|_| rng.random_range(0..=300)).collect();
    let inst = Instance {
        n,
        candidates,
        d_max: 6.0,
        gamma,
        cap,
        pop,
        dist,
    };
    inst.validate().expect("random instance must be valid");
    inst
}

/// Random equiprobable demand for the instance, 1-4 scenarios.
pub fn random_scenarios(inst: &Instance, seed: u64) -> ScenarioSet {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let n_scenarios = rng.random_range(1..=4);
    let demand = (0..n_scenarios)
        .map(|_| {
            (0..inst.n)
                .map(|i| rng.random_range(0..=inst.pop[i]))
                .collect()
        })
        .collect();
    ScenarioSet {
        n_scenarios,
        demand,
    }
}

/// Fixed small instance used across the frontier tests: 6 nodes, 4
/// candidates, 3 scenarios, mixed coverage and a capacity bottleneck.
pub fn toy_instance() -> (Instance, ScenarioSet) {
    let inst = Instance {
        n: 6,
        candidates: vec![0, 2, 3, 5],
        d_max: 6.0,
        gamma: vec![2000, 1000, 3000, 2000],
        cap: vec![150, 90, 260, 120],
        pop: vec![80, 60, 120, 90, 50, 100],
        dist: vec![
            vec![0.0, 4.0, 9.0, 7.5],
            vec![3.0, 5.5, 6.0, 8.0],
            vec![4.0, 0.0, 5.0, 9.0],
            vec![9.0, 5.0, 0.0, 4.5],
            vec![7.0, 8.0, 3.5, 5.0],
            vec![8.0, 9.5, 4.5, 0.0],
        ],
    };
    inst.validate().unwrap();
    let scen = ScenarioSet {
        n_scenarios: 3,
        demand: vec![
            vec![57, 91, 26, 61, 8, 100],
            vec![80, 109, 138, 17, 46, 93],
            vec![10, 51, 2, 43, 84, 35],
        ],
    };
    scen.validate(inst.n).unwrap();
    (inst, scen)
}
