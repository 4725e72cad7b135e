//! Instance data, synthetic instance construction, scenario sampling and
//! file I/O.
//!
//! Scenario demand follows a two-level uniform model: one baseline factor per
//! scenario shared by all nodes, plus an independent correction per node.
//! The RNG stream order is part of the file contract: per scenario, the
//! baseline draw comes first, then one draw per node in index order, all from
//! a seeded ChaCha12 stream, so scenario files are reproducible across
//! platforms.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A problem instance: demand nodes, candidate PODs, distances and the
/// first-stage cost/capacity data.
///
/// Candidates are a subset of nodes (an unaffected candidate would be a
/// virtual node with zero population). `dist` is `n x candidates.len()`,
/// in km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub n: usize,
    pub candidates: Vec<usize>,
    pub d_max: f64,
    pub gamma: Vec<i64>,
    pub cap: Vec<i64>,
    pub pop: Vec<i64>,
    pub dist: Vec<Vec<f64>>,
}

impl Instance {
    /// Number of candidate PODs.
    pub fn n_candidates(&self) -> usize {
        self.candidates.len()
    }

    /// Coverage indicator: node `i` can be served by candidate `j` iff their
    /// distance is within the radius.
    pub fn covers(&self, i: usize, j: usize) -> bool {
        self.dist[i][j] <= self.d_max
    }

    /// Full coverage mask, `mask[i][j] = covers(i, j)`.
    pub fn coverage_mask(&self) -> Vec<Vec<bool>> {
        (0..self.n)
            .map(|i| (0..self.n_candidates()).map(|j| self.covers(i, j)).collect())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let nj = self.candidates.len();
        if nj > self.n {
            return Err(Error::DimensionMismatch(format!(
                "{} candidates for {} nodes",
                nj, self.n
            )));
        }
        let mut seen = vec![false; self.n];
        for &c in &self.candidates {
            if c >= self.n {
                return Err(Error::DimensionMismatch(format!(
                    "candidate node {} out of range (n = {})",
                    c, self.n
                )));
            }
            if seen[c] {
                return Err(Error::DimensionMismatch(format!("duplicate candidate {}", c)));
            }
            seen[c] = true;
        }
        if self.pop.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "pop has {} entries, expected {}",
                self.pop.len(),
                self.n
            )));
        }
        if self.gamma.len() != nj || self.cap.len() != nj {
            return Err(Error::DimensionMismatch(format!(
                "gamma/cap have {}/{} entries, expected {}",
                self.gamma.len(),
                self.cap.len(),
                nj
            )));
        }
        if self.dist.len() != self.n || self.dist.iter().any(|row| row.len() != nj) {
            return Err(Error::DimensionMismatch(format!(
                "dist must be {} x {}",
                self.n, nj
            )));
        }
        if self.dist.iter().flatten().any(|&d| !(d >= 0.0)) {
            return Err(Error::DimensionMismatch("negative distance".into()));
        }
        if self.gamma.iter().any(|&g| g <= 0) {
            return Err(Error::DimensionMismatch("opening costs must be positive".into()));
        }
        if self.cap.iter().any(|&c| c < 0) || self.pop.iter().any(|&p| p < 0) {
            return Err(Error::DimensionMismatch("negative capacity or population".into()));
        }
        Ok(())
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json_file(path, self)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Instance> {
        let inst: Instance = read_json_file(path)?;
        inst.validate()?;
        Ok(inst)
    }
}

/// Equiprobable demand realizations: `demand[s][i]` is the demand of node
/// `i` under scenario `s`. Each scenario has probability `1/n_scenarios`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub n_scenarios: usize,
    pub demand: Vec<Vec<i64>>,
}

impl ScenarioSet {
    pub fn total_demand(&self, s: usize) -> i64 {
        self.demand[s].iter().sum()
    }

    /// Componentwise mean demand rounded to the nearest integer, as a
    /// single-scenario set (the deterministic expected-value problem).
    pub fn mean_scenario(&self) -> ScenarioSet {
        let n = self.demand[0].len();
        let row = (0..n)
            .map(|i| {
                let sum: i64 = self.demand.iter().map(|r| r[i]).sum();
                (sum as f64 / self.n_scenarios as f64).round() as i64
            })
            .collect();
        ScenarioSet {
            n_scenarios: 1,
            demand: vec![row],
        }
    }

    /// Single scenario `s` as its own set (the wait-and-see subproblem data).
    pub fn single(&self, s: usize) -> ScenarioSet {
        ScenarioSet {
            n_scenarios: 1,
            demand: vec![self.demand[s].clone()],
        }
    }

    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        if self.demand.len() != self.n_scenarios {
            return Err(Error::DimensionMismatch(format!(
                "{} demand rows for {} scenarios",
                self.demand.len(),
                self.n_scenarios
            )));
        }
        if self.demand.iter().any(|row| row.len() != n_nodes) {
            return Err(Error::DimensionMismatch(format!(
                "scenario rows must have {} entries",
                n_nodes
            )));
        }
        if self.demand.iter().flatten().any(|&q| q < 0) {
            return Err(Error::DimensionMismatch("negative demand".into()));
        }
        Ok(())
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json_file(path, self)
    }

    /// Reads a scenario file; node count consistency is checked against the
    /// instance at use sites via [`ScenarioSet::validate`].
    pub fn read_json(path: impl AsRef<Path>) -> Result<ScenarioSet> {
        let set: ScenarioSet = read_json_file(path)?;
        if set.n_scenarios == 0 || set.demand.is_empty() {
            return Err(Error::BadScenarioCount);
        }
        let width = set.demand[0].len();
        set.validate(width)?;
        Ok(set)
    }
}

/// Parameters of the demand uncertainty factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub xi_bar: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            xi_bar: 1.0,
            lambda1: 0.5,
            lambda2: 0.5,
            seed: 0,
        }
    }
}

/// Samples `n_scenarios` demand realizations.
///
/// Per scenario: a shared baseline `xi_base = xi_bar - l1 + 2*l1*Z`, then per
/// node an independent factor `xi_i = xi_base - l2 + 2*l2*Z_i`; the demand is
/// `round(xi_i * pop_i)` clamped at zero.
pub fn generate_scenarios(inst: &Instance, n_scenarios: usize, p: &GenParams) -> Result<ScenarioSet> {
    if n_scenarios < 1 {
        return Err(Error::BadScenarioCount);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(p.seed);
    let mut demand = Vec::with_capacity(n_scenarios);
    for _ in 0..n_scenarios {
        let z: f64 = rng.random();
        let xi_base = p.xi_bar - p.lambda1 + 2.0 * p.lambda1 * z;
        let row = (0..inst.n)
            .map(|i| {
                let zi: f64 = rng.random();
                let xi = xi_base - p.lambda2 + 2.0 * p.lambda2 * zi;
                ((xi * inst.pop[i] as f64).round() as i64).max(0)
            })
            .collect();
        demand.push(row);
    }
    Ok(ScenarioSet {
        n_scenarios,
        demand,
    })
}

/// Side of the square placement region, in km. Grows with the node count so
/// that the in-radius candidate density stays roughly constant.
fn region_side(n: usize) -> f64 {
    4.0 * (n as f64).sqrt()
}

/// Builds a synthetic instance: `n` nodes placed uniformly in a square,
/// Euclidean distances, populations uniform in `20..=500`, opening cost 5000
/// for every candidate, capacity three times the candidate's population and
/// a 6 km coverage radius.
pub fn synth_instance(n: usize, candidate_fraction: f64, seed: u64) -> Result<Instance> {
    if n < 2 {
        return Err(Error::DimensionMismatch(format!(
            "need at least 2 nodes, got {}",
            n
        )));
    }
    if !(candidate_fraction > 0.0 && candidate_fraction <= 1.0) {
        return Err(Error::DimensionMismatch(format!(
            "candidate fraction {} outside (0, 1]",
            candidate_fraction
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let side = region_side(n);
    let xy: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let x: f64 = rng.random::<f64>() * side;
            let y: f64 = rng.random::<f64>() * side;
            (x, y)
        })
        .collect();
    let pop: Vec<i64> = (0..n).map(|_| rng.random_range(20..=500)).collect();

    let n_cand = ((n as f64 * candidate_fraction).round() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    // Fisher-Yates with the same stream, so the candidate subset is seeded too.
    for i in (1..n).rev() {
        let k = rng.random_range(0..=i);
        order.swap(i, k);
    }
    let mut candidates: Vec<usize> = order[..n_cand].to_vec();
    candidates.sort_unstable();

    let dist = xy
        .iter()
        .map(|&(xi, yi)| {
            candidates
                .iter()
                .map(|&c| {
                    let (xj, yj) = xy[c];
                    ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt()
                })
                .collect()
        })
        .collect();
    let gamma = vec![5000; n_cand];
    let cap = candidates.iter().map(|&c| 3 * pop[c]).collect();

    let inst = Instance {
        n,
        candidates,
        d_max: 6.0,
        gamma,
        cap,
        pop,
        dist,
    };
    inst.validate()?;
    Ok(inst)
}

fn write_json_file<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::parse(0, e.to_string()))?;
    text.push('\n');
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn read_json_file<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(e.line(), e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_instance() -> Instance {
        Instance {
            n: 2,
            candidates: vec![0],
            d_max: 6.0,
            gamma: vec![5000],
            cap: vec![360],
            pop: vec![120, 40],
            dist: vec![vec![0.0], vec![5.9]],
        }
    }

    #[test]
    fn coverage_boundary_inclusive() {
        let mut inst = toy_instance();
        inst.dist = vec![vec![5.9], vec![6.0]];
        let mask = inst.coverage_mask();
        assert!(mask[0][0]);
        assert!(mask[1][0]);
        inst.dist[1][0] = 7.0;
        assert!(!inst.coverage_mask()[1][0]);
    }

    #[test]
    fn zero_noise_scenarios_equal_population() {
        let inst = toy_instance();
        let p = GenParams {
            lambda1: 0.0,
            lambda2: 0.0,
            ..Default::default()
        };
        let set = generate_scenarios(&inst, 3, &p).unwrap();
        for s in 0..3 {
            assert_eq!(set.demand[s], vec![120, 40]);
        }
    }

    #[test]
    fn scenario_demand_within_interval_bound() {
        let inst = synth_instance(12, 0.5, 9).unwrap();
        let p = GenParams {
            seed: 11,
            ..Default::default()
        };
        let set = generate_scenarios(&inst, 200, &p).unwrap();
        for row in &set.demand {
            for (i, &q) in row.iter().enumerate() {
                assert!(q >= 0);
                assert!(q <= 2 * inst.pop[i], "q = {} pop = {}", q, inst.pop[i]);
            }
        }
    }

    #[test]
    fn scenario_generation_is_deterministic() {
        let inst = toy_instance();
        let p = GenParams {
            seed: 42,
            ..Default::default()
        };
        let a = generate_scenarios(&inst, 5, &p).unwrap();
        let b = generate_scenarios(&inst, 5, &p).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            generate_scenarios(&inst, 0, &p),
            Err(Error::BadScenarioCount)
        ));
    }

    #[test]
    fn baseline_couples_nodes_within_scenario() {
        // With lambda2 = 0 every node shares the baseline factor exactly.
        let mut inst = toy_instance();
        inst.pop = vec![1000, 1000];
        let p = GenParams {
            lambda1: 0.5,
            lambda2: 0.0,
            seed: 3,
            ..Default::default()
        };
        let set = generate_scenarios(&inst, 20, &p).unwrap();
        for row in &set.demand {
            assert_eq!(row[0], row[1]);
        }
    }

    #[test]
    fn synth_instance_structure() {
        let inst = synth_instance(10, 0.5, 7).unwrap();
        assert_eq!(inst.n, 10);
        assert_eq!(inst.n_candidates(), 5);
        assert!(inst.gamma.iter().all(|&g| g == 5000));
        for (k, &c) in inst.candidates.iter().enumerate() {
            assert_eq!(inst.cap[k], 3 * inst.pop[c]);
        }
        assert_eq!(inst.d_max, 6.0);
        assert!(inst.pop.iter().all(|&p| (20..=500).contains(&p)));

        let two = synth_instance(2, 1.0, 1).unwrap();
        assert_eq!(two.n_candidates(), 2);
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let inst = synth_instance(10, 0.5, 7).unwrap();
        let path = dir.path().join("inst.json");
        inst.write_json(&path).unwrap();
        let back = Instance::read_json(&path).unwrap();
        assert_eq!(inst, back);

        let set = generate_scenarios(&inst, 4, &GenParams::default()).unwrap();
        let spath = dir.path().join("scen.json");
        set.write_json(&spath).unwrap();
        assert_eq!(ScenarioSet::read_json(&spath).unwrap(), set);
    }

    #[test]
    fn json_rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");

        // more candidates than nodes
        std::fs::write(
            &path,
            r#"{"n":1,"candidates":[0,0],"d_max":6.0,"gamma":[1,1],"cap":[1,1],"pop":[5],"dist":[[0.0,0.0]]}"#,
        )
        .unwrap();
        assert!(matches!(
            Instance::read_json(&path),
            Err(Error::DimensionMismatch(_))
        ));

        // truncated file
        std::fs::write(&path, "{\"n\": 2,\n\"candidates\": [0],\n").unwrap();
        assert!(matches!(Instance::read_json(&path), Err(Error::Parse { .. })));

        // scenario row of the wrong width
        std::fs::write(&path, r#"{"n_scenarios":2,"demand":[[1,2],[3]]}"#).unwrap();
        assert!(matches!(
            ScenarioSet::read_json(&path),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
