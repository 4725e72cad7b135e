//! Solver-agnostic deterministic-equivalent MILPs for the three risk
//! attitudes, plus direct evaluation of second-stage recourse and CVaR.
//!
//! The bi-objective model has a first-stage opening-cost objective and an
//! uncertainty objective over per-scenario uncovered demand. Scenario blocks
//! share the first-stage open/close variables; assignment variables are only
//! created for node/candidate pairs within the coverage radius.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::instance::{Instance, ScenarioSet};
use crate::solver;

/// Risk attitude applied to the per-scenario uncovered demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UncertaintyMode {
    /// Risk-neutral: minimize the expected uncovered demand.
    Expectation,
    /// Adaptive robust: minimize the worst scenario.
    WorstCase,
    /// Risk-averse: minimize the conditional value-at-risk at level `alpha`.
    CVaR { alpha: f64 },
}

impl UncertaintyMode {
    pub fn validate(&self) -> Result<()> {
        if let UncertaintyMode::CVaR { alpha } = self {
            if !(0.0..1.0).contains(alpha) || !alpha.is_finite() {
                return Err(Error::BadAlpha(*alpha));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

/// Sparse linear expression plus constant offset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn value(&self, assignment: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|&(v, c)| c * assignment[v])
            .sum::<f64>()
            + self.constant
    }

    /// True when the expression takes integer values on any integral
    /// assignment: integer coefficients and constant over integer variables.
    pub fn is_integer_on(&self, vars: &[Variable]) -> bool {
        self.constant.fract() == 0.0
            && self.terms.iter().all(|&(v, c)| {
                c.fract() == 0.0 && vars[v].kind != VarKind::Continuous
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Semantic variable index: one entry per model variable family.
#[derive(Debug, Clone, Default)]
pub struct VarMap {
    /// Candidate position -> open/close variable.
    pub y: Vec<usize>,
    /// (node, candidate position, scenario) -> assignment variable; pairs
    /// outside the coverage radius have no entry.
    pub x: HashMap<(usize, usize, usize), usize>,
    /// `u[s][j]` -> delivered-quantity variable.
    pub u: Vec<Vec<usize>>,
    /// CVaR tail-excess variables, one per scenario.
    pub w: Vec<usize>,
    /// CVaR value-at-risk variable.
    pub eta: Option<usize>,
    /// Worst-case epigraph variable.
    pub z: Option<usize>,
}

/// A mixed-integer model with a primary (uncertainty) objective and the
/// opening-cost row kept alongside for lexicographic use.
#[derive(Debug, Clone)]
pub struct MipModel {
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Uncertainty objective f2 (sense: minimize).
    pub objective: LinExpr,
    /// Opening-cost objective f1 (sense: minimize).
    pub cost: LinExpr,
    pub varmap: VarMap,
    pub mode: UncertaintyMode,
    /// Total demand per scenario, cached for recourse reconstruction.
    pub scenario_totals: Vec<i64>,
}

impl MipModel {
    pub fn add_var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64) -> usize {
        let id = self.vars.len();
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        id
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { terms, sense, rhs });
    }

    /// Fresh model holding only the first-stage open/close variables.
    pub fn with_first_stage(inst: &Instance, mode: UncertaintyMode) -> MipModel {
        let mut model = MipModel {
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: LinExpr::default(),
            cost: LinExpr::default(),
            varmap: VarMap::default(),
            mode,
            scenario_totals: Vec::new(),
        };
        for j in 0..inst.n_candidates() {
            let v = model.add_var(format!("y_{}", j), VarKind::Binary, 0.0, 1.0);
            model.varmap.y.push(v);
        }
        model.cost = LinExpr {
            terms: (0..inst.n_candidates())
                .map(|j| (model.varmap.y[j], inst.gamma[j] as f64))
                .collect(),
            constant: 0.0,
        };
        model
    }

    /// Snapped first-stage decision from a solver assignment.
    pub fn y_from_assignment(&self, assignment: &[f64]) -> Vec<bool> {
        self.varmap.y.iter().map(|&v| assignment[v] > 0.5).collect()
    }
}

/// Appends the second-stage block for scenario `s`: coverage rows, capacity
/// and linking rows for the delivered quantities, and open-POD gating for
/// the assignment variables. Assignment variables outside the coverage
/// radius are not created. Returns the appended constraint range.
pub fn add_second_stage(
    model: &mut MipModel,
    inst: &Instance,
    scen: &ScenarioSet,
    s: usize,
) -> std::ops::Range<usize> {
    let first_row = model.constraints.len();
    let nj = inst.n_candidates();
    let q = &scen.demand[s];

    // declare x for in-radius pairs, then u per candidate
    for i in 0..inst.n {
        for j in 0..nj {
            if inst.covers(i, j) {
                let v = model.add_var(
                    format!("x_{}_{}_{}", i, j, s),
                    VarKind::Binary,
                    0.0,
                    1.0,
                );
                model.varmap.x.insert((i, j, s), v);
            }
        }
    }
    let mut u_vars = Vec::with_capacity(nj);
    for j in 0..nj {
        let v = model.add_var(
            format!("u_{}_{}", j, s),
            VarKind::Integer,
            0.0,
            inst.cap[j] as f64,
        );
        u_vars.push(v);
    }
    while model.varmap.u.len() <= s {
        model.varmap.u.push(Vec::new());
    }
    model.varmap.u[s] = u_vars.clone();

    // coverage: each node assigned at most once
    for i in 0..inst.n {
        let terms: Vec<(usize, f64)> = (0..nj)
            .filter_map(|j| model.varmap.x.get(&(i, j, s)).map(|&v| (v, 1.0)))
            .collect();
        if !terms.is_empty() {
            model.add_constraint(terms, Sense::Le, 1.0);
        }
    }
    // capacity gating: u_j <= c_j * y_j
    for j in 0..nj {
        model.add_constraint(
            vec![(u_vars[j], 1.0), (model.varmap.y[j], -(inst.cap[j] as f64))],
            Sense::Le,
            0.0,
        );
    }
    // linking: u_j <= sum of assigned demand
    for j in 0..nj {
        let mut terms = vec![(u_vars[j], 1.0)];
        for i in 0..inst.n {
            if q[i] != 0 {
                if let Some(&v) = model.varmap.x.get(&(i, j, s)) {
                    terms.push((v, -(q[i] as f64)));
                }
            }
        }
        model.add_constraint(terms, Sense::Le, 0.0);
    }
    // gating: x_ij <= y_j
    for i in 0..inst.n {
        for j in 0..nj {
            if let Some(&v) = model.varmap.x.get(&(i, j, s)) {
                model.add_constraint(
                    vec![(v, 1.0), (model.varmap.y[j], -1.0)],
                    Sense::Le,
                    0.0,
                );
            }
        }
    }
    model.scenario_totals.push(scen.total_demand(s));
    first_row..model.constraints.len()
}

/// Builds the deterministic equivalent for the given risk attitude: all
/// scenario blocks plus the mode-specific uncertainty objective.
pub fn build_model(
    inst: &Instance,
    scen: &ScenarioSet,
    mode: UncertaintyMode,
) -> Result<MipModel> {
    mode.validate()?;
    let n = scen.n_scenarios as f64;
    let mut model = MipModel::with_first_stage(inst, mode);
    for s in 0..scen.n_scenarios {
        add_second_stage(&mut model, inst, scen, s);
    }
    match mode {
        UncertaintyMode::Expectation => {
            let mut terms = Vec::new();
            for s in 0..scen.n_scenarios {
                for &u in &model.varmap.u[s] {
                    terms.push((u, -1.0 / n));
                }
            }
            let constant = model.scenario_totals.iter().sum::<i64>() as f64 / n;
            model.objective = LinExpr { terms, constant };
        }
        UncertaintyMode::WorstCase => {
            let z = model.add_var("z".into(), VarKind::Continuous, 0.0, f64::INFINITY);
            model.varmap.z = Some(z);
            for s in 0..scen.n_scenarios {
                let mut terms = vec![(z, 1.0)];
                for &u in &model.varmap.u[s] {
                    terms.push((u, 1.0));
                }
                model.add_constraint(terms, Sense::Ge, model.scenario_totals[s] as f64);
            }
            model.objective = LinExpr {
                terms: vec![(z, 1.0)],
                constant: 0.0,
            };
        }
        UncertaintyMode::CVaR { alpha } => {
            let eta = model.add_var(
                "eta".into(),
                VarKind::Continuous,
                f64::NEG_INFINITY,
                f64::INFINITY,
            );
            model.varmap.eta = Some(eta);
            let mut obj = vec![(eta, 1.0)];
            for s in 0..scen.n_scenarios {
                let w = model.add_var(format!("w_{}", s), VarKind::Continuous, 0.0, f64::INFINITY);
                model.varmap.w.push(w);
                // w_s >= Q_s - eta, with Q_s = total_s - sum_j u_j
                let mut terms = vec![(w, 1.0), (eta, 1.0)];
                for &u in &model.varmap.u[s] {
                    terms.push((u, 1.0));
                }
                model.add_constraint(terms, Sense::Ge, model.scenario_totals[s] as f64);
                obj.push((w, 1.0 / ((1.0 - alpha) * n)));
            }
            model.objective = LinExpr {
                terms: obj,
                constant: 0.0,
            };
        }
    }
    Ok(model)
}

/// Conditional value-at-risk of an equiprobable sample, by the closed-form
/// order-statistic minimizer of `eta + E[(v - eta)+] / (1 - alpha)`.
pub fn cvar(values: &[f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::BadScenarioCount);
    }
    if !(0.0..1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::BadAlpha(alpha));
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = n as f64 * (1.0 - alpha);
    // smallest order statistic with at most m strictly-larger values
    let mut k = 0;
    while n - sorted.partition_point(|&v| v <= sorted[k]) > m as usize {
        k += 1;
    }
    let eta = sorted[k];
    let excess: f64 = sorted[k + 1..]
        .iter()
        .filter(|&&v| v > eta)
        .map(|&v| v - eta)
        .sum();
    Ok(eta + excess / m)
}

/// Risk aggregation of integer per-scenario recourse values under `mode`.
pub fn aggregate_recourse(mode: UncertaintyMode, q: &[i64]) -> Result<f64> {
    match mode {
        UncertaintyMode::Expectation => {
            Ok(q.iter().sum::<i64>() as f64 / q.len() as f64)
        }
        UncertaintyMode::WorstCase => Ok(*q.iter().max().ok_or(Error::BadScenarioCount)? as f64),
        UncertaintyMode::CVaR { alpha } => {
            let vals: Vec<f64> = q.iter().map(|&v| v as f64).collect();
            cvar(&vals, alpha)
        }
    }
}

/// Exact optimal uncovered demand for a fixed first stage under scenario
/// `s`, solved as a single-scenario assignment MIP over the open PODs.
pub fn evaluate_recourse(
    inst: &Instance,
    scen: &ScenarioSet,
    s: usize,
    y: &[bool],
) -> Result<i64> {
    let total = scen.total_demand(s);
    let open: Vec<usize> = (0..inst.n_candidates()).filter(|&j| y[j]).collect();
    if open.is_empty() {
        return Ok(total);
    }
    let q = &scen.demand[s];

    let mut model = MipModel {
        vars: Vec::new(),
        constraints: Vec::new(),
        objective: LinExpr::default(),
        cost: LinExpr::default(),
        varmap: VarMap::default(),
        mode: UncertaintyMode::Expectation,
        scenario_totals: vec![total],
    };
    // x variables per positive-demand covered node, u per open POD
    let mut x: HashMap<(usize, usize), usize> = HashMap::new();
    for i in 0..inst.n {
        if q[i] == 0 {
            continue;
        }
        for &j in &open {
            if inst.covers(i, j) {
                let v = model.add_var(format!("x_{}_{}", i, j), VarKind::Binary, 0.0, 1.0);
                x.insert((i, j), v);
            }
        }
    }
    let mut u = Vec::new();
    for &j in &open {
        u.push(model.add_var(format!("u_{}", j), VarKind::Integer, 0.0, inst.cap[j] as f64));
    }
    for i in 0..inst.n {
        let terms: Vec<(usize, f64)> = open
            .iter()
            .filter_map(|&j| x.get(&(i, j)).map(|&v| (v, 1.0)))
            .collect();
        if terms.len() > 1 {
            model.add_constraint(terms, Sense::Le, 1.0);
        }
    }
    for (k, &j) in open.iter().enumerate() {
        let mut terms = vec![(u[k], 1.0)];
        for i in 0..inst.n {
            if let Some(&v) = x.get(&(i, j)) {
                terms.push((v, -(q[i] as f64)));
            }
        }
        model.add_constraint(terms, Sense::Le, 0.0);
    }
    // maximize covered demand
    model.objective = LinExpr {
        terms: u.iter().map(|&v| (v, -1.0)).collect(),
        constant: total as f64,
    };

    let backend = solver::Solver::builtin();
    let req = solver::SolveRequest::new(&model);
    let res = backend.solve(&req)?;
    debug_assert_eq!(res.status, solver::SolveStatus::Optimal);
    Ok(res.objective.round() as i64)
}

/// Per-scenario uncovered demand reconstructed from a solved assignment:
/// snap the binaries, then set each delivered quantity to its largest
/// feasible value given the snapped assignment.
pub fn recourse_from_assignment(
    inst: &Instance,
    scen: &ScenarioSet,
    varmap: &VarMap,
    assignment: &[f64],
) -> Vec<i64> {
    let nj = inst.n_candidates();
    let y: Vec<bool> = varmap.y.iter().map(|&v| assignment[v] > 0.5).collect();
    (0..scen.n_scenarios)
        .map(|s| {
            let q = &scen.demand[s];
            let mut covered = 0i64;
            for j in 0..nj {
                if !y[j] {
                    continue;
                }
                let assigned: i64 = (0..inst.n)
                    .filter_map(|i| {
                        varmap.x.get(&(i, j, s)).and_then(|&v| {
                            (assignment[v] > 0.5).then_some(q[i])
                        })
                    })
                    .sum();
                covered += assigned.min(inst.cap[j]);
            }
            scen.total_demand(s) - covered
        })
        .collect()
}
