//! Single-objective MILP solving behind a backend contract: a built-in
//! LP-relaxation branch-and-bound with a bundled simplex, and a file bridge
//! that emits MPS and parses an external solver's `name value` dump.
//! Provides lexicographic minimization on top of either backend.

pub mod branch_bound;
pub mod mps;
pub mod simplex;

use std::process::Command;
use std::time::{Duration, Instant};

use branch_bound::{solve_milp, MilpInput, MilpStatus};
use simplex::{solve_lp, LpProblem, LpStatus};

use crate::error::{Error, Result};
use crate::model::{Constraint, LinExpr, MipModel, Sense, VarKind};

/// Tolerance added when locking a continuous objective between the two
/// lexicographic stages. Integer objectives are locked with an equality.
pub const DELTA_LEX: f64 = 1e-6;

/// Extra restriction applied on top of a model for one solve: a linear row
/// (epsilon bound, local-branching neighborhood, lexicographic lock) or a
/// variable fixing.
#[derive(Debug, Clone)]
pub enum ExtraConstraint {
    Row(Constraint),
    Fix { var: usize, value: f64 },
}

impl ExtraConstraint {
    pub fn le(terms: Vec<(usize, f64)>, rhs: f64) -> Self {
        ExtraConstraint::Row(Constraint {
            terms,
            sense: Sense::Le,
            rhs,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    FeasibleTimeLimit,
    Infeasible,
    NoSolutionTimeLimit,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective value including any constant term; +inf when no solution.
    pub objective: f64,
    /// Per-variable values (empty when no solution was found).
    pub assignment: Vec<f64>,
    /// Proven lower bound (equals `objective` at `Optimal`).
    pub best_bound: f64,
}

impl SolveResult {
    pub fn has_solution(&self) -> bool {
        matches!(
            self.status,
            SolveStatus::Optimal | SolveStatus::FeasibleTimeLimit
        )
    }
}

#[derive(Debug, Clone)]
pub struct SolveRequest<'a> {
    pub model: &'a MipModel,
    pub extra_constraints: Vec<ExtraConstraint>,
    pub warm_start: Option<Vec<f64>>,
    /// Wall-clock limit in seconds; must be positive.
    pub time_limit: f64,
    /// Relative optimality gap; 0 solves exactly.
    pub gap_tolerance: f64,
}

impl<'a> SolveRequest<'a> {
    pub fn new(model: &'a MipModel) -> Self {
        Self {
            model,
            extra_constraints: Vec::new(),
            warm_start: None,
            time_limit: 7200.0,
            gap_tolerance: 0.0,
        }
    }

    pub fn with_extras(mut self, extras: Vec<ExtraConstraint>) -> Self {
        self.extra_constraints = extras;
        self
    }

    pub fn with_time_limit(mut self, seconds: f64) -> Self {
        self.time_limit = seconds;
        self
    }
}

#[derive(Debug, Clone)]
pub enum Backend {
    Builtin,
    /// Command template with `{mps}` and `{sol}` placeholders, run through
    /// the shell; the command must write the solution dump to `{sol}`.
    External { command: String },
}

#[derive(Debug, Clone)]
pub struct Solver {
    pub backend: Backend,
}

struct Assembled {
    lp: LpProblem,
    cost: Vec<f64>,
    constant: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    integers: Vec<usize>,
    is_binary: Vec<bool>,
    /// A fixing fell outside the variable's bounds.
    conflict: bool,
}

fn assemble(model: &MipModel, objective: &LinExpr, extras: &[ExtraConstraint]) -> Assembled {
    let ncols = model.vars.len();
    let mut lower: Vec<f64> = model.vars.iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = model.vars.iter().map(|v| v.upper).collect();
    let mut conflict = false;

    let mut rows: Vec<&Constraint> = model.constraints.iter().collect();
    let mut extra_rows: Vec<&Constraint> = Vec::new();
    for e in extras {
        match e {
            ExtraConstraint::Row(c) => extra_rows.push(c),
            ExtraConstraint::Fix { var, value } => {
                if *value < lower[*var] - 1e-9 || *value > upper[*var] + 1e-9 {
                    conflict = true;
                }
                lower[*var] = *value;
                upper[*var] = *value;
            }
        }
    }
    rows.extend(extra_rows);

    let m = rows.len();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
    let mut rhs = Vec::with_capacity(m);
    let mut slack_lower = Vec::with_capacity(m);
    let mut slack_upper = Vec::with_capacity(m);
    for (r, c) in rows.iter().enumerate() {
        for &(v, a) in &c.terms {
            cols[v].push((r, a));
        }
        rhs.push(c.rhs);
        let (sl, su) = match c.sense {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        slack_lower.push(sl);
        slack_upper.push(su);
    }

    let mut cost = vec![0.0; ncols];
    for &(v, c) in &objective.terms {
        cost[v] += c;
    }
    let integers: Vec<usize> = (0..ncols)
        .filter(|&v| model.vars[v].kind != VarKind::Continuous)
        .collect();
    let is_binary: Vec<bool> = model
        .vars
        .iter()
        .map(|v| v.kind == VarKind::Binary)
        .collect();

    Assembled {
        lp: LpProblem {
            ncols,
            cols,
            rhs,
            slack_lower,
            slack_upper,
        },
        cost,
        constant: objective.constant,
        lower,
        upper,
        integers,
        is_binary,
        conflict,
    }
}

impl Solver {
    pub fn builtin() -> Self {
        Self {
            backend: Backend::Builtin,
        }
    }

    pub fn external(command: impl Into<String>) -> Self {
        Self {
            backend: Backend::External {
                command: command.into(),
            },
        }
    }

    /// Minimizes the model's uncertainty objective under the request's extra
    /// constraints.
    pub fn solve(&self, req: &SolveRequest) -> Result<SolveResult> {
        let deadline = deadline_from(req.time_limit);
        self.solve_objective(req, &req.model.objective, deadline)
    }

    fn solve_objective(
        &self,
        req: &SolveRequest,
        objective: &LinExpr,
        deadline: Instant,
    ) -> Result<SolveResult> {
        match &self.backend {
            Backend::Builtin => self.solve_builtin(req, objective, deadline),
            Backend::External { command } => self.solve_external(req, objective, command),
        }
    }

    fn solve_builtin(
        &self,
        req: &SolveRequest,
        objective: &LinExpr,
        deadline: Instant,
    ) -> Result<SolveResult> {
        let a = assemble(req.model, objective, &req.extra_constraints);
        if a.conflict {
            return Ok(SolveResult {
                status: SolveStatus::Infeasible,
                objective: f64::INFINITY,
                assignment: Vec::new(),
                best_bound: f64::INFINITY,
            });
        }
        let out = solve_milp(&MilpInput {
            lp: &a.lp,
            cost: &a.cost,
            lower: &a.lower,
            upper: &a.upper,
            integers: &a.integers,
            is_binary: &a.is_binary,
            deadline: Some(deadline),
            gap_tolerance: req.gap_tolerance,
            warm: req.warm_start.as_deref(),
        })?;
        let status = match out.status {
            MilpStatus::Optimal => SolveStatus::Optimal,
            MilpStatus::FeasibleTimeLimit => SolveStatus::FeasibleTimeLimit,
            MilpStatus::Infeasible => SolveStatus::Infeasible,
            MilpStatus::NoSolutionTimeLimit => SolveStatus::NoSolutionTimeLimit,
        };
        Ok(SolveResult {
            status,
            objective: out.objective + if out.values.is_some() { a.constant } else { 0.0 },
            assignment: out.values.unwrap_or_default(),
            best_bound: out.best_bound + a.constant,
        })
    }

    fn solve_external(
        &self,
        req: &SolveRequest,
        objective: &LinExpr,
        command: &str,
    ) -> Result<SolveResult> {
        if !command.contains("{mps}") || !command.contains("{sol}") {
            return Err(Error::Backend(
                "backend command must contain {mps} and {sol} placeholders".into(),
            ));
        }
        // the bridge model carries the active objective in `objective`
        let mut bridge = req.model.clone();
        bridge.objective = objective.clone();

        let dir = tempfile::tempdir()?;
        let mps_path = dir.path().join("model.mps");
        let sol_path = dir.path().join("model.sol");
        mps::write_mps(&bridge, &req.extra_constraints, &mps_path)?;

        let cmd = command
            .replace("{mps}", &mps_path.display().to_string())
            .replace("{sol}", &sol_path.display().to_string());
        let status = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .status()
            .map_err(|e| Error::Backend(format!("cannot run backend command: {}", e)))?;
        if !status.success() {
            return Err(Error::Backend(format!(
                "backend command failed with {}",
                status
            )));
        }
        let text = std::fs::read_to_string(&sol_path)
            .map_err(|e| Error::Backend(format!("missing solution file: {}", e)))?;
        if text.lines().next().map(str::trim) == Some(mps::INFEASIBLE_MARKER) {
            return Ok(SolveResult {
                status: SolveStatus::Infeasible,
                objective: f64::INFINITY,
                assignment: Vec::new(),
                best_bound: f64::INFINITY,
            });
        }
        let assignment = mps::parse_solution(&bridge, &text)?;
        self.verify_external(req, objective, assignment)
    }

    fn verify_external(
        &self,
        req: &SolveRequest,
        objective: &LinExpr,
        mut assignment: Vec<f64>,
    ) -> Result<SolveResult> {
        let model = req.model;
        let feas = 1e-6;
        for (v, var) in model.vars.iter().enumerate() {
            if var.kind != VarKind::Continuous {
                if (assignment[v] - assignment[v].round()).abs() > feas {
                    return Err(Error::Backend(format!(
                        "external solution: {} = {} is not integral",
                        var.name, assignment[v]
                    )));
                }
                assignment[v] = assignment[v].round();
            }
            if assignment[v] < var.lower - feas || assignment[v] > var.upper + feas {
                return Err(Error::Backend(format!(
                    "external solution: {} = {} violates its bounds",
                    var.name, assignment[v]
                )));
            }
        }
        let check_row = |c: &Constraint| -> Result<()> {
            let act: f64 = c.terms.iter().map(|&(v, a)| a * assignment[v]).sum();
            let ok = match c.sense {
                Sense::Le => act <= c.rhs + feas,
                Sense::Ge => act >= c.rhs - feas,
                Sense::Eq => (act - c.rhs).abs() <= feas,
            };
            if ok {
                Ok(())
            } else {
                Err(Error::Backend("external solution violates a constraint".into()))
            }
        };
        for c in &model.constraints {
            check_row(c)?;
        }
        for e in &req.extra_constraints {
            match e {
                ExtraConstraint::Row(c) => check_row(c)?,
                ExtraConstraint::Fix { var, value } => {
                    if (assignment[*var] - value).abs() > feas {
                        return Err(Error::Backend(
                            "external solution violates a fixing".into(),
                        ));
                    }
                }
            }
        }
        let objective_value = objective.value(&assignment);
        Ok(SolveResult {
            status: SolveStatus::Optimal,
            objective: objective_value,
            assignment,
            best_bound: objective_value,
        })
    }

    /// Two-stage lexicographic minimization: optimize `primary`, lock it
    /// (equality for integer-valued rows, `<= v + DELTA_LEX` otherwise),
    /// then optimize `secondary`. The stage-1 optimum seeds stage 2.
    ///
    /// If stage 1 does not finish, its (degraded) result is returned as-is.
    pub fn lexmin(
        &self,
        primary: &LinExpr,
        secondary: &LinExpr,
        req: &SolveRequest,
    ) -> Result<SolveResult> {
        let deadline = deadline_from(req.time_limit);
        let stage1 = self.solve_objective(req, primary, deadline)?;
        if stage1.status != SolveStatus::Optimal {
            return Ok(stage1);
        }
        let lock = if primary.is_integer_on(&req.model.vars) {
            Constraint {
                terms: primary.terms.clone(),
                sense: Sense::Eq,
                rhs: stage1.objective.round() - primary.constant,
            }
        } else {
            Constraint {
                terms: primary.terms.clone(),
                sense: Sense::Le,
                rhs: stage1.objective + DELTA_LEX - primary.constant,
            }
        };
        let mut req2 = req.clone();
        req2.extra_constraints.push(ExtraConstraint::Row(lock));
        req2.warm_start = Some(stage1.assignment);
        req2.time_limit = (deadline
            .saturating_duration_since(Instant::now())
            .as_secs_f64())
        .max(0.001);
        let stage2 = self.solve_objective(&req2, secondary, deadline)?;
        Ok(stage2)
    }

    /// LP relaxation of `minimize objective` under the extras: integrality
    /// dropped, solved by the bundled simplex. The relaxation value is a
    /// valid lower bound on the MIP optimum.
    pub fn solve_relaxation(
        &self,
        req: &SolveRequest,
        objective: &LinExpr,
    ) -> Result<SolveResult> {
        let a = assemble(req.model, objective, &req.extra_constraints);
        if a.conflict {
            return Ok(SolveResult {
                status: SolveStatus::Infeasible,
                objective: f64::INFINITY,
                assignment: Vec::new(),
                best_bound: f64::INFINITY,
            });
        }
        let deadline = deadline_from(req.time_limit);
        let out = solve_lp(&a.lp, &a.cost, &a.lower, &a.upper, None, Some(deadline))?;
        let status = match out.status {
            LpStatus::Optimal => SolveStatus::Optimal,
            LpStatus::Infeasible => SolveStatus::Infeasible,
            LpStatus::TimeLimit => SolveStatus::NoSolutionTimeLimit,
            LpStatus::Unbounded => {
                return Err(Error::NumericalFailure("unbounded LP relaxation".into()))
            }
        };
        Ok(SolveResult {
            status,
            objective: out.objective + a.constant,
            assignment: out.values[..a.lp.ncols].to_vec(),
            best_bound: out.objective + a.constant,
        })
    }
}

fn deadline_from(time_limit: f64) -> Instant {
    assert!(time_limit > 0.0, "time limit must be positive");
    Instant::now() + Duration::from_secs_f64(time_limit.min(1e9))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MipModel, UncertaintyMode, VarMap, Variable};

    fn forced_cover_model() -> MipModel {
        let vars = vec![
            Variable {
                name: "y_0".into(),
                kind: VarKind::Binary,
                lower: 0.0,
                upper: 1.0,
            },
            Variable {
                name: "y_1".into(),
                kind: VarKind::Binary,
                lower: 0.0,
                upper: 1.0,
            },
        ];
        MipModel {
            vars,
            constraints: vec![Constraint {
                terms: vec![(0, 1.0), (1, 1.0)],
                sense: Sense::Ge,
                rhs: 1.0,
            }],
            objective: LinExpr {
                terms: vec![(0, 1.0), (1, 1.0)],
                constant: 0.0,
            },
            cost: LinExpr {
                terms: vec![(0, 2.0), (1, 3.0)],
                constant: 0.0,
            },
            varmap: VarMap::default(),
            mode: UncertaintyMode::Expectation,
            scenario_totals: Vec::new(),
        }
    }

    #[test]
    fn builtin_forced_cover() {
        let model = forced_cover_model();
        let solver = Solver::builtin();
        let res = solver.solve(&SolveRequest::new(&model)).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn builtin_infeasible_row() {
        let mut model = forced_cover_model();
        model.constraints.push(Constraint {
            terms: vec![],
            sense: Sense::Ge,
            rhs: 1.0,
        });
        let solver = Solver::builtin();
        let res = solver.solve(&SolveRequest::new(&model)).unwrap();
        assert_eq!(res.status, SolveStatus::Infeasible);
    }

    #[test]
    fn lexmin_breaks_ties_on_secondary() {
        // primary: open one POD; secondary prefers the cheaper one (y_0)
        let model = forced_cover_model();
        let solver = Solver::builtin();
        let res = solver
            .lexmin(&model.objective, &model.cost, &SolveRequest::new(&model))
            .unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.objective - 2.0).abs() < 1e-9);
        assert_eq!(res.assignment[0], 1.0);
        assert_eq!(res.assignment[1], 0.0);
    }

    #[test]
    fn lexmin_identical_objectives_equals_solve() {
        let model = forced_cover_model();
        let solver = Solver::builtin();
        let plain = solver.solve(&SolveRequest::new(&model)).unwrap();
        let lex = solver
            .lexmin(
                &model.objective,
                &model.objective,
                &SolveRequest::new(&model),
            )
            .unwrap();
        assert!((plain.objective - lex.objective).abs() < 1e-9);
    }

    #[test]
    fn fixing_conflict_is_infeasible() {
        let model = forced_cover_model();
        let solver = Solver::builtin();
        let req = SolveRequest::new(&model).with_extras(vec![ExtraConstraint::Fix {
            var: 0,
            value: 2.0,
        }]);
        let res = solver.solve(&req).unwrap();
        assert_eq!(res.status, SolveStatus::Infeasible);
    }

    #[test]
    fn fixings_restrict_the_feasible_set() {
        let model = forced_cover_model();
        let solver = Solver::builtin();
        let req = SolveRequest::new(&model).with_extras(vec![ExtraConstraint::Fix {
            var: 0,
            value: 0.0,
        }]);
        let res = solver.solve(&req).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_eq!(res.assignment[1], 1.0);
    }
}
