//! Matheuristic frontier approximation: an epsilon-constraint sweep that
//! fixes the candidates closed in the previous front point, and falls back
//! to LP-relaxation rounding plus asymmetric local branching when the
//! restricted MIP does not finish within its per-subproblem time limit.
//!
//! Every recorded point is re-evaluated exactly (per-scenario recourse
//! solves plus the risk aggregation), so the approximate front never
//! contains a point with a wrong objective vector, only possibly dominated
//! ones.

use crate::error::{Error, Result};
use crate::frontier::{BiObjective, Clock, FrontierOutcome, SearchConfig};
use crate::model::{self, Constraint, Sense};
use crate::pareto::{FrontEntry, ObjectivePoint, ParetoFront};
use crate::solver::{ExtraConstraint, SolveRequest, SolveStatus, Solver};

#[derive(Debug, Clone, Copy)]
pub struct MatConfig {
    /// Per-subproblem MIP time limit, seconds.
    pub tilim: f64,
    /// Asymmetric local-branching radius.
    pub l_prime: usize,
    /// Maximum local-branching improvement iterations per sweep step.
    pub lb_rounds: usize,
    pub search: SearchConfig,
}

impl Default for MatConfig {
    fn default() -> Self {
        Self {
            tilim: 150.0,
            l_prime: 2,
            lb_rounds: 5,
            search: SearchConfig::default(),
        }
    }
}

/// Candidates closed in the reference solution; fixing them closed is the
/// RINS-style restriction carried along the sweep.
pub fn zero_fixing_set(y_prev: &[bool]) -> Vec<usize> {
    (0..y_prev.len()).filter(|&j| !y_prev[j]).collect()
}

fn zero_fixing_extras(y_prev: &[bool], y_vars: &[usize]) -> Vec<ExtraConstraint> {
    zero_fixing_set(y_prev)
        .into_iter()
        .map(|j| ExtraConstraint::Fix {
            var: y_vars[j],
            value: 0.0,
        })
        .collect()
}

/// Symmetric local-branching row: at most `l` open/close flips against the
/// reference solution.
pub fn local_branching_row(y_ref: &[bool], l: usize, y_vars: &[usize]) -> Constraint {
    let mut terms = Vec::with_capacity(y_ref.len());
    let mut open_count = 0i64;
    for (j, &open) in y_ref.iter().enumerate() {
        if open {
            open_count += 1;
            terms.push((y_vars[j], -1.0));
        } else {
            terms.push((y_vars[j], 1.0));
        }
    }
    Constraint {
        terms,
        sense: Sense::Le,
        rhs: l as f64 - open_count as f64,
    }
}

/// Asymmetric form: at most `l_prime` of the reference's open candidates may
/// close (opening new ones is unrestricted).
pub fn asymmetric_row(y_ref: &[bool], l_prime: usize, y_vars: &[usize]) -> Constraint {
    let mut terms = Vec::new();
    let mut open_count = 0i64;
    for (j, &open) in y_ref.iter().enumerate() {
        if open {
            open_count += 1;
            terms.push((y_vars[j], -1.0));
        }
    }
    Constraint {
        terms,
        sense: Sense::Le,
        rhs: l_prime as f64 - open_count as f64,
    }
}

/// Rounds a fractional first stage under the cost budget: open candidates by
/// decreasing fractional value while the budget allows; everything else
/// stays closed. The result always satisfies the budget.
pub fn round_lp(y_frac: &[f64], gamma: &[i64], eps_budget: i64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..y_frac.len()).filter(|&j| y_frac[j] > 1e-9).collect();
    order.sort_by(|&a, &b| y_frac[b].total_cmp(&y_frac[a]).then(a.cmp(&b)));
    let mut y = vec![false; y_frac.len()];
    let mut spent = 0i64;
    for j in order {
        if spent + gamma[j] <= eps_budget {
            spent += gamma[j];
            y[j] = true;
        }
    }
    y
}

fn exact_entry(prob: &BiObjective, y: &[bool]) -> Result<FrontEntry> {
    let q: Vec<i64> = (0..prob.scen.n_scenarios)
        .map(|s| model::evaluate_recourse(prob.inst, prob.scen, s, y))
        .collect::<Result<_>>()?;
    let f2 = model::aggregate_recourse(prob.mode, &q)?;
    let f1: i64 = y
        .iter()
        .zip(&prob.inst.gamma)
        .map(|(&open, &g)| if open { g } else { 0 })
        .sum();
    Ok(FrontEntry::new(ObjectivePoint::new(f1, f2), y.to_vec()))
}

fn budget_row(prob: &BiObjective, eps: i64) -> ExtraConstraint {
    ExtraConstraint::Row(Constraint {
        terms: prob.model.cost.terms.clone(),
        sense: Sense::Le,
        rhs: eps as f64,
    })
}

/// Local-branching refinement: repeatedly solve the model restricted to the
/// asymmetric neighborhood of the reference, keeping exact re-evaluations,
/// until no round improves. Returns the best first stage found.
fn local_branching_refine(
    prob: &BiObjective,
    solver: &Solver,
    cfg: &MatConfig,
    clock: &Clock,
    extras_base: &[ExtraConstraint],
    start: Vec<bool>,
) -> Result<(Vec<bool>, f64)> {
    let mut best_y = start;
    let mut best_f2 = exact_entry(prob, &best_y)?.point.f2;
    for _ in 0..cfg.lb_rounds {
        let Some(budget) = clock.solve_budget() else {
            break;
        };
        let mut extras = extras_base.to_vec();
        extras.push(ExtraConstraint::Row(asymmetric_row(
            &best_y,
            cfg.l_prime,
            &prob.model.varmap.y,
        )));
        let req = SolveRequest::new(&prob.model)
            .with_extras(extras)
            .with_time_limit(budget.min(cfg.tilim));
        let res = solver.solve(&req)?;
        if !res.has_solution() {
            break;
        }
        let cand_y = prob.model.y_from_assignment(&res.assignment);
        let cand_f2 = exact_entry(prob, &cand_y)?.point.f2;
        if cand_f2 < best_f2 - 1e-9 {
            best_f2 = cand_f2;
            best_y = cand_y;
        } else {
            break;
        }
    }
    Ok((best_y, best_f2))
}

/// Approximate Pareto frontier by the fixing/local-branching sweep.
pub fn mat_frontier(
    prob: &BiObjective,
    solver: &Solver,
    cfg: &MatConfig,
) -> Result<FrontierOutcome> {
    let clock = Clock::new(&cfg.search);
    let (zt, zb) = mat_endpoints(prob, solver, cfg, &clock)?;

    let f1_min = zt.point.f1;
    let mut front = ParetoFront::new();
    let mut discovered = Vec::new();
    front.insert(zt);
    let mut y_prev = zb.y.clone();
    let mut eps = zb.point.f1 - cfg.search.d1;
    front.insert(zb);

    let mut complete = true;
    while eps >= f1_min {
        let Some(budget) = clock.solve_budget() else {
            complete = false;
            break;
        };
        let mut extras = vec![budget_row(prob, eps)];
        extras.extend(zero_fixing_extras(&y_prev, &prob.model.varmap.y));

        let req = SolveRequest::new(&prob.model)
            .with_extras(extras.clone())
            .with_time_limit(budget.min(cfg.tilim));
        let res = solver.lexmin(&prob.model.objective, &prob.model.cost, &req)?;

        let y = if res.status == SolveStatus::Optimal {
            prob.model.y_from_assignment(&res.assignment)
        } else {
            // relax, round under the budget, then improve around the rounding
            let lr = solver.solve_relaxation(&req, &prob.model.objective)?;
            if lr.status != SolveStatus::Optimal {
                complete = false;
                break;
            }
            let y_frac: Vec<f64> = prob
                .model
                .varmap
                .y
                .iter()
                .map(|&v| lr.assignment[v])
                .collect();
            let rounded = round_lp(&y_frac, &prob.inst.gamma, eps);
            let lb_extras = vec![budget_row(prob, eps)];
            let (y, _) =
                local_branching_refine(prob, solver, cfg, &clock, &lb_extras, rounded)?;
            y
        };

        let entry = exact_entry(prob, &y)?;
        discovered.push(entry.point);
        eps = entry.point.f1 - cfg.search.d1;
        y_prev = y;
        front.insert(entry);
    }

    Ok(FrontierOutcome {
        front,
        complete,
        discovered,
    })
}

/// Exact endpoints when they solve in time; otherwise the bottom endpoint is
/// approximated by local branching around the best incumbent, per the
/// framework's fallback.
fn mat_endpoints(
    prob: &BiObjective,
    solver: &Solver,
    cfg: &MatConfig,
    clock: &Clock,
) -> Result<(FrontEntry, FrontEntry)> {
    let zt = {
        let Some(budget) = clock.solve_budget() else {
            return Err(Error::EndpointsTimeout);
        };
        let req = SolveRequest::new(&prob.model).with_time_limit(budget);
        let res = solver.lexmin(&prob.model.cost, &prob.model.objective, &req)?;
        if res.status != SolveStatus::Optimal {
            return Err(Error::EndpointsTimeout);
        }
        prob.entry_from_assignment(&res.assignment)
    };
    let zb = {
        let Some(budget) = clock.solve_budget() else {
            return Err(Error::EndpointsTimeout);
        };
        let req = SolveRequest::new(&prob.model).with_time_limit(budget);
        let res = solver.lexmin(&prob.model.objective, &prob.model.cost, &req)?;
        if res.status == SolveStatus::Optimal {
            prob.entry_from_assignment(&res.assignment)
        } else if res.has_solution() {
            let start = prob.model.y_from_assignment(&res.assignment);
            let (y, _) = local_branching_refine(prob, solver, cfg, clock, &[], start)?;
            exact_entry(prob, &y)?
        } else {
            return Err(Error::EndpointsTimeout);
        }
    };
    Ok((zt, zb))
}
