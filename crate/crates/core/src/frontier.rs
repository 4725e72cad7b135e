//! Exact bi-objective criterion-space search: epsilon-constraint sweep and
//! the balanced box method.
//!
//! Both methods drive lexicographic MILP solves over the deterministic
//! equivalent. Every recorded point is reconstructed exactly from the
//! snapped assignment (integer per-scenario recourse, aggregated by the
//! model's risk measure), so the emitted front carries exact objective
//! values for its first-stage decisions.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::instance::{Instance, ScenarioSet};
use crate::model::{self, LinExpr, MipModel, UncertaintyMode};
use crate::pareto::{CriterionBox, FrontEntry, ObjectivePoint, ParetoFront, F2_TOL};
use crate::solver::{ExtraConstraint, SolveRequest, SolveStatus, Solver};

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    /// Minimum step in the integer cost objective.
    pub d1: i64,
    /// Minimum step in the continuous uncertainty objective.
    pub d2: f64,
    /// Wall clock across all subproblem solves, seconds.
    pub total_time_limit: f64,
    /// Cap for any single lexicographic solve, seconds.
    pub per_solve_time_limit: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            d1: 1,
            d2: 1e-6,
            total_time_limit: 7200.0,
            per_solve_time_limit: 7200.0,
        }
    }
}

/// Problem bundle shared by the search methods: the instance data and its
/// built deterministic equivalent.
pub struct BiObjective<'a> {
    pub inst: &'a Instance,
    pub scen: &'a ScenarioSet,
    pub mode: UncertaintyMode,
    pub model: MipModel,
}

impl<'a> BiObjective<'a> {
    pub fn new(
        inst: &'a Instance,
        scen: &'a ScenarioSet,
        mode: UncertaintyMode,
    ) -> Result<Self> {
        let model = model::build_model(inst, scen, mode)?;
        Ok(Self {
            inst,
            scen,
            mode,
            model,
        })
    }

    /// Exact front entry for a solved assignment: snapped first stage, per
    /// scenario recourse recomputed from the snapped assignment, risk
    /// aggregation by the model's mode.
    pub fn entry_from_assignment(&self, assignment: &[f64]) -> FrontEntry {
        let y = self.model.y_from_assignment(assignment);
        let f1: i64 = y
            .iter()
            .zip(&self.inst.gamma)
            .map(|(&open, &g)| if open { g } else { 0 })
            .sum();
        let q = model::recourse_from_assignment(self.inst, self.scen, &self.model.varmap, assignment);
        let f2 = model::aggregate_recourse(self.mode, &q).expect("non-empty scenario set");
        FrontEntry::new(ObjectivePoint::new(f1, f2), y)
    }
}

/// Search result; `complete` is false when the time limit cut the run short
/// (the partial front is still valid: every returned point is
/// non-dominated).
#[derive(Debug, Clone)]
pub struct FrontierOutcome {
    pub front: ParetoFront,
    pub complete: bool,
    /// Points in discovery order, including re-discovered endpoints.
    pub discovered: Vec<ObjectivePoint>,
}

pub(crate) struct Clock {
    deadline: Instant,
    per_solve: f64,
}

impl Clock {
    pub(crate) fn new(cfg: &SearchConfig) -> Self {
        Self {
            deadline: Instant::now() + Duration::from_secs_f64(cfg.total_time_limit.min(1e9)),
            per_solve: cfg.per_solve_time_limit,
        }
    }

    pub(crate) fn expired(&self) -> bool {
        Instant::now() >= self.deadline
    }

    /// Time budget for the next solve; `None` when the total limit is spent.
    pub(crate) fn solve_budget(&self) -> Option<f64> {
        let remaining = self
            .deadline
            .saturating_duration_since(Instant::now())
            .as_secs_f64();
        if remaining <= 0.0 {
            None
        } else {
            Some(remaining.min(self.per_solve))
        }
    }
}

fn budget_row(prob: &BiObjective, eps: i64) -> ExtraConstraint {
    ExtraConstraint::Row(crate::model::Constraint {
        terms: prob.model.cost.terms.clone(),
        sense: crate::model::Sense::Le,
        rhs: eps as f64,
    })
}

fn f2_cap_row(prob: &BiObjective, cap: f64) -> ExtraConstraint {
    ExtraConstraint::Row(crate::model::Constraint {
        terms: prob.model.objective.terms.clone(),
        sense: crate::model::Sense::Le,
        rhs: cap - prob.model.objective.constant,
    })
}

fn lexmin_entry(
    prob: &BiObjective,
    solver: &Solver,
    primary: &LinExpr,
    secondary: &LinExpr,
    extras: Vec<ExtraConstraint>,
    clock: &Clock,
) -> Result<Option<FrontEntry>> {
    let Some(budget) = clock.solve_budget() else {
        return Ok(None);
    };
    let req = SolveRequest::new(&prob.model)
        .with_extras(extras)
        .with_time_limit(budget);
    let res = solver.lexmin(primary, secondary, &req)?;
    if res.status != SolveStatus::Optimal {
        return Ok(None);
    }
    Ok(Some(prob.entry_from_assignment(&res.assignment)))
}

/// Lexicographic endpoints: `Z^T` minimizes cost first, `Z^B` minimizes the
/// uncertainty objective first. Errors with `EndpointsTimeout` when either
/// lexmin cannot be finished in time.
pub fn endpoints(
    prob: &BiObjective,
    solver: &Solver,
    cfg: &SearchConfig,
) -> Result<(FrontEntry, FrontEntry)> {
    let clock = Clock::new(cfg);
    endpoints_with_clock(prob, solver, &clock)
}

pub(crate) fn endpoints_with_clock(
    prob: &BiObjective,
    solver: &Solver,
    clock: &Clock,
) -> Result<(FrontEntry, FrontEntry)> {
    let zt = lexmin_entry(
        prob,
        solver,
        &prob.model.cost,
        &prob.model.objective,
        Vec::new(),
        clock,
    )?
    .ok_or(Error::EndpointsTimeout)?;
    let zb = lexmin_entry(
        prob,
        solver,
        &prob.model.objective,
        &prob.model.cost,
        Vec::new(),
        clock,
    )?
    .ok_or(Error::EndpointsTimeout)?;
    Ok((zt, zb))
}

/// Epsilon-constraint sweep from `Z^B` toward `Z^T`: minimize the
/// uncertainty objective under a shrinking cost budget, stepping the budget
/// below each found point. With integer costs and step `d1 = 1` the sweep
/// enumerates the complete non-dominated set.
pub fn epsilon_constraint(
    prob: &BiObjective,
    solver: &Solver,
    cfg: &SearchConfig,
) -> Result<FrontierOutcome> {
    let clock = Clock::new(cfg);
    let (zt, zb) = endpoints_with_clock(prob, solver, &clock)?;

    let f1_min = zt.point.f1;
    let mut front = ParetoFront::new();
    let mut discovered = Vec::new();
    front.insert(zt);
    front.insert(zb.clone());

    let mut eps = zb.point.f1 - cfg.d1;
    let mut complete = true;
    while eps >= f1_min {
        let found = lexmin_entry(
            prob,
            solver,
            &prob.model.objective,
            &prob.model.cost,
            vec![budget_row(prob, eps)],
            &clock,
        )?;
        let Some(entry) = found else {
            complete = false;
            break;
        };
        eps = entry.point.f1 - cfg.d1;
        discovered.push(entry.point);
        front.insert(entry);
    }
    Ok(FrontierOutcome {
        front,
        complete,
        discovered,
    })
}

struct QueuedBox {
    region: CriterionBox,
    area: f64,
    seq: u64,
}

/// Balanced box search: keep a queue of criterion-space boxes ordered by
/// non-increasing area, split the largest horizontally, search the bottom
/// half cost-first and the top half uncertainty-first, and queue the two
/// sub-boxes induced by any new point.
pub fn balanced_box(
    prob: &BiObjective,
    solver: &Solver,
    cfg: &SearchConfig,
) -> Result<FrontierOutcome> {
    let clock = Clock::new(cfg);
    let (zt, zb) = endpoints_with_clock(prob, solver, &clock)?;

    let mut front = ParetoFront::new();
    let mut discovered = Vec::new();
    front.insert(zt.clone());
    front.insert(zb.clone());

    let same_point = |a: &ObjectivePoint, b: &ObjectivePoint| {
        a.f1 == b.f1 && (a.f2 - b.f2).abs() <= F2_TOL
    };

    let mut queue: Vec<QueuedBox> = Vec::new();
    let mut seq = 0u64;
    let push = |queue: &mut Vec<QueuedBox>, region: CriterionBox, seq: &mut u64| {
        queue.push(QueuedBox {
            area: region.area(),
            region,
            seq: *seq,
        });
        *seq += 1;
    };
    if !same_point(&zt.point, &zb.point) {
        let initial = CriterionBox::new(zt.point, zb.point)?;
        push(&mut queue, initial, &mut seq);
    }

    let mut complete = true;
    while !queue.is_empty() {
        if clock.expired() {
            complete = false;
            break;
        }
        // largest area first, FIFO on ties
        let best = queue
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| {
                a.area
                    .total_cmp(&b.area)
                    .then(b.seq.cmp(&a.seq))
            })
            .map(|(i, _)| i)
            .unwrap();
        let QueuedBox { region, .. } = queue.swap_remove(best);

        // too thin to contain an unseen point between its corner points
        if region.bottom.f1 - region.top.f1 < 2 * cfg.d1
            || region.top.f2 - region.bottom.f2 <= cfg.d2
        {
            continue;
        }
        let mid = 0.5 * (region.top.f2 + region.bottom.f2);

        // bottom half: leftmost point with f2 <= mid
        let found = lexmin_entry(
            prob,
            solver,
            &prob.model.cost,
            &prob.model.objective,
            vec![f2_cap_row(prob, mid)],
            &clock,
        )?;
        let Some(bottom_entry) = found else {
            complete = false;
            break;
        };
        let zbar_t = bottom_entry.point;
        if !same_point(&zbar_t, &region.bottom) {
            discovered.push(zbar_t);
            front.insert(bottom_entry);
            push(
                &mut queue,
                CriterionBox::new(zbar_t, region.bottom)?,
                &mut seq,
            );
        }

        // top half: best f2 strictly left of the bottom-half find
        let cap = zbar_t.f1 - cfg.d1;
        if cap >= region.top.f1 {
            let found = lexmin_entry(
                prob,
                solver,
                &prob.model.objective,
                &prob.model.cost,
                vec![budget_row(prob, cap)],
                &clock,
            )?;
            let Some(top_entry) = found else {
                complete = false;
                break;
            };
            let zbar_b = top_entry.point;
            if !same_point(&zbar_b, &region.top) {
                discovered.push(zbar_b);
                front.insert(top_entry);
                push(
                    &mut queue,
                    CriterionBox::new(region.top, zbar_b)?,
                    &mut seq,
                );
            }
        }
    }
    Ok(FrontierOutcome {
        front,
        complete,
        discovered,
    })
}
