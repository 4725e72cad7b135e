//! Frontier quality and value-of-model measures: the hypervolume indicator,
//! and per-point risk-adapted perfect-information / stochastic-solution
//! values (RVPI, RVSS) computed against the wait-and-see and expected-value
//! companions of the risk-averse model.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::instance::{Instance, ScenarioSet};
use crate::model::{self, Constraint, Sense, UncertaintyMode};
use crate::pareto::{ObjectivePoint, ParetoFront, F2_TOL};
use crate::solver::{ExtraConstraint, SolveRequest, SolveStatus, Solver};

/// Area dominated by the front and bounded by the reference point, via
/// rectangle decomposition over the f1-sorted entries.
pub fn hypervolume(front: &ParetoFront, reference: ObjectivePoint) -> Result<f64> {
    for p in front.points() {
        if p.f1 > reference.f1 || p.f2 > reference.f2 + F2_TOL {
            return Err(Error::BadReferencePoint(format!(
                "front point ({}, {}) lies beyond the reference ({}, {})",
                p.f1, p.f2, reference.f1, reference.f2
            )));
        }
    }
    let pts: Vec<ObjectivePoint> = front.points().collect();
    let mut area = 0.0;
    for (k, p) in pts.iter().enumerate() {
        let next_f1 = if k + 1 < pts.len() {
            pts[k + 1].f1
        } else {
            reference.f1
        };
        area += (next_f1 - p.f1) as f64 * (reference.f2 - p.f2).max(0.0);
    }
    Ok(area)
}

fn budget_extra(inst: &Instance, y_vars: &[usize], eps_budget: i64) -> ExtraConstraint {
    ExtraConstraint::Row(Constraint {
        terms: y_vars
            .iter()
            .enumerate()
            .map(|(j, &v)| (v, inst.gamma[j] as f64))
            .collect(),
        sense: Sense::Le,
        rhs: eps_budget as f64,
    })
}

/// Optimal uncovered demand of the single-scenario problem under the cost
/// budget (first stage free to adapt to the scenario).
fn wait_and_see_value(
    inst: &Instance,
    scen: &ScenarioSet,
    s: usize,
    eps_budget: i64,
    solver: &Solver,
) -> Result<i64> {
    let single = scen.single(s);
    let m = model::build_model(inst, &single, UncertaintyMode::Expectation)?;
    let req = SolveRequest::new(&m)
        .with_extras(vec![budget_extra(inst, &m.varmap.y, eps_budget)]);
    let res = solver.solve(&req)?;
    if res.status != SolveStatus::Optimal {
        return Err(Error::Backend(
            "wait-and-see subproblem did not solve to optimality".into(),
        ));
    }
    let q = model::recourse_from_assignment(inst, &single, &m.varmap, &res.assignment);
    Ok(q[0])
}

/// RWS(alpha): CVaR over the per-scenario wait-and-see optima. With
/// `jobs > 1` the independent scenario solves run on that many threads.
pub fn rws(
    inst: &Instance,
    scen: &ScenarioSet,
    alpha: f64,
    eps_budget: i64,
    solver: &Solver,
    jobs: usize,
) -> Result<f64> {
    let n = scen.n_scenarios;
    let values: Vec<i64> = if jobs > 1 && n > 1 {
        let workers = jobs.min(n);
        let chunks: Vec<Result<Vec<(usize, i64)>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    scope.spawn(move || {
                        (w..n)
                            .step_by(workers)
                            .map(|s| {
                                wait_and_see_value(inst, scen, s, eps_budget, solver)
                                    .map(|v| (s, v))
                            })
                            .collect()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });
        let mut pairs: Vec<(usize, i64)> = Vec::with_capacity(n);
        for chunk in chunks {
            pairs.extend(chunk?);
        }
        pairs.sort_unstable_by_key(|&(s, _)| s);
        pairs.into_iter().map(|(_, v)| v).collect()
    } else {
        (0..n)
            .map(|s| wait_and_see_value(inst, scen, s, eps_budget, solver))
            .collect::<Result<_>>()?
    };
    model::aggregate_recourse(UncertaintyMode::CVaR { alpha }, &values)
}

/// REV(alpha): solve the deterministic mean-scenario problem under the
/// budget, fix its first stage, and take the CVaR of the exact per-scenario
/// recourse of that fixed decision.
pub fn rev(
    inst: &Instance,
    scen: &ScenarioSet,
    alpha: f64,
    eps_budget: i64,
    solver: &Solver,
) -> Result<f64> {
    let mean = scen.mean_scenario();
    let m = model::build_model(inst, &mean, UncertaintyMode::Expectation)?;
    let req = SolveRequest::new(&m)
        .with_extras(vec![budget_extra(inst, &m.varmap.y, eps_budget)]);
    let res = solver.solve(&req)?;
    if res.status != SolveStatus::Optimal {
        return Err(Error::Backend(
            "expected-value subproblem did not solve to optimality".into(),
        ));
    }
    let y = m.y_from_assignment(&res.assignment);
    let values: Vec<i64> = (0..scen.n_scenarios)
        .map(|s| model::evaluate_recourse(inst, scen, s, &y))
        .collect::<Result<_>>()?;
    model::aggregate_recourse(UncertaintyMode::CVaR { alpha }, &values)
}

#[derive(Debug, Clone)]
pub struct IndicatorRow {
    pub f1: i64,
    pub rrp: f64,
    pub rws: f64,
    pub rev: f64,
    pub rvpi: f64,
    pub rvss: f64,
    /// None when RRP is zero (relative value undefined).
    pub rvpi_rel: Option<f64>,
    pub rvss_rel: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct IndicatorReport {
    pub rows: Vec<IndicatorRow>,
    pub avg_rvpi_rel: Option<f64>,
    pub max_rvpi_rel: Option<f64>,
    pub avg_rvss_rel: Option<f64>,
    pub max_rvss_rel: Option<f64>,
}

impl IndicatorReport {
    fn fill_aggregates(&mut self) {
        let vpi: Vec<f64> = self.rows.iter().filter_map(|r| r.rvpi_rel).collect();
        let vss: Vec<f64> = self.rows.iter().filter_map(|r| r.rvss_rel).collect();
        let agg = |v: &[f64]| -> (Option<f64>, Option<f64>) {
            if v.is_empty() {
                (None, None)
            } else {
                (
                    Some(v.iter().sum::<f64>() / v.len() as f64),
                    Some(v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))),
                )
            }
        };
        (self.avg_rvpi_rel, self.max_rvpi_rel) = agg(&vpi);
        (self.avg_rvss_rel, self.max_rvss_rel) = agg(&vss);
    }

    pub fn to_csv_string(&self) -> String {
        let fmt_rel = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{}", x));
        let mut out = String::from("f1,rrp,rws,rev,rvpi,rvss,rvpi_rel,rvss_rel\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.f1,
                r.rrp,
                r.rws,
                r.rev,
                r.rvpi,
                r.rvss,
                fmt_rel(r.rvpi_rel),
                fmt_rel(r.rvss_rel)
            )
            .unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Per-point stochastic measures for a front produced at risk level
/// `alpha`: each point's cost bounds the companion problems, RRP is the
/// point's own f2, RVPI = RRP - RWS, RVSS = REV - RRP; relative values
/// divide by RRP and are undefined (flagged `NA`) at RRP = 0.
pub fn value_report(
    inst: &Instance,
    scen: &ScenarioSet,
    alpha: f64,
    front: &ParetoFront,
    solver: &Solver,
    jobs: usize,
) -> Result<IndicatorReport> {
    let mut report = IndicatorReport::default();
    for e in front.entries() {
        let budget = e.point.f1;
        let rrp = e.point.f2;
        let rws_v = rws(inst, scen, alpha, budget, solver, jobs)?;
        let rev_v = rev(inst, scen, alpha, budget, solver)?;
        let rvpi = rrp - rws_v;
        let rvss = rev_v - rrp;
        let defined = rrp.abs() > F2_TOL;
        report.rows.push(IndicatorRow {
            f1: budget,
            rrp,
            rws: rws_v,
            rev: rev_v,
            rvpi,
            rvss,
            rvpi_rel: defined.then(|| rvpi / rrp),
            rvss_rel: defined.then(|| rvss / rrp),
        });
    }
    report.fill_aggregates();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::FrontEntry;

    fn front_of(points: &[(i64, f64)]) -> ParetoFront {
        let mut f = ParetoFront::new();
        for &(f1, f2) in points {
            f.insert(FrontEntry::new(ObjectivePoint::new(f1, f2), vec![false]));
        }
        f
    }

    #[test]
    fn hypervolume_examples() {
        let f = front_of(&[(1, 3.0), (2, 2.0), (3, 1.0)]);
        assert_eq!(hypervolume(&f, ObjectivePoint::new(4, 4.0)).unwrap(), 6.0);

        let single = front_of(&[(0, 0.0)]);
        assert_eq!(
            hypervolume(&single, ObjectivePoint::new(1, 1.0)).unwrap(),
            1.0
        );

        assert_eq!(
            hypervolume(&ParetoFront::new(), ObjectivePoint::new(1, 1.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn hypervolume_rejects_bad_reference() {
        let f = front_of(&[(1, 3.0), (2, 2.0)]);
        assert!(matches!(
            hypervolume(&f, ObjectivePoint::new(1, 4.0)),
            Err(Error::BadReferencePoint(_))
        ));
        assert!(matches!(
            hypervolume(&f, ObjectivePoint::new(4, 2.5)),
            Err(Error::BadReferencePoint(_))
        ));
    }

    #[test]
    fn hypervolume_monotone_under_insert() {
        let reference = ObjectivePoint::new(10, 10.0);
        let base = front_of(&[(1, 8.0), (7, 2.0)]);
        let more = front_of(&[(1, 8.0), (4, 5.0), (7, 2.0)]);
        let hv_base = hypervolume(&base, reference).unwrap();
        let hv_more = hypervolume(&more, reference).unwrap();
        assert!(hv_more > hv_base);
    }
}
