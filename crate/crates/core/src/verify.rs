//! Re-checks an emitted front against its instance: first-stage cost is
//! recomputed exactly and each point's uncertainty value is re-derived from
//! per-scenario recourse solves.

use crate::error::Result;
use crate::instance::{Instance, ScenarioSet};
use crate::model::{self, UncertaintyMode};
use crate::pareto::{ParetoFront, F2_TOL};

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn verify_front(
    inst: &Instance,
    scen: &ScenarioSet,
    mode: UncertaintyMode,
    front: &ParetoFront,
) -> Result<VerifyReport> {
    mode.validate()?;
    let mut report = VerifyReport::default();
    for (idx, e) in front.entries().iter().enumerate() {
        report.checked += 1;
        if e.y.len() != inst.n_candidates() {
            report.failures.push(format!(
                "entry {}: y has {} bits, expected {}",
                idx,
                e.y.len(),
                inst.n_candidates()
            ));
            continue;
        }
        let f1: i64 = e
            .y
            .iter()
            .zip(&inst.gamma)
            .map(|(&open, &g)| if open { g } else { 0 })
            .sum();
        if f1 != e.point.f1 {
            report.failures.push(format!(
                "entry {}: stated f1 = {} but the open set costs {}",
                idx, e.point.f1, f1
            ));
        }
        let q: Vec<i64> = (0..scen.n_scenarios)
            .map(|s| model::evaluate_recourse(inst, scen, s, &e.y))
            .collect::<Result<_>>()?;
        let f2 = model::aggregate_recourse(mode, &q)?;
        if (f2 - e.point.f2).abs() > F2_TOL {
            report.failures.push(format!(
                "entry {}: stated f2 = {} but exact recomputation gives {}",
                idx, e.point.f2, f2
            ));
        }
    }
    Ok(report)
}
