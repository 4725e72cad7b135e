//! LP-relaxation branch-and-bound for the built-in backend.
//!
//! Branching is on the most-fractional binary (general integers only when no
//! binary is fractional), ties on the lowest variable index; node selection
//! is best-bound with FIFO tie-break. Child nodes warm start the simplex
//! from the parent basis, which after a single bound change is repaired by
//! the simplex's own phase 1 in a handful of pivots.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use super::simplex::{solve_lp, Basis, LpProblem, LpStatus};
use crate::error::{Error, Result};

const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    FeasibleTimeLimit,
    Infeasible,
    NoSolutionTimeLimit,
}

#[derive(Debug, Clone)]
pub struct MilpOutcome {
    pub status: MilpStatus,
    /// Objective of the incumbent (meaningful unless no solution was found).
    pub objective: f64,
    /// Structural variable values with integers snapped.
    pub values: Option<Vec<f64>>,
    /// Final proven lower bound.
    pub best_bound: f64,
    pub nodes: usize,
}

pub struct MilpInput<'a> {
    pub lp: &'a LpProblem,
    pub cost: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    /// Structural variables required integral, ascending.
    pub integers: &'a [usize],
    /// Subset of `integers` treated as binaries for branching priority.
    pub is_binary: &'a [bool],
    pub deadline: Option<Instant>,
    pub gap_tolerance: f64,
    /// Optional feasible assignment used to seed the incumbent.
    pub warm: Option<&'a [f64]>,
}

struct Node {
    /// Bound changes relative to the root, applied in order.
    changes: Vec<(usize, f64, f64)>,
    basis: Option<Rc<Basis>>,
    bound: f64,
}

struct HeapKey {
    bound: f64,
    id: usize,
}

impl PartialEq for HeapKey {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for HeapKey {}
impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert for best-bound-first, FIFO ties.
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}
impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn most_fractional(values: &[f64], vars: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &v in vars {
        let frac = (values[v] - values[v].round()).abs();
        if frac > INT_TOL {
            let dist = (values[v] - values[v].floor()).min(values[v].ceil() - values[v]);
            match best {
                Some((_, d)) if d >= dist => {}
                _ => best = Some((v, dist)),
            }
        }
    }
    best.map(|(v, _)| v)
}

fn snap_integers(values: &mut [f64], integers: &[usize]) {
    for &v in integers {
        values[v] = values[v].round();
    }
}

/// Row activities of a structural assignment, for feasibility checks.
fn check_feasible(lp: &LpProblem, lower: &[f64], upper: &[f64], x: &[f64]) -> bool {
    let m = lp.nrows();
    let mut act = vec![0.0; m];
    for (v, col) in lp.cols.iter().enumerate() {
        if x[v] != 0.0 {
            for &(r, a) in col {
                act[r] += a * x[v];
            }
        }
    }
    for r in 0..m {
        let s = lp.rhs[r] - act[r];
        if s < lp.slack_lower[r] - INT_TOL || s > lp.slack_upper[r] + INT_TOL {
            return false;
        }
    }
    x.iter()
        .enumerate()
        .all(|(v, &xv)| xv >= lower[v] - INT_TOL && xv <= upper[v] + INT_TOL)
}

pub fn solve_milp(input: &MilpInput) -> Result<MilpOutcome> {
    let ncols = input.lp.ncols;
    let binaries: Vec<usize> = input
        .integers
        .iter()
        .copied()
        .filter(|&v| input.is_binary[v])
        .collect();
    let generals: Vec<usize> = input
        .integers
        .iter()
        .copied()
        .filter(|&v| !input.is_binary[v])
        .collect();

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    if let Some(seed) = input.warm {
        let mut x = seed.to_vec();
        if x.len() == ncols {
            snap_integers(&mut x, input.integers);
            if input
                .integers
                .iter()
                .all(|&v| (seed[v] - seed[v].round()).abs() <= INT_TOL)
                && check_feasible(input.lp, input.lower, input.upper, &x)
            {
                let obj = input.cost.iter().zip(&x).map(|(&c, &v)| c * v).sum();
                incumbent = Some((obj, x));
            }
        }
    }

    let mut nodes: Vec<Option<Node>> = vec![Some(Node {
        changes: Vec::new(),
        basis: None,
        bound: f64::NEG_INFINITY,
    })];
    let mut heap = BinaryHeap::new();
    heap.push(HeapKey {
        bound: f64::NEG_INFINITY,
        id: 0,
    });

    let mut lower = input.lower.to_vec();
    let mut upper = input.upper.to_vec();
    let mut explored = 0usize;
    let mut timed_out = false;
    let mut best_open_bound = f64::NEG_INFINITY;

    let gap_abs = |inc: f64| input.gap_tolerance * inc.abs().max(1.0) + 1e-9;

    while let Some(key) = heap.pop() {
        let node = nodes[key.id].take().unwrap();
        best_open_bound = node.bound;
        if let Some((inc_obj, _)) = &incumbent {
            if node.bound >= inc_obj - gap_abs(*inc_obj) {
                // best-bound order: everything remaining is no better
                best_open_bound = *inc_obj;
                break;
            }
        }
        if let Some(d) = input.deadline {
            if Instant::now() >= d {
                timed_out = true;
                break;
            }
        }
        explored += 1;

        lower.copy_from_slice(input.lower);
        upper.copy_from_slice(input.upper);
        for &(v, lo, hi) in &node.changes {
            lower[v] = lo;
            upper[v] = hi;
        }

        let lp = solve_lp(
            input.lp,
            input.cost,
            &lower,
            &upper,
            node.basis.as_deref(),
            input.deadline,
        )?;
        match lp.status {
            LpStatus::Infeasible => continue,
            LpStatus::TimeLimit => {
                timed_out = true;
                break;
            }
            LpStatus::Unbounded => {
                return Err(Error::NumericalFailure(
                    "unbounded LP relaxation".into(),
                ));
            }
            LpStatus::Optimal => {}
        }
        let bound = lp.objective.max(node.bound);
        if let Some((inc_obj, _)) = &incumbent {
            if bound >= inc_obj - gap_abs(*inc_obj) {
                continue;
            }
        }

        let branch_var = most_fractional(&lp.values, &binaries)
            .or_else(|| most_fractional(&lp.values, &generals));
        let Some(v) = branch_var else {
            // integral: candidate incumbent
            let mut x = lp.values[..ncols].to_vec();
            snap_integers(&mut x, input.integers);
            let obj: f64 = input.cost.iter().zip(&x).map(|(&c, &xv)| c * xv).sum();
            if incumbent.as_ref().is_none_or(|(cur, _)| obj < cur - 1e-12) {
                incumbent = Some((obj, x));
            }
            continue;
        };

        let frac = lp.values[v];
        let basis = Rc::new(lp.basis);
        let mut down = node.changes.clone();
        down.push((v, lower[v], frac.floor()));
        let mut up = node.changes.clone();
        up.push((v, frac.ceil(), upper[v]));
        for changes in [down, up] {
            let id = nodes.len();
            nodes.push(Some(Node {
                changes,
                basis: Some(Rc::clone(&basis)),
                bound,
            }));
            heap.push(HeapKey { bound, id });
        }
    }

    let open_bound = if heap.is_empty() && !timed_out {
        match &incumbent {
            Some((obj, _)) => *obj,
            None => f64::INFINITY,
        }
    } else {
        best_open_bound
    };

    Ok(match incumbent {
        Some((obj, x)) => MilpOutcome {
            status: if timed_out {
                MilpStatus::FeasibleTimeLimit
            } else {
                MilpStatus::Optimal
            },
            objective: obj,
            values: Some(x),
            best_bound: if timed_out { open_bound } else { obj },
            nodes: explored,
        },
        None => MilpOutcome {
            status: if timed_out {
                MilpStatus::NoSolutionTimeLimit
            } else {
                MilpStatus::Infeasible
            },
            objective: f64::INFINITY,
            values: None,
            best_bound: open_bound,
            nodes: explored,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forced_cover() -> (LpProblem, Vec<f64>) {
        // min y1 + y2 s.t. y1 + y2 >= 1, y binary
        let lp = LpProblem {
            ncols: 2,
            cols: vec![vec![(0, 1.0)], vec![(0, 1.0)]],
            rhs: vec![1.0],
            slack_lower: vec![f64::NEG_INFINITY],
            slack_upper: vec![0.0],
        };
        (lp, vec![1.0, 1.0])
    }

    #[test]
    fn solves_forced_cover() {
        let (lp, cost) = forced_cover();
        let out = solve_milp(&MilpInput {
            lp: &lp,
            cost: &cost,
            lower: &[0.0, 0.0],
            upper: &[1.0, 1.0],
            integers: &[0, 1],
            is_binary: &[true, true],
            deadline: None,
            gap_tolerance: 0.0,
            warm: None,
        })
        .unwrap();
        assert_eq!(out.status, MilpStatus::Optimal);
        assert!((out.objective - 1.0).abs() < 1e-9);
        let x = out.values.unwrap();
        assert_eq!(x[0] + x[1], 1.0);
    }

    #[test]
    fn reports_infeasible() {
        // 0*y >= 1
        let lp = LpProblem {
            ncols: 1,
            cols: vec![vec![]],
            rhs: vec![1.0],
            slack_lower: vec![f64::NEG_INFINITY],
            slack_upper: vec![0.0],
        };
        let out = solve_milp(&MilpInput {
            lp: &lp,
            cost: &[0.0],
            lower: &[0.0],
            upper: &[1.0],
            integers: &[0],
            is_binary: &[true],
            deadline: None,
            gap_tolerance: 0.0,
            warm: None,
        })
        .unwrap();
        assert_eq!(out.status, MilpStatus::Infeasible);
    }

    #[test]
    fn knapsack_with_fractional_relaxation() {
        // max 6x1 + 5x2 + 4x3 st 2x1 + x2 + x3 <= 2, binary
        // -> min -obj; optimum picks x2, x3 (value 9)
        let lp = LpProblem {
            ncols: 3,
            cols: vec![vec![(0, 2.0)], vec![(0, 1.0)], vec![(0, 1.0)]],
            rhs: vec![2.0],
            slack_lower: vec![0.0],
            slack_upper: vec![f64::INFINITY],
        };
        let out = solve_milp(&MilpInput {
            lp: &lp,
            cost: &[-6.0, -5.0, -4.0],
            lower: &[0.0; 3],
            upper: &[1.0; 3],
            integers: &[0, 1, 2],
            is_binary: &[true; 3],
            deadline: None,
            gap_tolerance: 0.0,
            warm: None,
        })
        .unwrap();
        assert_eq!(out.status, MilpStatus::Optimal);
        assert!((out.objective + 9.0).abs() < 1e-9);
        assert_eq!(out.values.unwrap(), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn warm_seed_bounds_search() {
        let (lp, cost) = forced_cover();
        let out = solve_milp(&MilpInput {
            lp: &lp,
            cost: &cost,
            lower: &[0.0, 0.0],
            upper: &[1.0, 1.0],
            integers: &[0, 1],
            is_binary: &[true, true],
            deadline: None,
            gap_tolerance: 0.0,
            warm: Some(&[1.0, 0.0]),
        })
        .unwrap();
        assert_eq!(out.status, MilpStatus::Optimal);
        assert!((out.objective - 1.0).abs() < 1e-9);
    }
}
