//! Bounded-variable primal simplex with a dense product-form inverse.
//!
//! Constraints are `A x + s = rhs` with one logical variable per row whose
//! bounds encode the sense. Phase 1 minimizes the total bound violation of
//! the basic variables (costs are recomputed from the violation pattern each
//! iteration), phase 2 the supplied objective; a run switches phases
//! automatically. Pricing is Dantzig with a Bland fallback after a streak of
//! degenerate pivots, which guarantees termination; all ties break on the
//! lowest variable index so repeated runs pivot identically.

use std::time::Instant;

use crate::error::{Error, Result};

pub const FEAS_TOL: f64 = 1e-7;
pub const DJ_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFRESH_INTERVAL: usize = 150;
const DEGENERATE_STEP: f64 = 1e-12;
const BLAND_TRIGGER: usize = 40;

/// Where a nonbasic variable rests. Free variables rest at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NbState {
    AtLower,
    AtUpper,
    Free,
}

#[derive(Debug, Clone)]
pub struct Basis {
    pub basic: Vec<usize>,
    pub nb_state: Vec<NbState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub objective: f64,
    /// Values for every variable, structural then logical.
    pub values: Vec<f64>,
    pub basis: Basis,
    pub iterations: usize,
}

/// Static part of an LP: sparse structural columns, row right-hand sides and
/// the logical-variable bounds encoding each row's sense. Variable bounds are
/// passed to [`solve_lp`] separately so branch-and-bound can vary them
/// without rebuilding.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub ncols: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
    pub slack_lower: Vec<f64>,
    pub slack_upper: Vec<f64>,
}

impl LpProblem {
    pub fn nrows(&self) -> usize {
        self.rhs.len()
    }

    pub fn ntot(&self) -> usize {
        self.ncols + self.nrows()
    }
}

struct Simplex<'a> {
    p: &'a LpProblem,
    cost: &'a [f64],
    lower: &'a [f64],
    upper: &'a [f64],
    m: usize,
    ntot: usize,
    binv: Vec<f64>,
    basic: Vec<usize>,
    pos_in_basis: Vec<i32>,
    nb_state: Vec<NbState>,
    xb: Vec<f64>,
    alpha: Vec<f64>,
    pi: Vec<f64>,
    iterations: usize,
    pivots_since_refresh: usize,
    degenerate_streak: usize,
    bland: bool,
}

impl<'a> Simplex<'a> {
    fn var_lower(&self, v: usize) -> f64 {
        if v < self.p.ncols {
            self.lower[v]
        } else {
            self.p.slack_lower[v - self.p.ncols]
        }
    }

    fn var_upper(&self, v: usize) -> f64 {
        if v < self.p.ncols {
            self.upper[v]
        } else {
            self.p.slack_upper[v - self.p.ncols]
        }
    }

    fn var_cost(&self, v: usize) -> f64 {
        if v < self.p.ncols {
            self.cost[v]
        } else {
            0.0
        }
    }

    fn nonbasic_value(&self, v: usize) -> f64 {
        match self.nb_state[v] {
            NbState::AtLower => self.var_lower(v),
            NbState::AtUpper => self.var_upper(v),
            NbState::Free => 0.0,
        }
    }

    fn for_col(&self, v: usize, mut f: impl FnMut(usize, f64)) {
        if v < self.p.ncols {
            for &(r, a) in &self.p.cols[v] {
                f(r, a);
            }
        } else {
            f(v - self.p.ncols, 1.0);
        }
    }

    /// Sanitizes nonbasic states against the current bounds (a bound may
    /// have become infinite or the state may refer to a missing bound after
    /// a warm start).
    fn fix_nb_states(&mut self) {
        for v in 0..self.ntot {
            if self.pos_in_basis[v] >= 0 {
                continue;
            }
            let lo = self.var_lower(v);
            let hi = self.var_upper(v);
            let st = self.nb_state[v];
            self.nb_state[v] = match st {
                NbState::AtLower if lo.is_finite() => NbState::AtLower,
                NbState::AtUpper if hi.is_finite() => NbState::AtUpper,
                _ => {
                    if lo.is_finite() {
                        NbState::AtLower
                    } else if hi.is_finite() {
                        NbState::AtUpper
                    } else {
                        NbState::Free
                    }
                }
            };
        }
    }

    fn refactorize(&mut self) -> Result<()> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for (k, &v) in self.basic.iter().enumerate() {
            self.for_col(v, |r, a| b[r * m + k] = a);
        }
        // Gauss-Jordan with partial pivoting applied to [B | I]
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for k in 0..m {
            let mut piv_row = k;
            let mut piv_val = b[k * m + k].abs();
            for r in k + 1..m {
                let v = b[r * m + k].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val < 1e-12 {
                return Err(Error::NumericalFailure("singular basis".into()));
            }
            if piv_row != k {
                for c in 0..m {
                    b.swap(k * m + c, piv_row * m + c);
                    inv.swap(k * m + c, piv_row * m + c);
                }
            }
            let piv = b[k * m + k];
            for c in 0..m {
                b[k * m + c] /= piv;
                inv[k * m + c] /= piv;
            }
            for r in 0..m {
                if r == k {
                    continue;
                }
                let f = b[r * m + k];
                if f != 0.0 {
                    for c in 0..m {
                        b[r * m + c] -= f * b[k * m + c];
                        inv[r * m + c] -= f * inv[k * m + c];
                    }
                }
            }
        }
        self.binv = inv;
        self.pivots_since_refresh = 0;
        Ok(())
    }

    fn compute_xb(&mut self) {
        let m = self.m;
        let mut r_vec = self.p.rhs.to_vec();
        for v in 0..self.ntot {
            if self.pos_in_basis[v] >= 0 {
                continue;
            }
            let val = self.nonbasic_value(v);
            if val != 0.0 {
                self.for_col(v, |r, a| r_vec[r] -= a * val);
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            self.xb[r] = row.iter().zip(&r_vec).map(|(&bi, &rv)| bi * rv).sum();
        }
    }

    fn infeasible_rows(&self) -> usize {
        (0..self.m)
            .filter(|&r| {
                let v = self.basic[r];
                let x = self.xb[r];
                x < self.var_lower(v) - FEAS_TOL || x > self.var_upper(v) + FEAS_TOL
            })
            .count()
    }

    /// Duals for the current phase; in phase 1 the costs are the violation
    /// signs of the basic variables, in phase 2 the objective costs.
    fn compute_pi(&mut self, phase1: bool) {
        let m = self.m;
        self.pi.iter_mut().for_each(|x| *x = 0.0);
        for r in 0..m {
            let v = self.basic[r];
            let c = if phase1 {
                let x = self.xb[r];
                if x < self.var_lower(v) - FEAS_TOL {
                    -1.0
                } else if x > self.var_upper(v) + FEAS_TOL {
                    1.0
                } else {
                    0.0
                }
            } else {
                self.var_cost(v)
            };
            if c != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (pi, &bi) in self.pi.iter_mut().zip(row) {
                    *pi += c * bi;
                }
            }
        }
    }

    /// Picks an entering variable; returns (var, sigma) with sigma the
    /// direction of movement.
    fn price(&self, phase1: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None; // (var, sigma, score)
        for v in 0..self.ntot {
            if self.pos_in_basis[v] >= 0 {
                continue;
            }
            let lo = self.var_lower(v);
            let hi = self.var_upper(v);
            if lo == hi {
                continue;
            }
            let c = if phase1 { 0.0 } else { self.var_cost(v) };
            let mut d = c;
            self.for_col(v, |r, a| d -= a * self.pi[r]);
            let (eligible, sigma, score) = match self.nb_state[v] {
                NbState::AtLower => (d < -DJ_TOL, 1.0, -d),
                NbState::AtUpper => (d > DJ_TOL, -1.0, d),
                NbState::Free => (d.abs() > DJ_TOL, if d < 0.0 { 1.0 } else { -1.0 }, d.abs()),
            };
            if !eligible {
                continue;
            }
            if self.bland {
                return Some((v, sigma));
            }
            match best {
                Some((_, _, s)) if s >= score => {}
                _ => best = Some((v, sigma, score)),
            }
        }
        best.map(|(v, s, _)| (v, s))
    }

    fn ftran(&mut self, e: usize) {
        let m = self.m;
        self.alpha.iter_mut().for_each(|x| *x = 0.0);
        if e < self.p.ncols {
            let col = &self.p.cols[e];
            for r in 0..m {
                let row = &self.binv[r * m..(r + 1) * m];
                let mut s = 0.0;
                for &(i, a) in col {
                    s += row[i] * a;
                }
                self.alpha[r] = s;
            }
        } else {
            let i = e - self.p.ncols;
            for r in 0..m {
                self.alpha[r] = self.binv[r * m + i];
            }
        }
    }

    /// Bounded-variable ratio test. Returns (theta, blocking row or None for
    /// a bound flip, leaving-at-upper flag). In phase 1 a violated basic
    /// variable moving toward its violated bound blocks there.
    fn ratio_test(&self, e: usize, sigma: f64) -> (f64, Option<usize>, bool) {
        let span = self.var_upper(e) - self.var_lower(e);
        let mut theta = if span.is_finite() { span } else { f64::INFINITY };
        let mut leave: Option<usize> = None;
        let mut leave_at_upper = false;
        for r in 0..self.m {
            let a = self.alpha[r];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let delta = -sigma * a;
            let v = self.basic[r];
            let lo = self.var_lower(v);
            let hi = self.var_upper(v);
            let x = self.xb[r];
            let (limit, at_upper) = if x < lo - FEAS_TOL {
                if delta > 0.0 {
                    ((lo - x) / delta, false)
                } else {
                    continue;
                }
            } else if x > hi + FEAS_TOL {
                if delta < 0.0 {
                    ((hi - x) / delta, true)
                } else {
                    continue;
                }
            } else if delta > 0.0 {
                if hi.is_finite() {
                    ((hi - x) / delta, true)
                } else {
                    continue;
                }
            } else if lo.is_finite() {
                ((lo - x) / delta, false)
            } else {
                continue;
            };
            let limit = limit.max(0.0);
            let replace = match leave {
                None => limit < theta,
                Some(lr) => {
                    limit < theta - 1e-12
                        || (limit < theta + 1e-12 && self.basic[r] < self.basic[lr])
                }
            };
            if replace {
                theta = limit;
                leave = Some(r);
                leave_at_upper = at_upper;
            }
        }
        (theta, leave, leave_at_upper)
    }

    fn pivot(&mut self, e: usize, sigma: f64, theta: f64, lr: usize, at_upper: bool) {
        let m = self.m;
        for r in 0..m {
            if r != lr {
                self.xb[r] += -sigma * self.alpha[r] * theta;
            }
        }
        let entering_value = self.nonbasic_value(e) + sigma * theta;
        let leaving = self.basic[lr];
        self.pos_in_basis[leaving] = -1;
        self.nb_state[leaving] = if at_upper {
            NbState::AtUpper
        } else {
            NbState::AtLower
        };
        self.basic[lr] = e;
        self.pos_in_basis[e] = lr as i32;
        self.xb[lr] = entering_value;

        let piv = self.alpha[lr];
        let (before, rest) = self.binv.split_at_mut(lr * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for x in pivot_row.iter_mut() {
            *x /= piv;
        }
        for (r, chunk) in before.chunks_mut(m).enumerate() {
            let f = self.alpha[r];
            if f != 0.0 {
                for (x, &p) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *x -= f * p;
                }
            }
        }
        for (k, chunk) in after.chunks_mut(m).enumerate() {
            let f = self.alpha[lr + 1 + k];
            if f != 0.0 {
                for (x, &p) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *x -= f * p;
                }
            }
        }
        self.pivots_since_refresh += 1;
    }

    fn bound_flip(&mut self, e: usize, sigma: f64, span: f64) {
        for r in 0..self.m {
            self.xb[r] += -sigma * self.alpha[r] * span;
        }
        self.nb_state[e] = match self.nb_state[e] {
            NbState::AtLower => NbState::AtUpper,
            NbState::AtUpper => NbState::AtLower,
            NbState::Free => NbState::Free,
        };
    }

    fn run(&mut self, max_iter: usize, deadline: Option<Instant>) -> Result<LpStatus> {
        loop {
            self.iterations += 1;
            if self.iterations > max_iter {
                return Err(Error::NumericalFailure(
                    "simplex cycling guard exceeded".into(),
                ));
            }
            if self.iterations % 128 == 0 {
                if let Some(d) = deadline {
                    if Instant::now() >= d {
                        return Ok(LpStatus::TimeLimit);
                    }
                }
            }
            if self.pivots_since_refresh >= REFRESH_INTERVAL {
                self.refactorize()?;
                self.compute_xb();
            }
            let phase1 = self.infeasible_rows() > 0;
            self.compute_pi(phase1);
            let Some((e, sigma)) = self.price(phase1) else {
                if phase1 {
                    return Ok(LpStatus::Infeasible);
                }
                return Ok(LpStatus::Optimal);
            };
            self.ftran(e);
            let (theta, leave, at_upper) = self.ratio_test(e, sigma);
            if theta.is_infinite() {
                if phase1 {
                    return Err(Error::NumericalFailure(
                        "unblocked phase-1 direction".into(),
                    ));
                }
                return Ok(LpStatus::Unbounded);
            }
            if theta <= DEGENERATE_STEP {
                self.degenerate_streak += 1;
                if self.degenerate_streak > BLAND_TRIGGER {
                    self.bland = true;
                }
            } else {
                self.degenerate_streak = 0;
                self.bland = false;
            }
            match leave {
                Some(lr) => self.pivot(e, sigma, theta, lr, at_upper),
                None => self.bound_flip(e, sigma, theta),
            }
        }
    }

    fn values(&self) -> Vec<f64> {
        let mut vals = vec![0.0; self.ntot];
        for v in 0..self.ntot {
            if self.pos_in_basis[v] < 0 {
                vals[v] = self.nonbasic_value(v);
            }
        }
        for (r, &v) in self.basic.iter().enumerate() {
            vals[v] = self.xb[r];
        }
        vals
    }

    fn objective(&self, values: &[f64]) -> f64 {
        self.cost
            .iter()
            .zip(values)
            .map(|(&c, &x)| c * x)
            .sum()
    }
}

/// Solves `min cost . x` over `A x + s = rhs` with the given variable
/// bounds, warm starting from `warm` when provided.
pub fn solve_lp(
    p: &LpProblem,
    cost: &[f64],
    lower: &[f64],
    upper: &[f64],
    warm: Option<&Basis>,
    deadline: Option<Instant>,
) -> Result<LpOutcome> {
    let m = p.nrows();
    let ntot = p.ntot();
    debug_assert_eq!(cost.len(), p.ncols);
    debug_assert_eq!(lower.len(), p.ncols);
    debug_assert_eq!(upper.len(), p.ncols);

    let mut s = Simplex {
        p,
        cost,
        lower,
        upper,
        m,
        ntot,
        binv: Vec::new(),
        basic: Vec::new(),
        pos_in_basis: vec![-1; ntot],
        nb_state: vec![NbState::AtLower; ntot],
        xb: vec![0.0; m],
        alpha: vec![0.0; m],
        pi: vec![0.0; m],
        iterations: 0,
        pivots_since_refresh: 0,
        degenerate_streak: 0,
        bland: false,
    };

    let warm_ok = warm.is_some_and(|b| {
        b.basic.len() == m
            && b.nb_state.len() == ntot
            && b.basic.iter().all(|&v| v < ntot)
            && {
                let mut seen = vec![false; ntot];
                b.basic.iter().all(|&v| !std::mem::replace(&mut seen[v], true))
            }
    });
    if warm_ok {
        let b = warm.unwrap();
        s.basic = b.basic.clone();
        s.nb_state = b.nb_state.clone();
        for (r, &v) in s.basic.iter().enumerate() {
            s.pos_in_basis[v] = r as i32;
        }
    } else {
        s.basic = (p.ncols..ntot).collect();
        for (r, &v) in s.basic.iter().enumerate() {
            s.pos_in_basis[v] = r as i32;
        }
    }
    s.fix_nb_states();
    if s.refactorize().is_err() {
        // fall back to the all-logical basis, which is always nonsingular
        s.basic = (p.ncols..ntot).collect();
        s.pos_in_basis = vec![-1; ntot];
        for (r, &v) in s.basic.iter().enumerate() {
            s.pos_in_basis[v] = r as i32;
        }
        s.fix_nb_states();
        s.refactorize()?;
    }
    s.compute_xb();

    let max_iter = 10_000 + 60 * (m + p.ncols);
    let mut status;
    let mut polish_rounds = 0;
    loop {
        status = s.run(max_iter, deadline)?;
        if status != LpStatus::Optimal {
            break;
        }
        // refresh the inverse and re-check feasibility to absorb drift
        s.refactorize()?;
        s.compute_xb();
        if s.infeasible_rows() == 0 || polish_rounds >= 3 {
            break;
        }
        polish_rounds += 1;
    }

    let values = s.values();
    let objective = s.objective(&values);
    Ok(LpOutcome {
        status,
        objective,
        values,
        basis: Basis {
            basic: s.basic.clone(),
            nb_state: s.nb_state.clone(),
        },
        iterations: s.iterations,
    })
}
