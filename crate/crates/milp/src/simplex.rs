//! Bounded-variable revised simplex.
//!
//! Rows are turned into equalities with one logical column per row,
//! `a_i x - r_i = 0`, where the logical `r_i` carries the row bounds. The
//! basis is held as a sparse LU factorization plus product-form etas and is
//! refactorized every [`REFACTOR_INTERVAL`] pivots. Primal phase 1
//! minimizes the sum of bound violations, phase 2 is Dantzig pricing with a
//! Harris ratio test, and a dual simplex reoptimizes after bound changes
//! (branch-and-bound children). Pricing falls back to Bland's rule after a
//! run of degenerate pivots.

use std::time::Instant;

use crate::error::{ProblemError, SolveError};
use crate::factor::Factor;
use crate::problem::{Problem, RowSense};

pub const REFACTOR_INTERVAL: usize = 50;
const FEAS_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 60;
const COST_PERTURBATION: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column held at zero.
    Free,
}

/// A basis snapshot: status of every structural and logical column plus the
/// basic column of each row position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub status: Vec<VarStatus>,
    pub heads: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum RatioOutcome {
    Pivot { row: usize, theta: f64, to_upper: bool },
    Flip { theta: f64 },
    Unbounded,
}

/// Column-major copy of the constraint matrix.
#[derive(Debug, Clone)]
struct Columns {
    start: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolver {
    m: usize,
    n: usize,
    cols: Columns,
    /// Minimization costs over structural then logical columns.
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    d: Vec<f64>,
    status: Vec<VarStatus>,
    heads: Vec<usize>,
    factor: Factor,
    factor_valid: bool,
    since_refactor: usize,
    degenerate_run: usize,
    bland: bool,
    iterations: usize,
    iteration_limit: usize,
    solve_start: usize,
    deadline: Option<Instant>,
}

impl LpSolver {
    /// Builds a solver for the continuous relaxation of `problem`, starting
    /// from the all-logical basis.
    pub fn new(problem: &Problem) -> Result<Self, ProblemError> {
        problem.validate()?;
        let n = problem.num_vars();
        let m = problem.num_rows();

        let mut counts = vec![0usize; n];
        for c in &problem.constraints {
            for &(j, _) in &c.terms {
                counts[j] += 1;
            }
        }
        let mut start = vec![0usize; n + 1];
        for j in 0..n {
            start[j + 1] = start[j] + counts[j];
        }
        let nnz = start[n];
        let mut rows = vec![0usize; nnz];
        let mut vals = vec![0.0; nnz];
        let mut fill = start.clone();
        for (i, c) in problem.constraints.iter().enumerate() {
            for &(j, a) in &c.terms {
                rows[fill[j]] = i;
                vals[fill[j]] = a;
                fill[j] += 1;
            }
        }

        let mut cost = Vec::with_capacity(n + m);
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        for v in &problem.variables {
            cost.push(-v.objective);
            lower.push(v.lower);
            upper.push(v.upper);
        }
        for c in &problem.constraints {
            cost.push(0.0);
            let (lo, hi) = match c.sense {
                RowSense::Le => (f64::NEG_INFINITY, c.rhs),
                RowSense::Ge => (c.rhs, f64::INFINITY),
                RowSense::Eq => (c.rhs, c.rhs),
            };
            lower.push(lo);
            upper.push(hi);
        }

        let mut status = vec![VarStatus::AtLower; n + m];
        for s in status.iter_mut().skip(n) {
            *s = VarStatus::Basic;
        }
        let heads: Vec<usize> = (n..n + m).collect();

        let mut solver = Self {
            m,
            n,
            cols: Columns { start, rows, vals },
            cost,
            lower,
            upper,
            x: vec![0.0; n + m],
            d: vec![0.0; n + m],
            status,
            heads,
            factor: Factor::new(m),
            factor_valid: false,
            since_refactor: 0,
            degenerate_run: 0,
            bland: false,
            iterations: 0,
            iteration_limit: 200_000 + 50 * (n + m),
            solve_start: 0,
            deadline: None,
        };
        solver.normalize_nonbasic();
        Ok(solver)
    }

    pub fn num_structural(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Caps the pivots a single [`solve`](Self::solve) call may take.
    pub fn set_iteration_limit(&mut self, limit: usize) {
        self.iteration_limit = limit;
    }

    pub fn iteration_limit(&self) -> usize {
        self.iteration_limit
    }

    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    /// Changes the bounds of structural column `j`. The current basis is kept;
    /// the next [`solve`](Self::solve) reoptimizes from it.
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        assert!(j < self.n, "bounds can only be set on structural columns");
        self.lower[j] = lower;
        self.upper[j] = upper;
        if self.status[j] != VarStatus::Basic {
            self.place_nonbasic(j);
        }
    }

    pub fn basis(&self) -> Basis {
        Basis {
            status: self.status.clone(),
            heads: self.heads.clone(),
        }
    }

    /// Installs a basis snapshot taken from a solver built on the same problem.
    pub fn set_basis(&mut self, basis: &Basis) {
        if basis.heads == self.heads && basis.status == self.status {
            return;
        }
        assert_eq!(basis.status.len(), self.n + self.m);
        assert_eq!(basis.heads.len(), self.m);
        self.status.clone_from(&basis.status);
        self.heads.clone_from(&basis.heads);
        self.factor_valid = false;
        self.normalize_nonbasic();
    }

    /// Structural column values.
    pub fn primal(&self) -> &[f64] {
        &self.x[..self.n]
    }

    /// Objective value in the maximization sense of the source problem.
    pub fn objective(&self) -> f64 {
        -(0..self.n).map(|j| self.cost[j] * self.x[j]).sum::<f64>()
    }

    /// Reduced costs in the maximization sense, structural columns only.
    pub fn reduced_costs(&self) -> Vec<f64> {
        self.d[..self.n].iter().map(|v| -v).collect()
    }

    /// Row duals in the maximization sense: `y` such that the reduced cost of
    /// column j is `c_j - y' a_j`.
    pub fn row_duals(&self) -> Vec<f64> {
        self.duals_for(&self.cost).iter().map(|v| -v).collect()
    }

    /// Solves from the current basis.
    pub fn solve(&mut self) -> Result<LpStatus, SolveError> {
        self.solve_start = self.iterations;
        self.normalize_nonbasic();
        if !self.factor_valid {
            self.refactor()?;
        }
        self.compute_basic_values();
        self.compute_reduced_costs();
        self.bland = false;
        self.degenerate_run = 0;

        for _ in 0..4 {
            if self.primal_infeasible() {
                if self.dual_feasible() {
                    if self.dual_simplex()? == LpStatus::Infeasible {
                        return Ok(LpStatus::Infeasible);
                    }
                } else if self.primal_phase(Phase::One)? == LpStatus::Infeasible {
                    return Ok(LpStatus::Infeasible);
                }
            }
            self.compute_reduced_costs();
            if self.primal_phase(Phase::Two)? == LpStatus::Unbounded {
                return Ok(LpStatus::Unbounded);
            }
            // Rebuild from scratch and confirm optimality survived roundoff.
            self.refactor()?;
            self.compute_basic_values();
            self.compute_reduced_costs();
            if !self.primal_infeasible() && self.dual_feasible() {
                return Ok(LpStatus::Optimal);
            }
        }
        Ok(LpStatus::Optimal)
    }

    // ------------------------------------------------------------------
    // Column access

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.cols.start[j]..self.cols.start[j + 1] {
                f(self.cols.rows[k], self.cols.vals[k]);
            }
        } else {
            f(j - self.n, -1.0);
        }
    }

    fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.n {
            let mut s = 0.0;
            for k in self.cols.start[j]..self.cols.start[j + 1] {
                s += v[self.cols.rows[k]] * self.cols.vals[k];
            }
            s
        } else {
            -v[j - self.n]
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    // ------------------------------------------------------------------
    // Nonbasic placement

    fn place_nonbasic(&mut self, j: usize) {
        let (lo, hi) = (self.lower[j], self.upper[j]);
        let st = match self.status[j] {
            VarStatus::AtUpper if hi.is_finite() => VarStatus::AtUpper,
            VarStatus::AtLower if lo.is_finite() => VarStatus::AtLower,
            _ if lo.is_finite() => VarStatus::AtLower,
            _ if hi.is_finite() => VarStatus::AtUpper,
            _ => VarStatus::Free,
        };
        self.status[j] = st;
        self.x[j] = match st {
            VarStatus::AtLower => lo,
            VarStatus::AtUpper => hi,
            _ => 0.0,
        };
    }

    fn normalize_nonbasic(&mut self) {
        for j in 0..self.n + self.m {
            if self.status[j] != VarStatus::Basic {
                self.place_nonbasic(j);
            }
        }
    }

    // ------------------------------------------------------------------
    // Factorization

    /// Factorizes the current basis. Columns that turn out dependent are
    /// swapped for the logicals of the rows left unpivoted.
    fn refactor(&mut self) -> Result<(), SolveError> {
        for _ in 0..3 {
            let columns: Vec<Vec<(usize, f64)>> = self
                .heads
                .iter()
                .map(|&j| {
                    let mut c = Vec::new();
                    self.for_col(j, |i, v| c.push((i, v)));
                    c
                })
                .collect();
            match self.factor.factorize(&columns) {
                Ok(()) => {
                    self.factor_valid = true;
                    self.since_refactor = 0;
                    return Ok(());
                }
                Err(bad) => {
                    self.factor_valid = false;
                    for (&pos, &row) in bad.positions.iter().zip(&bad.rows) {
                        let out = self.heads[pos];
                        let logical = self.n + row;
                        self.status[out] = VarStatus::AtLower;
                        self.place_nonbasic(out);
                        self.status[logical] = VarStatus::Basic;
                        self.heads[pos] = logical;
                    }
                    if bad.positions.len() != bad.rows.len() {
                        return Err(SolveError::SingularBasis {
                            position: bad.positions.first().copied().unwrap_or(0),
                            pivot: bad.pivot,
                        });
                    }
                }
            }
        }
        Err(SolveError::SingularBasis {
            position: 0,
            pivot: 0.0,
        })
    }

    /// `B^{-1} a_j` by basis position.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.for_col(j, |i, v| out[i] += v);
        self.factor.ftran(&mut out);
        out
    }

    /// Row `r` of `B^{-1}`.
    fn binv_row(&self, r: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.m];
        e[r] = 1.0;
        self.factor.btran(&mut e);
        e
    }

    /// `alpha_r = e_r' B^{-1} A` over every column (zeros for basic ones).
    fn pivot_row(&self, r: usize) -> Vec<f64> {
        let rho = self.binv_row(r);
        let mut row = vec![0.0; self.n + self.m];
        for j in 0..self.n + self.m {
            if self.status[j] != VarStatus::Basic {
                row[j] = self.col_dot(j, &rho);
            }
        }
        row
    }

    fn update_inverse(&mut self, r: usize, alpha: &[f64]) {
        self.factor.update(r, alpha);
    }

    // ------------------------------------------------------------------
    // Primal / dual values

    fn compute_basic_values(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.for_col(j, |i, v| rhs[i] -= v * xj);
            }
        }
        self.factor.ftran(&mut rhs);
        for (k, v) in rhs.into_iter().enumerate() {
            self.x[self.heads[k]] = v;
        }
    }

    fn duals_for(&self, cost: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.heads.iter().map(|&j| cost[j]).collect();
        self.factor.btran(&mut y);
        y
    }

    fn compute_reduced_costs(&mut self) {
        let y = self.duals_for(&self.cost);
        for j in 0..self.n + self.m {
            self.d[j] = if self.status[j] == VarStatus::Basic {
                0.0
            } else {
                self.cost[j] - self.col_dot(j, &y)
            };
        }
    }

    fn tol(bound: f64) -> f64 {
        FEAS_TOL * (1.0 + bound.abs())
    }

    /// Signed bound violation of column j: negative below lower, positive above upper.
    fn violation(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lower[j] - Self::tol(self.lower[j]) {
            v - self.lower[j]
        } else if v > self.upper[j] + Self::tol(self.upper[j]) {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn primal_infeasible(&self) -> bool {
        self.heads.iter().any(|&j| self.violation(j) != 0.0)
    }

    fn dual_feasible(&self) -> bool {
        (0..self.n + self.m).all(|j| self.dual_violation(j) <= DUAL_TOL)
    }

    fn dual_violation(&self, j: usize) -> f64 {
        if self.is_fixed(j) {
            return 0.0;
        }
        match self.status[j] {
            VarStatus::Basic => 0.0,
            VarStatus::AtLower => (-self.d[j]).max(0.0),
            VarStatus::AtUpper => self.d[j].max(0.0),
            VarStatus::Free => self.d[j].abs(),
        }
    }

    fn check_limits(&self) -> Result<(), SolveError> {
        if self.iterations - self.solve_start >= self.iteration_limit {
            return Err(SolveError::IterationLimit(self.iteration_limit));
        }
        if self.iterations % 32 == 0 {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    return Err(SolveError::TimeLimit);
                }
            }
        }
        Ok(())
    }

    fn note_step(&mut self, theta: f64) {
        if theta.abs() <= 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run > DEGENERATE_RUN {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
    }

    fn after_pivot(&mut self) -> Result<(), SolveError> {
        self.iterations += 1;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_INTERVAL {
            self.refactor()?;
            self.compute_basic_values();
            self.compute_reduced_costs();
        }
        Ok(())
    }

    // ------------------------------------------------------------------
    // Primal simplex

    fn phase_one_costs(&self) -> Option<Vec<f64>> {
        let mut c = vec![0.0; self.n + self.m];
        let mut any = false;
        for &j in &self.heads {
            let v = self.violation(j);
            if v < 0.0 {
                c[j] = -1.0;
                any = true;
            } else if v > 0.0 {
                c[j] = 1.0;
                any = true;
            }
        }
        any.then_some(c)
    }

    fn choose_entering(&self, d: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n + self.m {
            if self.is_fixed(j) {
                continue;
            }
            let (score, dir) = match self.status[j] {
                VarStatus::Basic => continue,
                VarStatus::AtLower if d[j] < -DUAL_TOL => (-d[j], 1.0),
                VarStatus::AtUpper if d[j] > DUAL_TOL => (d[j], -1.0),
                VarStatus::Free if d[j].abs() > DUAL_TOL => (d[j].abs(), -d[j].signum()),
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, s, _)| score > s) {
                best = Some((j, score, dir));
            }
        }
        best.map(|(j, _, dir)| (j, dir))
    }

    fn primal_ratio(&self, q: usize, dir: f64, alpha: &[f64], phase: Phase) -> RatioOutcome {
        // Candidate rows: (row, distance, |rate|, to_upper)
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        for (k, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.heads[k];
            let rate = -dir * a;
            let v = self.x[j];
            let (lo, hi) = (self.lower[j], self.upper[j]);
            let below = v < lo - Self::tol(lo);
            let above = v > hi + Self::tol(hi);
            if phase == Phase::One && (below || above) {
                if below && rate > 0.0 {
                    cands.push((k, lo - v, rate, false));
                } else if above && rate < 0.0 {
                    cands.push((k, v - hi, -rate, true));
                }
                continue;
            }
            if rate < 0.0 && lo.is_finite() {
                cands.push((k, (v - lo).max(0.0), -rate, false));
            } else if rate > 0.0 && hi.is_finite() {
                cands.push((k, (hi - v).max(0.0), rate, true));
            }
        }
        let range = self.upper[q] - self.lower[q];

        if cands.is_empty() {
            return if range.is_finite() {
                RatioOutcome::Flip { theta: range }
            } else {
                RatioOutcome::Unbounded
            };
        }

        let pick = if self.bland {
            let min_ratio = cands
                .iter()
                .map(|&(_, dist, rate, _)| dist / rate)
                .fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|&&(_, dist, rate, _)| dist / rate <= min_ratio + 1e-12)
                .min_by_key(|&&(k, ..)| self.heads[k])
                .copied()
        } else {
            let theta_max = cands
                .iter()
                .map(|&(k, dist, rate, to_upper)| {
                    let j = self.heads[k];
                    let b = if to_upper { self.upper[j] } else { self.lower[j] };
                    (dist + Self::tol(b)) / rate
                })
                .fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|&&(_, dist, rate, _)| dist / rate <= theta_max)
                .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0)))
                .copied()
        };
        let (row, dist, rate, to_upper) = pick.expect("non-empty candidate set");
        let theta = (dist / rate).max(0.0);
        if range.is_finite() && range <= theta {
            return RatioOutcome::Flip { theta: range };
        }
        RatioOutcome::Pivot {
            row,
            theta,
            to_upper,
        }
    }

    fn primal_phase(&mut self, phase: Phase) -> Result<LpStatus, SolveError> {
        loop {
            self.check_limits()?;
            let phase_costs;
            let d: &[f64] = match phase {
                Phase::Two => &self.d,
                Phase::One => {
                    let Some(c1) = self.phase_one_costs() else {
                        return Ok(LpStatus::Optimal);
                    };
                    let y = self.duals_for(&c1);
                    let mut d1 = vec![0.0; self.n + self.m];
                    for (j, dj) in d1.iter_mut().enumerate() {
                        if self.status[j] != VarStatus::Basic {
                            *dj = -self.col_dot(j, &y);
                        }
                    }
                    phase_costs = d1;
                    &phase_costs
                }
            };
            let Some((q, dir)) = self.choose_entering(d) else {
                return Ok(match phase {
                    Phase::One => LpStatus::Infeasible,
                    Phase::Two => LpStatus::Optimal,
                });
            };
            let alpha = self.ftran(q);
            match self.primal_ratio(q, dir, &alpha, phase) {
                RatioOutcome::Unbounded => {
                    debug_assert_eq!(phase, Phase::Two);
                    return Ok(LpStatus::Unbounded);
                }
                RatioOutcome::Flip { theta } => {
                    self.shift(q, dir * theta, &alpha);
                    self.status[q] = if dir > 0.0 {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                    self.note_step(theta);
                    self.iterations += 1;
                }
                RatioOutcome::Pivot {
                    row,
                    theta,
                    to_upper,
                } => {
                    let pivot_row = if phase == Phase::Two {
                        Some(self.pivot_row(row))
                    } else {
                        None
                    };
                    self.shift(q, dir * theta, &alpha);
                    let leaving = self.heads[row];
                    self.x[leaving] = if to_upper {
                        self.upper[leaving]
                    } else {
                        self.lower[leaving]
                    };
                    if let Some(prow) = pivot_row {
                        self.update_reduced_costs(q, leaving, alpha[row], &prow);
                    }
                    self.status[leaving] = if to_upper {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.status[q] = VarStatus::Basic;
                    self.heads[row] = q;
                    self.update_inverse(row, &alpha);
                    self.note_step(theta);
                    self.after_pivot()?;
                }
            }
        }
    }

    /// Moves entering column `q` by `delta`, adjusting basic values.
    fn shift(&mut self, q: usize, delta: f64, alpha: &[f64]) {
        if delta == 0.0 {
            return;
        }
        for (k, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                self.x[self.heads[k]] -= delta * a;
            }
        }
        self.x[q] += delta;
    }

    fn update_reduced_costs(&mut self, q: usize, leaving: usize, alpha_rq: f64, prow: &[f64]) {
        let ratio = self.d[q] / alpha_rq;
        for j in 0..self.n + self.m {
            if self.status[j] != VarStatus::Basic && prow[j] != 0.0 {
                self.d[j] -= ratio * prow[j];
            }
        }
        self.d[leaving] = -ratio;
        self.d[q] = 0.0;
    }

    // ------------------------------------------------------------------
    // Dual simplex

    /// Dual simplex on slightly perturbed costs, which breaks the dual
    /// degeneracy of flow models. The caller finishes with primal phase 2 on
    /// the true costs.
    fn dual_simplex(&mut self) -> Result<LpStatus, SolveError> {
        let original = self.cost.clone();
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic || self.is_fixed(j) {
                continue;
            }
            let delta = COST_PERTURBATION * (1.0 + original[j].abs()) * (1.0 + unit_hash(j));
            match self.status[j] {
                VarStatus::AtLower => self.cost[j] += delta,
                VarStatus::AtUpper => self.cost[j] -= delta,
                _ => {}
            }
        }
        self.compute_reduced_costs();
        let result = self.dual_loop();
        self.cost = original;
        self.compute_reduced_costs();
        result
    }

    fn dual_loop(&mut self) -> Result<LpStatus, SolveError> {
        // Entering columns whose row and column disagree even on a fresh factor.
        let mut banned: Vec<usize> = Vec::new();
        loop {
            self.check_limits()?;
            // Leaving row: largest bound violation (Bland: lowest column index).
            let mut leave: Option<(usize, f64)> = None;
            for (k, &j) in self.heads.iter().enumerate() {
                let v = self.violation(j);
                if v == 0.0 {
                    continue;
                }
                match leave {
                    None => leave = Some((k, v)),
                    Some((kb, vb)) => {
                        let better = if self.bland {
                            j < self.heads[kb]
                        } else {
                            v.abs() > vb.abs()
                        };
                        if better {
                            leave = Some((k, v));
                        }
                    }
                }
            }
            let Some((r, viol)) = leave else {
                return Ok(LpStatus::Optimal);
            };
            let p = self.heads[r];
            let increase = viol < 0.0;
            let prow = self.pivot_row(r);

            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for j in 0..self.n + self.m {
                let a = prow[j];
                if self.status[j] == VarStatus::Basic
                    || self.is_fixed(j)
                    || a.abs() <= PIVOT_TOL
                    || banned.contains(&j)
                {
                    continue;
                }
                let eligible = match self.status[j] {
                    VarStatus::AtLower => (a < 0.0) == increase,
                    VarStatus::AtUpper => (a > 0.0) == increase,
                    VarStatus::Free => true,
                    VarStatus::Basic => false,
                };
                if !eligible {
                    continue;
                }
                let dj = match self.status[j] {
                    VarStatus::AtLower => self.d[j].max(0.0),
                    VarStatus::AtUpper => (-self.d[j]).max(0.0),
                    _ => self.d[j].abs(),
                };
                cands.push((j, dj, a.abs()));
            }
            if cands.is_empty() {
                if !banned.is_empty() {
                    return Err(SolveError::SingularBasis {
                        position: r,
                        pivot: 0.0,
                    });
                }
                return Ok(LpStatus::Infeasible);
            }
            let q = if self.bland {
                let min_ratio = cands
                    .iter()
                    .map(|&(_, dj, a)| dj / a)
                    .fold(f64::INFINITY, f64::min);
                cands
                    .iter()
                    .filter(|&&(_, dj, a)| dj / a <= min_ratio + 1e-12)
                    .map(|&(j, ..)| j)
                    .min()
                    .expect("non-empty")
            } else {
                let theta_max = cands
                    .iter()
                    .map(|&(_, dj, a)| (dj + DUAL_TOL) / a)
                    .fold(f64::INFINITY, f64::min);
                cands
                    .iter()
                    .filter(|&&(_, dj, a)| dj / a <= theta_max)
                    .max_by(|x, y| x.2.total_cmp(&y.2).then(y.0.cmp(&x.0)))
                    .map(|&(j, ..)| j)
                    .expect("non-empty")
            };

            let alpha = self.ftran(q);
            let alpha_rq = alpha[r];
            if alpha_rq.abs() <= PIVOT_TOL
                || (alpha_rq - prow[q]).abs() > 1e-7 * (1.0 + alpha_rq.abs())
            {
                // Row and column disagree: the inverse has drifted.
                if self.since_refactor == 0 {
                    banned.push(q);
                    continue;
                }
                self.refactor()?;
                self.compute_basic_values();
                self.compute_reduced_costs();
                self.iterations += 1;
                continue;
            }
            let target = if increase { self.lower[p] } else { self.upper[p] };
            let theta = (self.x[p] - target) / alpha_rq;
            self.shift(q, theta, &alpha);
            self.x[p] = target;
            self.update_reduced_costs(q, p, alpha_rq, &prow);
            self.status[p] = if increase {
                VarStatus::AtLower
            } else {
                VarStatus::AtUpper
            };
            self.status[q] = VarStatus::Basic;
            self.heads[r] = q;
            self.update_inverse(r, &alpha);
            self.note_step(self.d[p]);
            self.after_pivot()?;
            banned.clear();
        }
    }
}

/// Deterministic value in [0, 1) for column `j`.
fn unit_hash(j: usize) -> f64 {
    let mut z = (j as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}
