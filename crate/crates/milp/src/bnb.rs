//! LP-based branch-and-bound for maximization MILPs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::error::SolveError;
use crate::problem::{Domain, Problem};
use crate::simplex::{Basis, LpSolver, LpStatus};

/// Minimum pivot budget for one rounding-heuristic LP.
const HEURISTIC_PIVOTS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branching {
    MostFractional,
    PseudoCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSelection {
    BestBound,
    DepthFirst,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub relative_gap: f64,
    pub absolute_gap: f64,
    pub node_limit: usize,
    pub time_limit_s: Option<f64>,
    pub branching: Branching,
    pub node_selection: NodeSelection,
    pub integer_tolerance: f64,
    /// Print `NODE .. BOUND .. INCUMBENT .. GAP ..` lines to stderr.
    pub verbose: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            relative_gap: 1e-6,
            absolute_gap: 1e-9,
            node_limit: 100_000,
            time_limit_s: None,
            branching: Branching::MostFractional,
            node_selection: NodeSelection::BestBound,
            integer_tolerance: 1e-6,
            verbose: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.relative_gap >= 0.0 && self.absolute_gap >= 0.0) {
            return Err("gaps must be non-negative".into());
        }
        if self.node_limit == 0 {
            return Err("node limit must be positive".into());
        }
        if let Some(t) = self.time_limit_s {
            if !(t > 0.0) {
                return Err("time limit must be positive".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveStatus {
    Optimal,
    /// A limit stopped the search with an incumbent `gap` away from the bound.
    Feasible { gap: f64 },
    Infeasible,
    Unbounded,
    /// A limit stopped the search before any integral point was found.
    NoSolution,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Incumbent; empty when no feasible point is known.
    pub x: Vec<f64>,
    pub objective: f64,
    pub best_bound: f64,
    pub root_bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub wall_time: Duration,
}

impl SolveResult {
    pub fn has_solution(&self) -> bool {
        !self.x.is_empty()
    }
}

/// Relative gap as `(bound - incumbent) / max(1, |incumbent|)`.
pub fn relative_gap(bound: f64, incumbent: f64) -> f64 {
    ((bound - incumbent) / incumbent.abs().max(1.0)).max(0.0)
}

/// Solves the continuous relaxation of `problem`.
pub fn solve_lp(problem: &Problem) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let mut lp = LpSolver::new(problem)?;
    let status = lp.solve()?;
    let (status, x, obj) = match status {
        LpStatus::Optimal => (SolveStatus::Optimal, lp.primal().to_vec(), lp.objective()),
        LpStatus::Infeasible => (SolveStatus::Infeasible, Vec::new(), f64::NEG_INFINITY),
        LpStatus::Unbounded => (SolveStatus::Unbounded, Vec::new(), f64::INFINITY),
    };
    Ok(SolveResult {
        status,
        x,
        objective: obj,
        best_bound: obj,
        root_bound: obj,
        gap: 0.0,
        nodes: 1,
        lp_iterations: lp.iterations(),
        wall_time: start.elapsed(),
    })
}

#[derive(Debug)]
struct Node {
    id: usize,
    bound: f64,
    depth: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    basis: Basis,
    /// Branching record for pseudocost updates: (column, went_up, fractional distance, parent objective).
    origin: Option<(usize, bool, f64, f64)>,
}

struct Ranked(Node, NodeSelection);

fn bound_key(bound: f64) -> f64 {
    if !bound.is_finite() {
        return bound;
    }
    let scale = 1e-9 * bound.abs().max(1.0);
    let step = 2f64.powi(scale.log2().ceil() as i32);
    (bound / step).floor() * step
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.1 {
            // Bounds that agree to 1e-9 count as tied; ties go to the
            // deeper node, which reaches integer points sooner on flat
            // objectives.
            NodeSelection::BestBound => bound_key(self.0.bound)
                .total_cmp(&bound_key(other.0.bound))
                .then(self.0.depth.cmp(&other.0.depth))
                .then(other.0.id.cmp(&self.0.id)),
            NodeSelection::DepthFirst => self
                .0
                .depth
                .cmp(&other.0.depth)
                .then(self.0.id.cmp(&other.0.id)),
        }
    }
}

#[derive(Default, Clone, Copy)]
struct PseudoCost {
    up_sum: f64,
    up_n: u32,
    down_sum: f64,
    down_n: u32,
}

struct Search<'a> {
    problem: &'a Problem,
    opts: &'a SolveOptions,
    int_cols: Vec<usize>,
    lp: LpSolver,
    incumbent: Option<(Vec<f64>, f64)>,
    pseudo: Vec<PseudoCost>,
    next_id: usize,
    deadline: Option<Instant>,
}

impl<'a> Search<'a> {
    fn tolerance(&self) -> f64 {
        match &self.incumbent {
            Some((_, z)) => self.opts.absolute_gap.max(self.opts.relative_gap * z.abs().max(1.0)),
            None => self.opts.absolute_gap,
        }
    }

    fn prunable(&self, bound: f64) -> bool {
        match &self.incumbent {
            Some((_, z)) => bound <= z + self.tolerance(),
            None => false,
        }
    }

    /// Fractional integer columns. Binaries come first: when any binary is
    /// fractional, only binaries are offered for branching.
    fn fractional(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let all: Vec<(usize, f64)> = self
            .int_cols
            .iter()
            .filter_map(|&j| {
                let f = x[j] - x[j].floor();
                let dist = f.min(1.0 - f);
                (dist > self.opts.integer_tolerance).then_some((j, f))
            })
            .collect();
        let binary: Vec<(usize, f64)> = all
            .iter()
            .copied()
            .filter(|&(j, _)| self.problem.variables[j].domain == Domain::Binary)
            .collect();
        if binary.is_empty() {
            all
        } else {
            binary
        }
    }

    fn offer(&mut self, x: &[f64], obj: f64) -> bool {
        if self.incumbent.as_ref().is_some_and(|(_, z)| obj <= *z) {
            return false;
        }
        let mut sol = x.to_vec();
        for &j in &self.int_cols {
            sol[j] = sol[j].round();
        }
        self.incumbent = Some((sol, obj));
        true
    }

    fn choose_branch(&self, frac: &[(usize, f64)]) -> (usize, f64) {
        match self.opts.branching {
            Branching::MostFractional => {
                let mut best = frac[0];
                let mut best_score = (best.1 - 0.5).abs();
                for &(j, f) in &frac[1..] {
                    let score = (f - 0.5).abs();
                    if score < best_score - 1e-12 {
                        best = (j, f);
                        best_score = score;
                    }
                }
                best
            }
            Branching::PseudoCost => {
                let mean = |s: f64, n: u32, fallback: f64| if n > 0 { s / n as f64 } else { fallback };
                let (mut gu, mut nu, mut gd, mut nd) = (0.0, 0u32, 0.0, 0u32);
                for pc in &self.pseudo {
                    gu += pc.up_sum;
                    nu += pc.up_n;
                    gd += pc.down_sum;
                    nd += pc.down_n;
                }
                let avg_up = mean(gu, nu, 1.0);
                let avg_down = mean(gd, nd, 1.0);
                let mut best = frac[0];
                let mut best_score = f64::NEG_INFINITY;
                for &(j, f) in frac {
                    let pc = self.pseudo[j];
                    let up = mean(pc.up_sum, pc.up_n, avg_up) * (1.0 - f);
                    let down = mean(pc.down_sum, pc.down_n, avg_down) * f;
                    let score = up.max(1e-6) * down.max(1e-6);
                    if score > best_score + 1e-12 {
                        best = (j, f);
                        best_score = score;
                    }
                }
                best
            }
        }
    }

    fn load_bounds(&mut self, lower: &[f64], upper: &[f64]) {
        for j in 0..lower.len() {
            if self.lp.bounds(j) != (lower[j], upper[j]) {
                self.lp.set_bounds(j, lower[j], upper[j]);
            }
        }
    }

    /// Solves the LP at the current bounds, cold-starting once on numerical trouble.
    fn solve_node_lp(&mut self) -> Result<LpStatus, SolveError> {
        match self.lp.solve() {
            Ok(s) => Ok(s),
            Err(SolveError::SingularBasis { .. }) => {
                let mut fresh = LpSolver::new(self.problem)?;
                fresh.set_deadline(self.deadline);
                fresh.set_iteration_limit(self.lp.iteration_limit());
                for j in 0..self.problem.num_vars() {
                    let (lo, hi) = self.lp.bounds(j);
                    fresh.set_bounds(j, lo, hi);
                }
                self.lp = fresh;
                self.lp.solve()
            }
            Err(e) => Err(e),
        }
    }

    /// Rounds the integer part of `x` three ways, fixes it, and re-solves the
    /// continuous remainder. Leaves the LP bounds as `lower`/`upper`.
    /// Each attempt gets a small pivot budget; running out just skips it.
    fn rounding_heuristic(&mut self, x: &[f64], lower: &[f64], upper: &[f64], root: bool) -> Result<(), SolveError> {
        let basis = self.lp.basis();
        let full_limit = self.lp.iteration_limit();
        let rows = self.lp.num_rows();
        self.lp.set_iteration_limit(HEURISTIC_PIVOTS.max(if root { 4 * rows } else { rows }));
        let roundings: [fn(f64) -> f64; 3] = [f64::floor, f64::round, f64::ceil];
        for round in roundings {
            for &j in &self.int_cols {
                let v = round(x[j]).clamp(lower[j], upper[j]);
                let v = if v < lower[j] - 1e-9 || v > upper[j] + 1e-9 { lower[j] } else { v };
                self.lp.set_bounds(j, v, v);
            }
            let status = match self.solve_node_lp() {
                Ok(s) => Some(s),
                Err(SolveError::IterationLimit(_) | SolveError::TimeLimit | SolveError::SingularBasis { .. }) => None,
                Err(e) => {
                    self.lp.set_iteration_limit(full_limit);
                    return Err(e);
                }
            };
            if status == Some(LpStatus::Optimal) {
                let obj = self.lp.objective();
                let xs = self.lp.primal().to_vec();
                if self.problem.max_violation(&xs) <= 1e-6 * (1.0 + xs.iter().fold(0.0f64, |a, v| a.max(v.abs()))) {
                    self.offer(&xs, obj);
                }
            }
            for &j in &self.int_cols {
                self.lp.set_bounds(j, lower[j], upper[j]);
            }
        }
        self.lp.set_iteration_limit(full_limit);
        self.lp.set_basis(&basis);
        Ok(())
    }
}

/// Branch-and-bound over the integer columns of `problem`.
pub fn solve_milp(problem: &Problem, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let deadline = opts
        .time_limit_s
        .map(|t| start + Duration::from_secs_f64(t));
    let mut lp = LpSolver::new(problem)?;
    lp.set_deadline(deadline);
    let int_cols = problem.integer_columns();
    let n = problem.num_vars();

    let mut search = Search {
        problem,
        opts,
        int_cols,
        lp,
        incumbent: None,
        pseudo: vec![PseudoCost::default(); n],
        next_id: 1,
        deadline,
    };

    let root_lower: Vec<f64> = problem.variables.iter().map(|v| v.lower).collect();
    let root_upper: Vec<f64> = problem.variables.iter().map(|v| v.upper).collect();
    // Integer columns get integral bounds.
    let mut root_lower = root_lower;
    let mut root_upper = root_upper;
    for &j in &search.int_cols {
        root_lower[j] = (root_lower[j] - opts.integer_tolerance).ceil();
        root_upper[j] = (root_upper[j] + opts.integer_tolerance).floor();
    }
    let finish = |search: &Search, status: SolveStatus, bound: f64, root: f64, nodes: usize| {
        let (x, obj) = match &search.incumbent {
            Some((x, z)) => (x.clone(), *z),
            None => (Vec::new(), f64::NEG_INFINITY),
        };
        let gap = if x.is_empty() { f64::INFINITY } else { relative_gap(bound, obj) };
        SolveResult {
            status,
            x,
            objective: obj,
            best_bound: bound,
            root_bound: root,
            gap,
            nodes,
            lp_iterations: search.lp.iterations(),
            wall_time: start.elapsed(),
        }
    };

    if root_lower.iter().zip(&root_upper).any(|(l, u)| l > u) {
        return Ok(finish(&search, SolveStatus::Infeasible, f64::NEG_INFINITY, f64::NEG_INFINITY, 0));
    }
    search.load_bounds(&root_lower, &root_upper);
    let root_status = match search.solve_node_lp() {
        Ok(s) => s,
        Err(SolveError::IterationLimit(_) | SolveError::TimeLimit) => {
            return Ok(finish(&search, SolveStatus::NoSolution, f64::INFINITY, f64::INFINITY, 1));
        }
        Err(e) => return Err(e),
    };
    match root_status {
        LpStatus::Infeasible => {
            return Ok(finish(&search, SolveStatus::Infeasible, f64::NEG_INFINITY, f64::NEG_INFINITY, 1))
        }
        LpStatus::Unbounded => {
            return Ok(finish(&search, SolveStatus::Unbounded, f64::INFINITY, f64::INFINITY, 1))
        }
        LpStatus::Optimal => {}
    }
    let root_bound = search.lp.objective();

    let mut heap: BinaryHeap<Ranked> = BinaryHeap::new();
    let mut nodes = 0usize;
    let mut limit_hit = false;

    // The node currently loaded in the LP (root first), processed without a heap round-trip.
    let mut current: Option<(Node, bool)> = Some((
        Node {
            id: 0,
            bound: root_bound,
            depth: 0,
            lower: root_lower,
            upper: root_upper,
            basis: search.lp.basis(),
            origin: None,
        },
        true,
    ));

    loop {
        let (node, already_solved) = match current.take() {
            Some(c) => c,
            None => match heap.pop() {
                Some(Ranked(node, _)) => (node, false),
                None => break,
            },
        };
        if search.prunable(node.bound) {
            continue;
        }
        if nodes >= opts.node_limit || deadline.is_some_and(|d| Instant::now() >= d) {
            heap.push(Ranked(node, opts.node_selection));
            limit_hit = true;
            break;
        }
        nodes += 1;

        if !already_solved {
            search.lp.set_basis(&node.basis);
            search.load_bounds(&node.lower, &node.upper);
            match search.solve_node_lp() {
                Ok(LpStatus::Optimal) => {}
                Ok(LpStatus::Infeasible) => continue,
                Ok(LpStatus::Unbounded) => continue,
                Err(SolveError::IterationLimit(_) | SolveError::TimeLimit) => {
                    heap.push(Ranked(node, opts.node_selection));
                    limit_hit = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let obj = search.lp.objective();
        let x = search.lp.primal().to_vec();

        if let Some((j, up, dist, parent_obj)) = node.origin {
            let per_unit = ((parent_obj - obj).max(0.0)) / dist.max(1e-9);
            let pc = &mut search.pseudo[j];
            if up {
                pc.up_sum += per_unit;
                pc.up_n += 1;
            } else {
                pc.down_sum += per_unit;
                pc.down_n += 1;
            }
        }

        if search.prunable(obj) {
            continue;
        }
        let frac = search.fractional(&x);
        if frac.is_empty() {
            if search.offer(&x, obj) && opts.verbose {
                log_line(nodes, best_open_bound(&heap, obj), obj);
            }
            continue;
        }
        if node.depth == 0 || nodes % 64 == 0 {
            search.rounding_heuristic(&x, &node.lower, &node.upper, node.depth == 0)?;
            if search.prunable(obj) {
                continue;
            }
        }

        let (j, f) = search.choose_branch(&frac);
        let basis = search.lp.basis();
        let mut down = Node {
            id: search.next_id,
            bound: obj,
            depth: node.depth + 1,
            lower: node.lower.clone(),
            upper: node.upper.clone(),
            basis: basis.clone(),
            origin: Some((j, false, f, obj)),
        };
        down.upper[j] = x[j].floor();
        let mut up = Node {
            id: search.next_id + 1,
            bound: obj,
            depth: node.depth + 1,
            lower: node.lower,
            upper: node.upper,
            basis,
            origin: Some((j, true, 1.0 - f, obj)),
        };
        up.lower[j] = x[j].ceil();
        search.next_id += 2;

        if opts.verbose && nodes % 100 == 0 {
            let inc = search.incumbent.as_ref().map_or(f64::NEG_INFINITY, |(_, z)| *z);
            log_line(nodes, best_open_bound(&heap, obj), inc);
        }

        // Plunge into the child nearer the LP value with the factorization
        // still warm; ties go up.
        let (dive, other) = if f < 0.5 { (down, up) } else { (up, down) };
        search.load_bounds(&dive.lower, &dive.upper);
        heap.push(Ranked(other, opts.node_selection));
        match search.solve_node_lp() {
            Ok(LpStatus::Optimal) => current = Some((dive, true)),
            Ok(_) => {
                nodes += 1;
            }
            Err(SolveError::IterationLimit(_) | SolveError::TimeLimit) => {
                heap.push(Ranked(dive, opts.node_selection));
                limit_hit = true;
                break;
            }
            Err(e) => return Err(e),
        }

        if let Some((_, z)) = &search.incumbent {
            let bound = best_open_bound(&heap, f64::NEG_INFINITY)
                .max(current.as_ref().map_or(f64::NEG_INFINITY, |(n, _)| n.bound));
            if bound <= *z + search.tolerance() {
                heap.clear();
                current = None;
                break;
            }
        }
    }

    let inc_obj = search.incumbent.as_ref().map(|(_, z)| *z);
    let open_bound = heap
        .iter()
        .map(|r| r.0.bound)
        .chain(current.iter().map(|(n, _)| n.bound))
        .fold(f64::NEG_INFINITY, f64::max);
    let best_bound = match inc_obj {
        Some(z) => open_bound.max(z),
        None => open_bound,
    };

    let status = match inc_obj {
        None if limit_hit => SolveStatus::NoSolution,
        None => SolveStatus::Infeasible,
        Some(z) => {
            let gap = relative_gap(best_bound, z);
            if !limit_hit || gap <= opts.relative_gap || best_bound - z <= opts.absolute_gap {
                SolveStatus::Optimal
            } else {
                SolveStatus::Feasible { gap }
            }
        }
    };
    if opts.verbose {
        log_line(nodes, best_bound, inc_obj.unwrap_or(f64::NEG_INFINITY));
    }
    Ok(finish(&search, status, best_bound, root_bound, nodes))
}

fn best_open_bound(heap: &BinaryHeap<Ranked>, fallback: f64) -> f64 {
    heap.iter().map(|r| r.0.bound).fold(fallback, f64::max)
}

fn log_line(nodes: usize, bound: f64, incumbent: f64) {
    eprintln!(
        "NODE {nodes} BOUND {bound:.9e} INCUMBENT {incumbent:.9e} GAP {:.3e}",
        relative_gap(bound, incumbent)
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Domain, RowSense};

    #[test]
    fn tiny_knapsack() {
        let mut p = Problem::new("k");
        let a = p.add_variable("y1", Domain::Binary, 0.0, 1.0, 2.0);
        let b = p.add_variable("y2", Domain::Binary, 0.0, 1.0, 3.0);
        p.add_constraint("c", [(a, 1.0), (b, 1.0)], RowSense::Le, 1.0);
        let r = solve_milp(&p, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-9);
        assert_eq!(r.x, vec![0.0, 1.0]);
    }

    #[test]
    fn node_limit_reports_feasible_gap_or_no_solution() {
        // max sum x_i s.t. 2 x_i <= 1 + ... classic parity problem that needs branching.
        let mut p = Problem::new("parity");
        let cols: Vec<usize> = (0..6)
            .map(|i| p.add_variable(format!("x{i}"), Domain::Integer, 0.0, 10.0, 1.0))
            .collect();
        p.add_constraint("c", cols.iter().map(|&j| (j, 2.0)), RowSense::Le, 11.0);
        let opts = SolveOptions {
            node_limit: 1,
            ..Default::default()
        };
        let r = solve_milp(&p, &opts).unwrap();
        match r.status {
            SolveStatus::Optimal | SolveStatus::Feasible { .. } | SolveStatus::NoSolution => {}
            s => panic!("unexpected status {s:?}"),
        }
        let full = solve_milp(&p, &SolveOptions::default()).unwrap();
        assert_eq!(full.status, SolveStatus::Optimal);
        assert!((full.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn integer_infeasible() {
        let mut p = Problem::new("t");
        let x = p.add_variable("x", Domain::Integer, 0.0, 10.0, 1.0);
        p.add_constraint("a", [(x, 2.0)], RowSense::Eq, 3.0);
        let r = solve_milp(&p, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }
}
