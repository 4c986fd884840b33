//! Solving built models and packaging the result.

use thiserror::Error;
use vaxnet_milp::{solve_milp, SolveError, SolveOptions, SolveStatus};

use crate::formulation::{extract_solution, ExtractError, Model};
use crate::model::{Solution, SolutionStatus};

#[derive(Debug, Error)]
pub enum SolveModelError {
    #[error(transparent)]
    Solver(#[from] SolveError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

pub fn map_status(status: SolveStatus) -> SolutionStatus {
    match status {
        SolveStatus::Optimal => SolutionStatus::Optimal,
        SolveStatus::Feasible { gap } => SolutionStatus::Feasible { gap },
        SolveStatus::Infeasible => SolutionStatus::Infeasible,
        SolveStatus::Unbounded => SolutionStatus::Unbounded,
        SolveStatus::NoSolution => SolutionStatus::NoSolution,
    }
}

/// Runs branch-and-bound on `model` and reads the incumbent back.
pub fn solve_model(model: &Model, opts: &SolveOptions) -> Result<Solution, SolveModelError> {
    let r = solve_milp(&model.problem, opts)?;
    let mut sol = if r.has_solution() {
        extract_solution(model, &r.x)?
    } else {
        Solution {
            model: model.kind.to_string(),
            ..Default::default()
        }
    };
    sol.status = Some(map_status(r.status));
    sol.best_bound = r.best_bound;
    sol.gap = r.gap;
    sol.nodes_explored = r.nodes;
    // JSON has no infinities.
    for v in [&mut sol.best_bound, &mut sol.gap] {
        if !v.is_finite() {
            *v = 0.0;
        }
    }
    Ok(sol)
}
