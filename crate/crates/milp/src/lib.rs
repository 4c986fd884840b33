//! A small mixed-integer linear programming engine: bounded revised simplex,
//! LP-based branch-and-bound, and LP file I/O.
//!
//! ```
//! use vaxnet_milp::{solve_milp, Domain, Problem, RowSense, SolveOptions, SolveStatus};
//!
//! let mut p = Problem::new("knapsack");
//! let a = p.add_variable("a", Domain::Binary, 0.0, 1.0, 2.0);
//! let b = p.add_variable("b", Domain::Binary, 0.0, 1.0, 3.0);
//! p.add_constraint("cap", [(a, 1.0), (b, 1.0)], RowSense::Le, 1.0);
//! let r = solve_milp(&p, &SolveOptions::default()).unwrap();
//! assert_eq!(r.status, SolveStatus::Optimal);
//! assert_eq!(r.objective, 3.0);
//! ```

pub mod bnb;
pub mod error;
mod factor;
pub mod lpfile;
pub mod problem;
pub mod simplex;

pub use bnb::{relative_gap, solve_lp, solve_milp, Branching, NodeSelection, SolveOptions, SolveResult, SolveStatus};
pub use error::{LpFileError, ProblemError, SolveError};
pub use lpfile::{parse_lp, read_lp_file, to_lp_string, write_lp_file};
pub use problem::{Constraint, Domain, Problem, RowSense, Variable};
