//! Sparse linear programs with integrality markers.
//!
//! Every [`Problem`] is a maximization. Callers that want to minimize negate
//! the objective before building.

use std::fmt;

use crate::error::ProblemError;

/// Variable domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Continuous,
    Integer,
    Binary,
}

impl Domain {
    pub fn is_integral(self) -> bool {
        !matches!(self, Domain::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub domain: Domain,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
}

/// Row sense relative to the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// `(column, coefficient)` pairs; no duplicates, no zeros.
    pub terms: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            RowSense::Le => (lhs - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - lhs).max(0.0),
            RowSense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A maximization problem `max c'x  s.t.  rows, lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Problem {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl Problem {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn nnz(&self) -> usize {
        self.constraints.iter().map(|c| c.terms.len()).sum()
    }

    /// Adds a variable and returns its column index. Binary variables get
    /// their bounds clipped to `[0, 1]`.
    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        domain: Domain,
        lower: f64,
        upper: f64,
        objective: f64,
    ) -> usize {
        let (lower, upper) = match domain {
            Domain::Binary => (lower.max(0.0), upper.min(1.0)),
            _ => (lower, upper),
        };
        self.variables.push(Variable {
            name: name.into(),
            domain,
            lower,
            upper,
            objective,
        });
        self.variables.len() - 1
    }

    /// Adds a row. Duplicate columns are merged (first-occurrence order) and
    /// exact zeros dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (j, a) in terms {
            match merged.iter_mut().find(|(k, _)| *k == j) {
                Some(slot) => slot.1 += a,
                None => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.constraints.push(Constraint {
            name: name.into(),
            terms: merged,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(x)
            .map(|(v, &xj)| v.objective * xj)
            .sum()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max);
        let bounds = self
            .variables
            .iter()
            .zip(x)
            .map(|(v, &xj)| (v.lower - xj).max(xj - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    pub fn integer_columns(&self) -> Vec<usize> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.domain.is_integral())
            .map(|(j, _)| j)
            .collect()
    }

    /// Same problem with every integrality marker removed.
    pub fn relaxed(&self) -> Problem {
        let mut p = self.clone();
        for v in &mut p.variables {
            v.domain = Domain::Continuous;
        }
        p
    }

    /// Checks that every coefficient is finite and references a declared
    /// column, and that bounds are consistent.
    pub fn validate(&self) -> Result<(), ProblemError> {
        for (j, v) in self.variables.iter().enumerate() {
            if !v.objective.is_finite() {
                return Err(ProblemError::NonFinite {
                    location: format!("objective of {}", v.name),
                });
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY
            {
                return Err(ProblemError::BadBounds { column: j });
            }
            if v.lower > v.upper {
                return Err(ProblemError::BadBounds { column: j });
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(ProblemError::NonFinite {
                    location: format!("rhs of {}", c.name),
                });
            }
            for &(j, a) in &c.terms {
                if j >= self.variables.len() {
                    return Err(ProblemError::UnknownColumn {
                        row: c.name.clone(),
                        column: j,
                    });
                }
                if !a.is_finite() {
                    return Err(ProblemError::NonFinite {
                        location: format!("row {}", c.name),
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_duplicate_terms_and_drops_zeros() {
        let mut p = Problem::new("t");
        let x = p.add_variable("x", Domain::Continuous, 0.0, f64::INFINITY, 1.0);
        let y = p.add_variable("y", Domain::Continuous, 0.0, f64::INFINITY, 1.0);
        p.add_constraint("c", [(x, 1.0), (y, 2.0), (x, 3.0), (y, -2.0)], RowSense::Le, 4.0);
        assert_eq!(p.constraints[0].terms, vec![(x, 4.0)]);
    }

    #[test]
    fn binary_bounds_are_clipped() {
        let mut p = Problem::new("t");
        p.add_variable("y", Domain::Binary, -3.0, 7.0, 0.0);
        assert_eq!((p.variables[0].lower, p.variables[0].upper), (0.0, 1.0));
    }

    #[test]
    fn validate_rejects_dangling_column() {
        let mut p = Problem::new("t");
        p.add_variable("x", Domain::Continuous, 0.0, 1.0, 1.0);
        p.constraints.push(Constraint {
            name: "bad".into(),
            terms: vec![(3, 1.0)],
            sense: RowSense::Le,
            rhs: 0.0,
        });
        assert!(matches!(p.validate(), Err(ProblemError::UnknownColumn { .. })));
    }
}
