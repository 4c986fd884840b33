use std::collections::BTreeSet;

use vaxnet_milp::{Domain, Problem, RowSense};

use super::varmap::{VarKey, VarMap};
use crate::preprocess::AccessIndicator;

/// Minimum number of open centers such that every community reaches one.
/// Written as `max −Σ W_i`; clinic communities and standalone clinics are
/// fixed open by equality rows.
pub fn build_set_cover(indicator: &AccessIndicator, clinic_communities: &BTreeSet<String>) -> (Problem, VarMap) {
    let mut p = Problem::new("set_cover");
    let mut vars = VarMap::new();
    for i in 0..indicator.candidates.len() {
        let col = p.add_variable(format!("W_{i}"), Domain::Binary, 0.0, 1.0, -1.0);
        vars.push(VarKey::W(i));
        debug_assert_eq!(col, i);
    }
    for k in 0..indicator.communities.len() {
        let terms = (0..indicator.candidates.len())
            .filter(|&i| indicator.covers[i][k])
            .map(|i| (i, 1.0));
        p.add_constraint(format!("cover_{k}"), terms, RowSense::Ge, 1.0);
    }
    for (i, id) in indicator.candidates.iter().enumerate() {
        if indicator.candidate_is_clinic[i] || clinic_communities.contains(id) {
            p.add_constraint(format!("clinic_{i}"), [(i, 1.0)], RowSense::Eq, 1.0);
        }
    }
    (p, vars)
}
