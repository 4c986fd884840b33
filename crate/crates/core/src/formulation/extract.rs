use thiserror::Error;

use super::{Model, VarKey};
use crate::model::{AdministeredValue, DronesUsed, FlowValue, Solution, StockValue};

pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("vector has {got} entries, model has {expected} columns")]
    Length { got: usize, expected: usize },
    #[error("integer column {name} has value {value}")]
    Fractional { name: String, value: f64 },
}

/// Reads a raw column vector back into a [`Solution`]. Integer columns are
/// rounded when within `1e-6` of an integer; entries that are exactly zero
/// after that are left out.
pub fn extract_solution(model: &Model, x: &[f64]) -> Result<Solution, ExtractError> {
    let p = &model.problem;
    if x.len() != p.num_vars() {
        return Err(ExtractError::Length {
            got: x.len(),
            expected: p.num_vars(),
        });
    }
    let mut vals = x.to_vec();
    for (j, v) in p.variables.iter().enumerate() {
        if v.domain.is_integral() {
            let r = vals[j].round();
            if (vals[j] - r).abs() > INTEGRALITY_TOL {
                return Err(ExtractError::Fractional {
                    name: v.name.clone(),
                    value: vals[j],
                });
            }
            vals[j] = r;
        }
    }
    let node = |i: usize| model.node_ids[i].clone();
    let vac = |l: usize| model.vaccine_ids[l].clone();
    let mut sol = Solution {
        model: model.kind.to_string(),
        objective: p.objective_value(&vals),
        ..Default::default()
    };
    for (j, key) in model.vars.iter() {
        let value = vals[j];
        if value == 0.0 {
            continue;
        }
        match key {
            VarKey::Y(i) => {
                if value > 0.5 {
                    sol.hubs.push(node(i));
                }
            }
            VarKey::Z => sol.drones = value as u64,
            VarKey::V { node: i, period } => sol.drones_used.push(DronesUsed {
                node: node(i),
                period,
                drones: value as u64,
            }),
            VarKey::S { arc, vaccine, period } | VarKey::D { arc, vaccine, period } => {
                let (from, to) = model.arcs[arc].clone();
                let flow = FlowValue {
                    from,
                    to,
                    vaccine: vac(vaccine),
                    period,
                    doses: value,
                };
                if matches!(key, VarKey::S { .. }) {
                    sol.land.push(flow);
                } else {
                    sol.drone_flow.push(flow);
                }
            }
            VarKey::I { node: i, vaccine, period } => sol.inventory.push(StockValue {
                node: node(i),
                vaccine: vac(vaccine),
                period,
                doses: value,
            }),
            VarKey::X {
                center,
                community,
                vaccine,
                period,
            } => sol.administered.push(AdministeredValue {
                center: node(center),
                community: community.map(node),
                vaccine: vac(vaccine),
                period,
                doses: value,
            }),
            VarKey::N(k) => {
                sol.immunized.insert(node(k), value);
            }
            VarKey::W(_) => {}
        }
    }
    Ok(sol)
}
