//! Builders for the cold-chain design models and the set cover model.
//!
//! All three network models share one builder. Community-level demand with
//! access arcs gives the community-resolution model, where administered
//! doses are indexed by (center, community). Demand placed on centers gives
//! the aggregated model. A [`HubRestriction`] narrows the hub candidates and
//! pins previously opened hubs.
//!
//! Columns that are forced to zero are never created: hubs, drones and
//! drone flows when the budget cannot buy a hub plus one drone, and
//! administered doses where the horizon demand is zero.
//!
//! The hub link uses a per-hub bound, the drones left after paying for that
//! hub, instead of the global `floor(b / c)`. Integer solutions are the same.

mod extract;
pub mod setcover;
mod varmap;

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vaxnet_milp::{Domain, Problem, RowSense};

pub use extract::{extract_solution, ExtractError};
pub use varmap::{VarKey, VarMap};

use crate::model::{validate_instance, ArcKind, Instance, NodeKind, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    P,
    Q,
    #[serde(rename = "Qbar")]
    QBar,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::P => "P",
            ModelKind::Q => "Q",
            ModelKind::QBar => "Qbar",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "P" | "p" => Ok(ModelKind::P),
            "Q" | "q" => Ok(ModelKind::Q),
            "Qbar" | "qbar" | "QBar" => Ok(ModelKind::QBar),
            _ => Err(format!("unknown model {s:?} (expected P, Q or Qbar)")),
        }
    }
}

/// Hub candidates and already opened hubs for the restricted model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HubRestriction {
    pub candidates: BTreeSet<String>,
    /// Opened in an earlier stage; their cost still counts against the budget.
    pub fixed_open: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BuildOptions {
    /// Keep each hub's drone count constant across the horizon.
    pub stationed_drones: bool,
    /// Require at least this many drones. Zero imposes nothing; a positive
    /// value with no affordable hub makes the model infeasible.
    pub min_drones: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("invalid instance:\n{0}")]
    Invalid(ValidationReport),
    #[error("model P needs community-level demand, but {0:?} is not a community")]
    NotCommunityLevel(String),
    #[error("model Q needs demand aggregated onto centers, but {0:?} is a community")]
    NotAggregated(String),
    #[error("hub {0:?} is not a hub candidate of the instance")]
    UnknownHub(String),
    #[error("fixed hub {0:?} is not in the candidate set")]
    FixedNotCandidate(String),
    #[error("sunk cost {cost} of fixed hubs exceeds the budget {budget}")]
    SunkCost { cost: f64, budget: f64 },
}

/// A built model: matrix, column map, and the labels needed to read a
/// solution back.
#[derive(Debug, Clone)]
pub struct Model {
    pub kind: ModelKind,
    pub problem: Problem,
    pub vars: VarMap,
    pub node_ids: Vec<String>,
    pub vaccine_ids: Vec<String>,
    /// `(from, to)` per instance arc.
    pub arcs: Vec<(String, String)>,
}

/// Community-resolution model on an instance with community-level demand.
pub fn build_model_p(instance: &Instance, opts: &BuildOptions) -> Result<Model, BuildError> {
    build(instance, ModelKind::P, None, opts)
}

/// Aggregated model on a reduced instance.
pub fn build_model_q(instance: &Instance, opts: &BuildOptions) -> Result<Model, BuildError> {
    build(instance, ModelKind::Q, None, opts)
}

/// Aggregated model with restricted hub candidates and pinned hubs. The
/// budget row keeps the instance budget; fixed hubs are charged against it.
pub fn build_model_q_restricted(
    instance: &Instance,
    restriction: &HubRestriction,
    opts: &BuildOptions,
) -> Result<Model, BuildError> {
    build(instance, ModelKind::QBar, Some(restriction), opts)
}

/// Picks P when demand sits on communities and Q otherwise.
pub fn build_model(instance: &Instance, opts: &BuildOptions) -> Result<Model, BuildError> {
    if is_community_level(instance) {
        build_model_p(instance, opts)
    } else {
        build_model_q(instance, opts)
    }
}

pub fn is_community_level(instance: &Instance) -> bool {
    let kinds: BTreeMap<&str, NodeKind> = instance.nodes.iter().map(|n| (n.id.as_str(), n.kind)).collect();
    instance
        .demand
        .iter()
        .any(|d| kinds.get(d.node.as_str()) == Some(&NodeKind::Community))
}

struct Incidence {
    land_out: Vec<Vec<usize>>,
    land_in: Vec<Vec<usize>>,
    drone_out: Vec<Vec<usize>>,
    drone_in: Vec<Vec<usize>>,
    access_out: Vec<Vec<usize>>,
}

fn incidence(instance: &Instance, idx: &std::collections::HashMap<&str, usize>) -> Incidence {
    let n = instance.nodes.len();
    let mut inc = Incidence {
        land_out: vec![Vec::new(); n],
        land_in: vec![Vec::new(); n],
        drone_out: vec![Vec::new(); n],
        drone_in: vec![Vec::new(); n],
        access_out: vec![Vec::new(); n],
    };
    for (a, arc) in instance.arcs.iter().enumerate() {
        let (f, t) = (idx[arc.from.as_str()], idx[arc.to.as_str()]);
        match arc.kind {
            ArcKind::Land => {
                inc.land_out[f].push(a);
                inc.land_in[t].push(a);
            }
            ArcKind::Drone => {
                inc.drone_out[f].push(a);
                inc.drone_in[t].push(a);
            }
            ArcKind::Access => inc.access_out[f].push(a),
        }
    }
    inc
}

fn build(
    instance: &Instance,
    kind: ModelKind,
    restriction: Option<&HubRestriction>,
    opts: &BuildOptions,
) -> Result<Model, BuildError> {
    let report = validate_instance(instance);
    if !report.is_ok() {
        return Err(BuildError::Invalid(report));
    }
    let idx = instance.node_index();
    let vidx = instance.vaccine_index();
    let nodes = &instance.nodes;
    let vaccines = &instance.vaccines;
    let horizon = instance.horizon;
    let community_level = kind == ModelKind::P;
    for d in &instance.demand {
        let k = nodes[idx[d.node.as_str()]].kind;
        if community_level && k != NodeKind::Community {
            return Err(BuildError::NotCommunityLevel(d.node.clone()));
        }
        if !community_level && k == NodeKind::Community {
            return Err(BuildError::NotAggregated(d.node.clone()));
        }
    }

    let drone_cost = instance.drone.unit_cost;
    let budget = instance.budget;
    let m = instance.max_drones();
    let mut fixed = vec![false; nodes.len()];
    let mut candidate: Vec<bool> = nodes.iter().map(|n| n.hub_cost.is_some() && n.kind.has_storage()).collect();
    let mut sunk = 0.0;
    if let Some(r) = restriction {
        for id in r.candidates.iter().chain(&r.fixed_open) {
            match idx.get(id.as_str()) {
                Some(&i) if candidate[i] => {}
                _ => return Err(BuildError::UnknownHub(id.clone())),
            }
        }
        for id in &r.fixed_open {
            if !r.candidates.contains(id) {
                return Err(BuildError::FixedNotCandidate(id.clone()));
            }
            let i = idx[id.as_str()];
            fixed[i] = true;
            sunk += nodes[i].hub_cost.unwrap_or(0.0);
        }
        if sunk > budget + 1e-9 * budget.max(1.0) {
            return Err(BuildError::SunkCost { cost: sunk, budget });
        }
        for (i, n) in nodes.iter().enumerate() {
            candidate[i] = candidate[i] && r.candidates.contains(&n.id);
        }
    }
    let inc = incidence(instance, &idx);
    let slack = 1e-9 * budget.max(1.0);
    // A hub can fly drones if it can pay for itself plus one drone.
    let flies: Vec<bool> = (0..nodes.len())
        .map(|i| {
            if !candidate[i] || m == 0 || inc.drone_out[i].is_empty() {
                return false;
            }
            let own = if fixed[i] { 0.0 } else { nodes[i].hub_cost.unwrap_or(0.0) };
            sunk + own + drone_cost <= budget + slack
        })
        .collect();

    // Horizon demand per (demand node, vaccine).
    let mut dem: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for d in &instance.demand {
        *dem.entry((idx[d.node.as_str()], vidx[d.vaccine.as_str()])).or_insert(0.0) += d.doses;
    }
    let supply = instance.effective_supply();
    let total_demand: f64 = dem.values().sum();
    let total_supply: f64 = supply.iter().map(|s| s.doses).sum();
    if total_demand > 0.0 && total_supply <= 0.0 {
        warn!("no central supply for nonzero demand; every dose flow is zero");
    }
    let mut supply_at: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for s in &supply {
        *supply_at.entry((vidx[s.vaccine.as_str()], s.period)).or_insert(0.0) += s.doses;
    }

    let mut p = Problem::new(format!("{}_{}", kind, instance.name).replace(|c: char| !c.is_ascii_alphanumeric() && c != '_', "_"));
    let mut vars = VarMap::new();
    let mut add = |p: &mut Problem, key: VarKey, domain: Domain, lo: f64, hi: f64, obj: f64| -> usize {
        let col = p.add_variable(key.to_string(), domain, lo, hi, obj);
        let c2 = vars.push(key);
        debug_assert_eq!(col, c2);
        col
    };

    let any_flies = flies.iter().any(|&f| f);
    let mut y_col = vec![None; nodes.len()];
    for i in 0..nodes.len() {
        if fixed[i] {
            y_col[i] = Some(add(&mut p, VarKey::Y(i), Domain::Binary, 1.0, 1.0, 0.0));
        } else if flies[i] {
            y_col[i] = Some(add(&mut p, VarKey::Y(i), Domain::Binary, 0.0, 1.0, 0.0));
        }
    }
    let mf = m as f64;
    let z_col = if any_flies {
        Some(add(&mut p, VarKey::Z, Domain::Integer, 0.0, mf, 0.0))
    } else if opts.min_drones > 0 {
        Some(add(&mut p, VarKey::Z, Domain::Integer, 0.0, 0.0, 0.0))
    } else {
        None
    };
    // Drones an open hub can still afford after its own and the sunk cost;
    // never more than m.
    let hub_m: Vec<f64> = (0..nodes.len())
        .map(|i| {
            let own = if fixed[i] { 0.0 } else { nodes[i].hub_cost.unwrap_or(0.0) };
            let left = ((budget - sunk - own) / drone_cost + 1e-9).floor();
            left.clamp(0.0, mf)
        })
        .collect();
    let mut v_col: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for i in (0..nodes.len()).filter(|&i| flies[i]) {
        for t in 1..=horizon {
            v_col.insert((i, t), add(&mut p, VarKey::V { node: i, period: t }, Domain::Integer, 0.0, hub_m[i], 0.0));
        }
    }
    let mut s_col: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    let mut d_col: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    for (a, arc) in instance.arcs.iter().enumerate() {
        let from = idx[arc.from.as_str()];
        let target = match arc.kind {
            ArcKind::Land => &mut s_col,
            ArcKind::Drone if flies[from] => &mut d_col,
            _ => continue,
        };
        for l in 0..vaccines.len() {
            for t in 1..=horizon {
                let key = if arc.kind == ArcKind::Land {
                    VarKey::S { arc: a, vaccine: l, period: t }
                } else {
                    VarKey::D { arc: a, vaccine: l, period: t }
                };
                target.insert((a, l, t), add(&mut p, key, Domain::Continuous, 0.0, f64::INFINITY, 0.0));
            }
        }
    }
    let mut i_col: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    for (i, n) in nodes.iter().enumerate() {
        if !n.kind.has_storage() {
            continue;
        }
        for l in 0..vaccines.len() {
            for t in 1..=horizon {
                let key = VarKey::I { node: i, vaccine: l, period: t };
                i_col.insert((i, l, t), add(&mut p, key, Domain::Continuous, 0.0, f64::INFINITY, 0.0));
            }
        }
    }

    // Administered doses: by center (for balances) and by demand node (for
    // demand and immunization rows).
    let eps = instance.epsilon;
    let mut x_at_center: BTreeMap<(usize, usize, usize), Vec<usize>> = BTreeMap::new();
    let mut x_for_unit: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let units: Vec<usize> = if community_level {
        (0..nodes.len())
            .filter(|&k| nodes[k].kind == NodeKind::Community && !inc.access_out[k].is_empty())
            .collect()
    } else {
        (0..nodes.len()).filter(|&k| nodes[k].kind.is_center()).collect()
    };
    for &k in &units {
        for l in 0..vaccines.len() {
            if dem.get(&(k, l)).copied().unwrap_or(0.0) <= 0.0 {
                continue;
            }
            let centers: Vec<usize> = if community_level {
                inc.access_out[k].iter().map(|&a| idx[instance.arcs[a].to.as_str()]).collect()
            } else {
                vec![k]
            };
            for &c in &centers {
                for t in 1..=horizon {
                    let key = VarKey::X {
                        center: c,
                        community: community_level.then_some(k),
                        vaccine: l,
                        period: t,
                    };
                    let col = add(&mut p, key, Domain::Continuous, 0.0, f64::INFINITY, eps);
                    x_at_center.entry((c, l, t)).or_default().push(col);
                    x_for_unit.entry((k, l)).or_default().push(col);
                }
            }
        }
    }
    let mut n_col: BTreeMap<usize, usize> = BTreeMap::new();
    for &k in &units {
        if (0..vaccines.len()).all(|l| x_for_unit.contains_key(&(k, l))) {
            n_col.insert(k, add(&mut p, VarKey::N(k), Domain::Continuous, 0.0, f64::INFINITY, 1.0));
        }
    }

    // Rows.
    let push = |p: &mut Problem, name: String, terms: Vec<(usize, f64)>, sense: RowSense, rhs: f64| {
        if !terms.is_empty() {
            p.add_constraint(name, terms, sense, rhs);
        }
    };

    let mut budget_terms: Vec<(usize, f64)> = (0..nodes.len())
        .filter_map(|i| y_col[i].map(|c| (c, nodes[i].hub_cost.unwrap_or(0.0))))
        .collect();
    if let Some(z) = z_col {
        budget_terms.push((z, drone_cost));
    }
    push(&mut p, "budget".into(), budget_terms, RowSense::Le, budget);

    for (&(i, t), &v) in &v_col {
        let y = y_col[i].expect("flying hubs have a Y column");
        push(&mut p, format!("hub_link_{i}_{t}"), vec![(v, 1.0), (y, -hub_m[i])], RowSense::Le, 0.0);
    }
    if let Some(z) = z_col {
        for t in 1..=horizon {
            let mut terms: Vec<(usize, f64)> = v_col.iter().filter(|(k, _)| k.1 == t).map(|(_, &c)| (c, 1.0)).collect();
            terms.push((z, -1.0));
            push(&mut p, format!("fleet_{t}"), terms, RowSense::Le, 0.0);
        }
    }
    if let (Some(z), true) = (z_col, opts.min_drones > 0) {
        push(&mut p, "min_drones".into(), vec![(z, 1.0)], RowSense::Ge, opts.min_drones as f64);
    }
    if opts.stationed_drones {
        for (&(i, t), &v) in &v_col {
            if t > 1 {
                push(&mut p, format!("stationed_{i}_{t}"), vec![(v, 1.0), (v_col[&(i, 1)], -1.0)], RowSense::Eq, 0.0);
            }
        }
    }

    let central = idx[instance.central_store().expect("validated").id.as_str()];
    let tw = |a: usize, l: usize| {
        instance.arcs[a]
            .transit_wastage
            .get(&vaccines[l].id)
            .copied()
            .unwrap_or(0.0)
    };
    // Terms for doses arriving at `i` in period `t`.
    let arrivals = |i: usize, l: usize, t: usize, scale: f64| -> Vec<(usize, f64)> {
        let mut terms = Vec::new();
        if t > 1 {
            for &a in &inc.land_in[i] {
                if let Some(&c) = s_col.get(&(a, l, t - 1)) {
                    terms.push((c, scale * (1.0 - tw(a, l))));
                }
            }
        }
        for &a in &inc.drone_in[i] {
            if let Some(&c) = d_col.get(&(a, l, t)) {
                terms.push((c, scale * (1.0 - tw(a, l))));
            }
        }
        terms
    };

    for (i, n) in nodes.iter().enumerate() {
        if n.kind.has_storage() {
            for l in 0..vaccines.len() {
                let wb = instance.storage_wastage(n, &vaccines[l].id);
                let ovw = instance.ovw(n, &vaccines[l]);
                for t in 1..=horizon {
                    let mut terms = vec![(i_col[&(i, l, t)], 1.0)];
                    if t > 1 {
                        terms.push((i_col[&(i, l, t - 1)], -(1.0 - wb)));
                    }
                    for &a in &inc.land_out[i] {
                        terms.push((s_col[&(a, l, t)], 1.0));
                    }
                    for &a in &inc.drone_out[i] {
                        if let Some(&c) = d_col.get(&(a, l, t)) {
                            terms.push((c, 1.0));
                        }
                    }
                    terms.extend(arrivals(i, l, t, -1.0));
                    if let Some(xs) = x_at_center.get(&(i, l, t)) {
                        terms.extend(xs.iter().map(|&c| (c, 1.0 / (1.0 - ovw))));
                    }
                    let rhs = if i == central {
                        supply_at.get(&(l, t)).copied().unwrap_or(0.0)
                    } else {
                        0.0
                    };
                    push(&mut p, format!("inv_bal_{i}_{l}_{t}"), terms, RowSense::Eq, rhs);
                }
            }
            if let Some(u) = n.storage_capacity {
                for t in 1..=horizon {
                    let mut terms = Vec::new();
                    for (l, v) in vaccines.iter().enumerate() {
                        terms.push((i_col[&(i, l, t)], v.dose_volume_cm3));
                        terms.extend(arrivals(i, l, t, v.dose_volume_cm3));
                    }
                    push(&mut p, format!("storage_{i}_{t}"), terms, RowSense::Le, u);
                }
            }
        } else if n.kind == NodeKind::OutreachPost {
            for l in 0..vaccines.len() {
                let ovw = instance.ovw(n, &vaccines[l]);
                for t in 1..=horizon {
                    let mut terms = arrivals(i, l, t, 1.0);
                    if let Some(xs) = x_at_center.get(&(i, l, t)) {
                        terms.extend(xs.iter().map(|&c| (c, -1.0 / (1.0 - ovw))));
                    }
                    push(&mut p, format!("outreach_bal_{i}_{l}_{t}"), terms, RowSense::Eq, 0.0);
                }
            }
        }
    }

    for (a, arc) in instance.arcs.iter().enumerate() {
        if arc.kind != ArcKind::Land {
            continue;
        }
        let Some(u) = arc.transport_capacity else { continue };
        let (f, to) = (idx[arc.from.as_str()], idx[arc.to.as_str()]);
        for t in 1..=horizon {
            let terms = (0..vaccines.len()).map(|l| (s_col[&(a, l, t)], vaccines[l].dose_volume_cm3)).collect();
            push(&mut p, format!("land_cap_{f}_{to}_{t}"), terms, RowSense::Le, u);
        }
    }

    let drone = &instance.drone;
    for (&(i, t), &v) in &v_col {
        let mut terms = Vec::new();
        for &a in &inc.drone_out[i] {
            let trip_hours = 2.0 * instance.arcs[a].distance_km / drone.speed_kmh;
            for (l, vac) in vaccines.iter().enumerate() {
                let per_dose = (vac.dose_volume_cm3 + vac.diluent_volume_cm3) / drone.payload;
                terms.push((d_col[&(a, l, t)], per_dose * trip_hours));
            }
        }
        terms.push((v, -drone.hours_per_period));
        push(&mut p, format!("drone_hours_{i}_{t}"), terms, RowSense::Le, 0.0);
    }

    for (&(k, l), cols) in &x_for_unit {
        let rhs = dem[&(k, l)];
        push(&mut p, format!("demand_{k}_{l}"), cols.iter().map(|&c| (c, 1.0)).collect(), RowSense::Le, rhs);
    }
    for (&k, &nk) in &n_col {
        for (l, vac) in vaccines.iter().enumerate() {
            let a = vac.doses_per_regimen as f64;
            let mut terms = vec![(nk, 1.0)];
            terms.extend(x_for_unit[&(k, l)].iter().map(|&c| (c, -1.0 / a)));
            push(&mut p, format!("fic_{k}_{l}"), terms, RowSense::Le, 0.0);
        }
    }

    Ok(Model {
        kind,
        problem: p,
        vars,
        node_ids: nodes.iter().map(|n| n.id.clone()).collect(),
        vaccine_ids: vaccines.iter().map(|v| v.id.clone()).collect(),
        arcs: instance.arcs.iter().map(|a| (a.from.clone(), a.to.clone())).collect(),
    })
}

#[cfg(test)]
mod tests;
