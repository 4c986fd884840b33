//! Supply ratio, fully immunized children, and capacity utilization.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::model::{ArcKind, Instance, NodeKind, Solution};
use crate::preprocess::{aggregate_demand, Uncovered};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SrLevel {
    /// Each vaccination center against the demand assigned to it.
    Center,
    /// Centers of a region against the demand assigned to them.
    Region,
    /// Everything administered in a region against all of its demand,
    /// including demand that reaches no center.
    CommunitiesOfRegion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SrRow {
    pub unit: String,
    pub administered: f64,
    pub demanded: f64,
    pub sr: f64,
    /// Set when `demanded` is zero; `sr` is then reported as 1.
    pub zero_demand: bool,
}

impl SrRow {
    pub fn new(unit: impl Into<String>, administered: f64, demanded: f64) -> Self {
        let zero_demand = demanded <= 0.0;
        Self {
            unit: unit.into(),
            administered,
            demanded,
            sr: if zero_demand { 1.0 } else { administered / demanded },
            zero_demand,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SrTable {
    pub level: SrLevel,
    pub rows: Vec<SrRow>,
    pub total: SrRow,
}

fn region_of(instance: &Instance, id: &str) -> String {
    instance
        .node(id)
        .and_then(|n| n.region.clone())
        .unwrap_or_default()
}

/// Demand per node that a center serves, with the remainder unassigned.
/// Community-level instances are attributed by the aggregation rules.
fn assigned_demand(instance: &Instance) -> (Vec<(String, f64)>, Vec<(String, f64)>) {
    let has_community_demand = instance
        .demand
        .iter()
        .any(|d| instance.node(&d.node).is_some_and(|n| n.kind == NodeKind::Community));
    let (assigned, unassigned) = if has_community_demand {
        let agg = aggregate_demand(instance, Uncovered::Keep).expect("keep policy never fails");
        (agg.demand, agg.unassigned)
    } else {
        (instance.demand.clone(), instance.unassigned_demand.clone())
    };
    (
        assigned.into_iter().map(|d| (d.node, d.doses)).collect(),
        unassigned.into_iter().map(|d| (d.node, d.doses)).collect(),
    )
}

/// Dose-weighted supply ratio over the horizon at the requested level.
pub fn compute_supply_ratio(solution: &Solution, instance: &Instance, level: SrLevel) -> SrTable {
    let (assigned, unassigned) = assigned_demand(instance);
    let mut num: BTreeMap<String, f64> = BTreeMap::new();
    let mut den: BTreeMap<String, f64> = BTreeMap::new();
    match level {
        SrLevel::Center => {
            for n in instance.nodes.iter().filter(|n| n.kind.is_center()) {
                num.insert(n.id.clone(), 0.0);
                den.insert(n.id.clone(), 0.0);
            }
            for x in &solution.administered {
                *num.entry(x.center.clone()).or_insert(0.0) += x.doses;
            }
            for (node, d) in &assigned {
                *den.entry(node.clone()).or_insert(0.0) += d;
            }
        }
        SrLevel::Region | SrLevel::CommunitiesOfRegion => {
            for x in &solution.administered {
                let id = x.community.as_deref().unwrap_or(&x.center);
                *num.entry(region_of(instance, id)).or_insert(0.0) += x.doses;
            }
            for (node, d) in &assigned {
                *den.entry(region_of(instance, node)).or_insert(0.0) += d;
            }
            if level == SrLevel::CommunitiesOfRegion {
                for (node, d) in &unassigned {
                    *den.entry(region_of(instance, node)).or_insert(0.0) += d;
                }
            }
            for k in den.keys() {
                num.entry(k.clone()).or_insert(0.0);
            }
        }
    }
    let rows: Vec<SrRow> = num
        .iter()
        .map(|(unit, &x)| SrRow::new(unit.clone(), x, den.get(unit).copied().unwrap_or(0.0)))
        .collect();
    let total = SrRow::new(
        "total",
        solution.total_administered(),
        rows.iter().map(|r| r.demanded).sum(),
    );
    SrTable { level, rows, total }
}

/// Per center and period, the sum over vaccines of administered over
/// demanded doses. Can exceed 1; kept as a diagnostic.
pub fn per_period_sr(solution: &Solution, instance: &Instance) -> BTreeMap<(String, usize), f64> {
    let has_community_demand = instance
        .demand
        .iter()
        .any(|d| instance.node(&d.node).is_some_and(|n| n.kind == NodeKind::Community));
    let demand = if has_community_demand {
        aggregate_demand(instance, Uncovered::Keep).expect("keep policy never fails").demand
    } else {
        instance.demand.clone()
    };
    let mut pi: HashMap<(&str, &str, usize), f64> = HashMap::new();
    for d in &demand {
        *pi.entry((d.node.as_str(), d.vaccine.as_str(), d.period)).or_insert(0.0) += d.doses;
    }
    let mut x: HashMap<(&str, &str, usize), f64> = HashMap::new();
    for a in &solution.administered {
        *x.entry((a.center.as_str(), a.vaccine.as_str(), a.period)).or_insert(0.0) += a.doses;
    }
    let mut out = BTreeMap::new();
    for (&(c, v, t), &p) in &pi {
        if p > 0.0 {
            *out.entry((c.to_string(), t)).or_insert(0.0) += x.get(&(c, v, t)).copied().unwrap_or(0.0) / p;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FicReport {
    /// Fully immunized children per demand node.
    pub immunized: BTreeMap<String, f64>,
    /// Children per demand node: the largest regimen count over vaccines.
    pub children: BTreeMap<String, f64>,
    pub total_immunized: f64,
    pub total_children: f64,
    pub proportion: f64,
    pub zero_demand: bool,
}

/// `N_k = min_l (Σ_t X_klt) / a_l` per demand node, and the share of all
/// children fully immunized.
pub fn compute_fic(solution: &Solution, instance: &Instance) -> FicReport {
    let mut given: HashMap<(&str, &str), f64> = HashMap::new();
    for x in &solution.administered {
        let unit = x.community.as_deref().unwrap_or(&x.center);
        *given.entry((unit, x.vaccine.as_str())).or_insert(0.0) += x.doses;
    }
    let mut per_vaccine: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for d in instance.demand.iter().chain(&instance.unassigned_demand) {
        *per_vaccine
            .entry(d.node.as_str())
            .or_default()
            .entry(d.vaccine.as_str())
            .or_insert(0.0) += d.doses;
    }
    let mut immunized = BTreeMap::new();
    let mut children = BTreeMap::new();
    for (&unit, by_vaccine) in &per_vaccine {
        let kids = instance
            .vaccines
            .iter()
            .map(|v| by_vaccine.get(v.id.as_str()).copied().unwrap_or(0.0) / v.doses_per_regimen as f64)
            .fold(0.0, f64::max);
        let n = instance
            .vaccines
            .iter()
            .map(|v| given.get(&(unit, v.id.as_str())).copied().unwrap_or(0.0) / v.doses_per_regimen as f64)
            .fold(f64::INFINITY, f64::min);
        immunized.insert(unit.to_string(), if n.is_finite() { n } else { 0.0 });
        children.insert(unit.to_string(), kids);
    }
    let total_immunized: f64 = immunized.values().sum();
    let total_children: f64 = children.values().sum();
    let zero_demand = total_children <= 0.0;
    FicReport {
        immunized,
        children,
        total_immunized,
        total_children,
        proportion: if zero_demand { 1.0 } else { total_immunized / total_children },
        zero_demand,
    }
}

pub const BUCKETS: usize = 10;

/// Bucket of width 0.1; values at or above 1 land in the last bucket.
pub fn bucket(u: f64) -> usize {
    ((u * 10.0 + 1e-9).floor().max(0.0) as usize).min(BUCKETS - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcUse {
    pub from: String,
    pub to: String,
    pub period: usize,
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoreUse {
    pub node: String,
    /// Peak over periods.
    pub utilization: f64,
    pub peak_period: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Utilization {
    pub transport: Vec<ArcUse>,
    pub storage: Vec<StoreUse>,
    pub transport_histogram: [usize; BUCKETS],
    pub storage_histogram: [usize; BUCKETS],
    /// Resources left out because their capacity is zero.
    pub notes: Vec<String>,
}

/// Transport use per land arc and period, and peak storage use per
/// facility, both as fractions of capacity. Unlimited resources are not
/// listed.
pub fn compute_utilization(solution: &Solution, instance: &Instance) -> Utilization {
    let volume: HashMap<&str, f64> = instance
        .vaccines
        .iter()
        .map(|v| (v.id.as_str(), v.dose_volume_cm3))
        .collect();
    let mut shipped: HashMap<(&str, &str, usize), f64> = HashMap::new();
    for f in &solution.land {
        *shipped.entry((f.from.as_str(), f.to.as_str(), f.period)).or_insert(0.0) += volume[f.vaccine.as_str()] * f.doses;
    }
    let mut notes = Vec::new();
    let mut transport = Vec::new();
    for arc in instance.arcs.iter().filter(|a| a.kind == ArcKind::Land) {
        let Some(u) = arc.transport_capacity else { continue };
        if u <= 0.0 {
            notes.push(format!("land arc {} -> {} has zero capacity", arc.from, arc.to));
            continue;
        }
        for t in 1..=instance.horizon {
            let v = shipped.get(&(arc.from.as_str(), arc.to.as_str(), t)).copied().unwrap_or(0.0);
            transport.push(ArcUse {
                from: arc.from.clone(),
                to: arc.to.clone(),
                period: t,
                utilization: v / u,
            });
        }
    }

    let wastage = |from: &str, to: &str, kind: ArcKind, vaccine: &str| {
        instance
            .arcs
            .iter()
            .find(|a| a.kind == kind && a.from == from && a.to == to)
            .and_then(|a| a.transit_wastage.get(vaccine).copied())
            .unwrap_or(0.0)
    };
    // Left-hand side of the storage row per (node, period).
    let mut stored: HashMap<(&str, usize), f64> = HashMap::new();
    for s in &solution.inventory {
        *stored.entry((s.node.as_str(), s.period)).or_insert(0.0) += volume[s.vaccine.as_str()] * s.doses;
    }
    for f in &solution.land {
        let keep = 1.0 - wastage(&f.from, &f.to, ArcKind::Land, &f.vaccine);
        *stored.entry((f.to.as_str(), f.period + 1)).or_insert(0.0) += volume[f.vaccine.as_str()] * keep * f.doses;
    }
    for f in &solution.drone_flow {
        let keep = 1.0 - wastage(&f.from, &f.to, ArcKind::Drone, &f.vaccine);
        *stored.entry((f.to.as_str(), f.period)).or_insert(0.0) += volume[f.vaccine.as_str()] * keep * f.doses;
    }
    let mut storage = Vec::new();
    for n in instance.nodes.iter().filter(|n| n.kind.has_storage()) {
        let Some(u) = n.storage_capacity else { continue };
        if u <= 0.0 {
            notes.push(format!("facility {} has zero storage capacity", n.id));
            continue;
        }
        let (mut peak, mut at) = (0.0, 1);
        for t in 1..=instance.horizon {
            let v = stored.get(&(n.id.as_str(), t)).copied().unwrap_or(0.0) / u;
            if v > peak {
                peak = v;
                at = t;
            }
        }
        storage.push(StoreUse {
            node: n.id.clone(),
            utilization: peak,
            peak_period: at,
        });
    }
    let mut transport_histogram = [0; BUCKETS];
    for a in &transport {
        transport_histogram[bucket(a.utilization)] += 1;
    }
    let mut storage_histogram = [0; BUCKETS];
    for s in &storage {
        storage_histogram[bucket(s.utilization)] += 1;
    }
    Utilization {
        transport,
        storage,
        transport_histogram,
        storage_histogram,
        notes,
    }
}
