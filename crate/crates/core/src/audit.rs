//! Re-checks a solution against the instance data, independently of the
//! matrix the solver saw.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::model::{ArcKind, Instance, NodeKind, Solution};

pub const AUDIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditReport {
    /// Largest residual per constraint family, relative to `max(1, scale)`.
    pub worst: BTreeMap<String, f64>,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, family: &str, what: impl FnOnce() -> String, excess: f64, scale: f64) {
        let rel = excess.max(0.0) / scale.max(1.0);
        let w = self.worst.entry(family.to_string()).or_insert(0.0);
        *w = w.max(rel);
        if rel > AUDIT_TOL {
            self.violations.push(format!("{family} {}: off by {excess:e}", what()));
        }
    }
}

type Key3<'a> = (&'a str, &'a str, usize);

/// Checks inventory and outreach balances, storage, land and drone-hour
/// capacities, budget, fleet, demand and non-negativity.
pub fn audit_solution(solution: &Solution, instance: &Instance) -> AuditReport {
    let mut r = AuditReport::default();
    let vac = &instance.vaccines;
    let horizon = instance.horizon;

    let arc_of: HashMap<(ArcKind, &str, &str), &crate::model::Arc> = instance
        .arcs
        .iter()
        .map(|a| ((a.kind, a.from.as_str(), a.to.as_str()), a))
        .collect();
    let mut land: HashMap<(&str, &str, &str, usize), f64> = HashMap::new();
    let mut drone: HashMap<(&str, &str, &str, usize), f64> = HashMap::new();
    for (kind, flows, map) in [
        (ArcKind::Land, &solution.land, &mut land),
        (ArcKind::Drone, &solution.drone_flow, &mut drone),
    ] {
        for f in flows {
            if !arc_of.contains_key(&(kind, f.from.as_str(), f.to.as_str())) {
                r.violations.push(format!("flow on missing {kind:?} arc {} -> {}", f.from, f.to));
            }
            r.record("nonnegativity", || format!("flow {} -> {}", f.from, f.to), -f.doses, 1.0);
            *map.entry((f.from.as_str(), f.to.as_str(), f.vaccine.as_str(), f.period)).or_insert(0.0) += f.doses;
        }
    }
    let mut stock: HashMap<Key3, f64> = HashMap::new();
    for s in &solution.inventory {
        r.record("nonnegativity", || format!("inventory at {}", s.node), -s.doses, 1.0);
        *stock.entry((s.node.as_str(), s.vaccine.as_str(), s.period)).or_insert(0.0) += s.doses;
    }
    let mut given_at: HashMap<Key3, f64> = HashMap::new();
    let mut given_to: HashMap<(&str, &str), f64> = HashMap::new();
    for x in &solution.administered {
        r.record("nonnegativity", || format!("doses at {}", x.center), -x.doses, 1.0);
        *given_at.entry((x.center.as_str(), x.vaccine.as_str(), x.period)).or_insert(0.0) += x.doses;
        let unit = x.community.as_deref().unwrap_or(&x.center);
        *given_to.entry((unit, x.vaccine.as_str())).or_insert(0.0) += x.doses;
    }
    let mut supply: HashMap<(&str, usize), f64> = HashMap::new();
    let supplies = instance.effective_supply();
    for s in &supplies {
        *supply.entry((s.vaccine.as_str(), s.period)).or_insert(0.0) += s.doses;
    }
    let mut in_arcs: HashMap<&str, Vec<&crate::model::Arc>> = HashMap::new();
    let mut out_arcs: HashMap<&str, Vec<&crate::model::Arc>> = HashMap::new();
    for a in instance.arcs.iter().filter(|a| a.kind != ArcKind::Access) {
        in_arcs.entry(a.to.as_str()).or_default().push(a);
        out_arcs.entry(a.from.as_str()).or_default().push(a);
    }
    let flow = |a: &crate::model::Arc, l: &str, t: usize| -> f64 {
        let map = if a.kind == ArcKind::Land { &land } else { &drone };
        map.get(&(a.from.as_str(), a.to.as_str(), l, t)).copied().unwrap_or(0.0)
    };
    // Doses of `l` arriving at `node` in period `t`, net of transit loss.
    let arriving = |node: &str, l: &str, t: usize| -> f64 {
        in_arcs
            .get(node)
            .map(|arcs| {
                arcs.iter()
                    .map(|a| {
                        let keep = 1.0 - a.transit_wastage.get(l).copied().unwrap_or(0.0);
                        match a.kind {
                            ArcKind::Land if t > 1 => keep * flow(a, l, t - 1),
                            ArcKind::Drone => keep * flow(a, l, t),
                            _ => 0.0,
                        }
                    })
                    .sum()
            })
            .unwrap_or(0.0)
    };
    let leaving = |node: &str, l: &str, t: usize| -> f64 {
        out_arcs
            .get(node)
            .map(|arcs| arcs.iter().map(|a| flow(a, l, t)).sum())
            .unwrap_or(0.0)
    };

    for n in &instance.nodes {
        let id = n.id.as_str();
        if n.kind.has_storage() {
            for v in vac {
                let l = v.id.as_str();
                let wb = instance.storage_wastage(n, l);
                let wo = instance.ovw(n, v);
                for t in 1..=horizon {
                    let i_t = stock.get(&(id, l, t)).copied().unwrap_or(0.0);
                    let i_prev = if t > 1 { stock.get(&(id, l, t - 1)).copied().unwrap_or(0.0) } else { 0.0 };
                    let out = leaving(id, l, t);
                    let inn = arriving(id, l, t);
                    let used = given_at.get(&(id, l, t)).copied().unwrap_or(0.0) / (1.0 - wo);
                    let injected = if n.kind == NodeKind::CentralStore {
                        supply.get(&(l, t)).copied().unwrap_or(0.0)
                    } else {
                        0.0
                    };
                    let lhs = i_t - (1.0 - wb) * i_prev + out - inn + used;
                    let scale = i_t.abs() + i_prev.abs() + out + inn + used + injected;
                    r.record("inventory_balance", || format!("{id}/{l}/{t}"), (lhs - injected).abs(), scale);
                }
            }
            if let Some(u) = n.storage_capacity {
                for t in 1..=horizon {
                    let held: f64 = vac
                        .iter()
                        .map(|v| {
                            let l = v.id.as_str();
                            v.dose_volume_cm3 * (stock.get(&(id, l, t)).copied().unwrap_or(0.0) + arriving(id, l, t))
                        })
                        .sum();
                    r.record("storage", || format!("{id}/{t}"), held - u, u);
                }
            }
        } else if n.kind == NodeKind::OutreachPost {
            for v in vac {
                let l = v.id.as_str();
                let wo = instance.ovw(n, v);
                for t in 1..=horizon {
                    let inn = arriving(id, l, t);
                    let used = given_at.get(&(id, l, t)).copied().unwrap_or(0.0) / (1.0 - wo);
                    r.record("outreach_balance", || format!("{id}/{l}/{t}"), (inn - used).abs(), inn + used);
                }
            }
        } else if vac
            .iter()
            .any(|v| (1..=horizon).any(|t| given_at.contains_key(&(id, v.id.as_str(), t))))
        {
            r.violations.push(format!("doses administered at non-center {id}"));
        }
    }

    for a in instance.arcs.iter().filter(|a| a.kind == ArcKind::Land) {
        let Some(u) = a.transport_capacity else { continue };
        for t in 1..=horizon {
            let carried: f64 = vac.iter().map(|v| v.dose_volume_cm3 * flow(a, &v.id, t)).sum();
            r.record("land", || format!("{} -> {} /{t}", a.from, a.to), carried - u, u);
        }
    }

    let hubs: BTreeSet<&str> = solution.hubs.iter().map(|s| s.as_str()).collect();
    let mut used: HashMap<(&str, usize), f64> = HashMap::new();
    for d in &solution.drones_used {
        *used.entry((d.node.as_str(), d.period)).or_insert(0.0) += d.drones as f64;
    }
    let dspec = &instance.drone;
    for n in instance.nodes.iter().filter(|n| n.kind.has_storage()) {
        let id = n.id.as_str();
        for t in 1..=horizon {
            let hours: f64 = out_arcs
                .get(id)
                .map(|arcs| {
                    arcs.iter()
                        .filter(|a| a.kind == ArcKind::Drone)
                        .map(|a| {
                            let trip = 2.0 * a.distance_km / dspec.speed_kmh;
                            vac.iter()
                                .map(|v| (v.dose_volume_cm3 + v.diluent_volume_cm3) / dspec.payload * trip * flow(a, &v.id, t))
                                .sum::<f64>()
                        })
                        .sum()
                })
                .unwrap_or(0.0);
            let avail = dspec.hours_per_period * used.get(&(id, t)).copied().unwrap_or(0.0);
            r.record("drone_hours", || format!("{id}/{t}"), hours - avail, avail);
            let v = used.get(&(id, t)).copied().unwrap_or(0.0);
            let cap = if hubs.contains(id) { instance.max_drones() as f64 } else { 0.0 };
            r.record("hub_link", || format!("{id}/{t}"), v - cap, cap);
        }
    }
    for t in 1..=horizon {
        let total: f64 = used.iter().filter(|(k, _)| k.1 == t).map(|(_, v)| v).sum();
        r.record("fleet", || format!("{t}"), total - solution.drones as f64, total);
    }
    let spent: f64 = solution
        .hubs
        .iter()
        .map(|h| instance.node(h).and_then(|n| n.hub_cost).unwrap_or(f64::INFINITY))
        .sum::<f64>()
        + dspec.unit_cost * solution.drones as f64;
    r.record("budget", || "total".into(), spent - instance.budget, instance.budget);

    let mut demand: HashMap<(&str, &str), f64> = HashMap::new();
    for d in &instance.demand {
        *demand.entry((d.node.as_str(), d.vaccine.as_str())).or_insert(0.0) += d.doses;
    }
    for (&(unit, l), &x) in &given_to {
        let cap = demand.get(&(unit, l)).copied().unwrap_or(0.0);
        r.record("demand", || format!("{unit}/{l}"), x - cap, cap);
    }
    r
}
