//! Domain types for a vaccine cold chain network.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::geo::{self, CoordSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    CentralStore,
    RegionalCenter,
    DistrictStore,
    Clinic,
    OutreachPost,
    Community,
}

impl NodeKind {
    /// Facilities with cold storage (the set of inventory-holding nodes).
    pub fn has_storage(self) -> bool {
        matches!(
            self,
            NodeKind::CentralStore | NodeKind::RegionalCenter | NodeKind::DistrictStore | NodeKind::Clinic
        )
    }

    /// Clinics and outreach posts administer vaccines.
    pub fn is_center(self) -> bool {
        matches!(self, NodeKind::Clinic | NodeKind::OutreachPost)
    }

    /// Position in the distribution hierarchy, 0 at the top.
    pub fn tier(self) -> u8 {
        match self {
            NodeKind::CentralStore => 0,
            NodeKind::RegionalCenter => 1,
            NodeKind::DistrictStore => 2,
            NodeKind::Clinic | NodeKind::OutreachPost => 3,
            NodeKind::Community => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    /// `[x, y]` in km (planar) or `[lat, lon]` in degrees (geographic).
    pub position: [f64; 2],
    /// Cold storage volume in cm³; `None` means unlimited.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::io::units::opt_volume")]
    pub storage_capacity: Option<f64>,
    /// Cost of opening a drone hub here; `None` means not a hub candidate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hub_cost: Option<f64>,
    /// Per-vaccine storage loss fraction per period; missing entries are 0.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub storage_wastage: BTreeMap<String, f64>,
    /// Per-vaccine open-vial wastage overriding the vaccine default.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ovw_rate: BTreeMap<String, f64>,
    /// For centers: the community the center is located in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host_community: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    /// Informational head count for communities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<f64>,
}

impl Node {
    pub fn new(id: impl Into<String>, kind: NodeKind, position: [f64; 2]) -> Self {
        Self {
            id: id.into(),
            kind,
            position,
            storage_capacity: None,
            hub_cost: None,
            storage_wastage: BTreeMap::new(),
            ovw_rate: BTreeMap::new(),
            host_community: None,
            region: None,
            population: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    Land,
    Drone,
    Access,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arc {
    pub kind: ArcKind,
    pub from: String,
    pub to: String,
    pub distance_km: f64,
    /// Land vehicle volume per period in cm³; `None` means unlimited.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::io::units::opt_volume")]
    pub transport_capacity: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub transit_wastage: BTreeMap<String, f64>,
}

impl Arc {
    pub fn new(kind: ArcKind, from: impl Into<String>, to: impl Into<String>, distance_km: f64) -> Self {
        Self {
            kind,
            from: from.into(),
            to: to.into(),
            distance_km,
            transport_capacity: None,
            transit_wastage: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageMode {
    Refrigerated,
    Frozen,
    Either,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vaccine {
    pub id: String,
    pub doses_per_regimen: u32,
    pub dose_volume_cm3: f64,
    #[serde(default)]
    pub diluent_volume_cm3: f64,
    /// Default open-vial wastage; nodes may override it.
    #[serde(default)]
    pub ovw_rate: f64,
    #[serde(default = "one")]
    pub vial_size: u32,
    pub storage_mode: StorageMode,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroneSpec {
    #[serde(default)]
    pub name: String,
    #[serde(with = "crate::io::units::volume")]
    pub payload: f64,
    pub speed_kmh: f64,
    /// One-way range.
    pub range_km: f64,
    pub unit_cost: f64,
    pub hours_per_period: f64,
}

/// Doses of one vaccine demanded at a node in a period (periods start at 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Demand {
    pub node: String,
    pub vaccine: String,
    pub period: usize,
    pub doses: f64,
}

/// Doses injected at the central store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Supply {
    pub vaccine: String,
    pub period: usize,
    pub doses: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    #[serde(default)]
    pub name: String,
    pub coordinates: CoordSystem,
    pub nodes: Vec<Node>,
    #[serde(default)]
    pub arcs: Vec<Arc>,
    pub vaccines: Vec<Vaccine>,
    #[serde(default)]
    pub demand: Vec<Demand>,
    /// Demand that no center can reach; counted in community-level ratios only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unassigned_demand: Vec<Demand>,
    pub horizon: usize,
    pub budget: f64,
    pub drone: DroneSpec,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Explicit supply schedule; `None` injects the default described at
    /// [`Instance::effective_supply`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub central_supply: Option<Vec<Supply>>,
    #[serde(default = "default_radius")]
    pub access_radius_km: f64,
}

pub fn default_epsilon() -> f64 {
    1e-3
}

pub fn default_radius() -> f64 {
    5.0
}

impl Instance {
    /// Maximum number of drones the budget can buy.
    pub fn max_drones(&self) -> u64 {
        if self.drone.unit_cost <= 0.0 || self.budget <= 0.0 {
            return 0;
        }
        (self.budget / self.drone.unit_cost + 1e-9).floor() as u64
    }

    pub fn node_index(&self) -> HashMap<&str, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect()
    }

    pub fn vaccine_index(&self) -> HashMap<&str, usize> {
        self.vaccines.iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn central_store(&self) -> Option<&Node> {
        self.nodes.iter().find(|n| n.kind == NodeKind::CentralStore)
    }

    pub fn distance(&self, a: &Node, b: &Node) -> f64 {
        geo::distance(self.coordinates, a.position, b.position)
    }

    pub fn storage_wastage(&self, node: &Node, vaccine: &str) -> f64 {
        node.storage_wastage.get(vaccine).copied().unwrap_or(0.0)
    }

    pub fn ovw(&self, node: &Node, vaccine: &Vaccine) -> f64 {
        node.ovw_rate.get(&vaccine.id).copied().unwrap_or(vaccine.ovw_rate)
    }

    /// Total demand per `(vaccine, period)` including unassigned demand.
    pub fn demand_totals(&self) -> BTreeMap<(String, usize), f64> {
        let mut out = BTreeMap::new();
        for d in self.demand.iter().chain(&self.unassigned_demand) {
            *out.entry((d.vaccine.clone(), d.period)).or_insert(0.0) += d.doses;
        }
        out
    }

    /// The supply schedule used by the models. Without an explicit schedule,
    /// each vaccine's horizon demand inflated by average wastage along a
    /// four-hop chain is injected in period 1.
    pub fn effective_supply(&self) -> Vec<Supply> {
        if let Some(s) = &self.central_supply {
            return s.clone();
        }
        let mut out = Vec::new();
        for v in &self.vaccines {
            let total: f64 = self.demand.iter().filter(|d| d.vaccine == v.id).map(|d| d.doses).sum();
            if total <= 0.0 {
                continue;
            }
            let facilities: Vec<&Node> = self.nodes.iter().filter(|n| n.kind.has_storage()).collect();
            let centers: Vec<&Node> = self.nodes.iter().filter(|n| n.kind.is_center()).collect();
            let land: Vec<&Arc> = self.arcs.iter().filter(|a| a.kind == ArcKind::Land).collect();
            let mean = |xs: &mut dyn Iterator<Item = f64>| {
                let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
                if n == 0 { 0.0 } else { s / n as f64 }
            };
            let wb = mean(&mut facilities.iter().map(|n| self.storage_wastage(n, &v.id)));
            let wt = mean(&mut land.iter().map(|a| a.transit_wastage.get(&v.id).copied().unwrap_or(0.0)));
            let wo = mean(&mut centers.iter().map(|n| self.ovw(n, v)));
            let retained = (1.0 - wb).powi(self.horizon as i32) * (1.0 - wt).powi(4) * (1.0 - wo);
            out.push(Supply {
                vaccine: v.id.clone(),
                period: 1,
                doses: total / retained.max(1e-9),
            });
        }
        out
    }

    pub fn hub_candidates(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.hub_cost.is_some() && n.kind.has_storage())
    }
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolutionStatus {
    Optimal,
    Feasible { gap: f64 },
    Infeasible,
    Unbounded,
    /// A limit stopped the search before a feasible point was found.
    NoSolution,
}

impl SolutionStatus {
    pub fn has_point(self) -> bool {
        matches!(self, SolutionStatus::Optimal | SolutionStatus::Feasible { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowValue {
    pub from: String,
    pub to: String,
    pub vaccine: String,
    pub period: usize,
    pub doses: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockValue {
    pub node: String,
    pub vaccine: String,
    pub period: usize,
    pub doses: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdministeredValue {
    pub center: String,
    /// Origin community for community-level models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub community: Option<String>,
    pub vaccine: String,
    pub period: usize,
    pub doses: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DronesUsed {
    pub node: String,
    pub period: usize,
    pub drones: u64,
}

/// Values of a solved model, keyed by node ids. Only nonzero entries are
/// listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Solution {
    pub model: String,
    pub status: Option<SolutionStatus>,
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    /// Open drone hubs (Y = 1).
    pub hubs: Vec<String>,
    /// Drones purchased (Z).
    pub drones: u64,
    pub drones_used: Vec<DronesUsed>,
    pub land: Vec<FlowValue>,
    pub drone_flow: Vec<FlowValue>,
    pub inventory: Vec<StockValue>,
    pub administered: Vec<AdministeredValue>,
    /// Fully-immunized bound per demand node.
    pub immunized: BTreeMap<String, f64>,
    pub nodes_explored: usize,
}

impl Solution {
    pub fn total_administered(&self) -> f64 {
        self.administered.iter().map(|x| x.doses).sum()
    }
}

/// One broken invariant with the JSON pointer of the offending field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}: {}", v.path, v.message)?;
        }
        Ok(())
    }
}

fn check_fraction(report: &mut ValidationReport, path: String, value: f64, vaccines: &HashMap<&str, usize>, key: &str) {
    if !vaccines.contains_key(key) {
        report.push(path.clone(), format!("unknown vaccine {key:?}"));
    }
    if !(0.0..1.0).contains(&value) {
        report.push(path, format!("fraction {value} outside [0, 1)"));
    }
}

/// Checks every structural invariant of `instance`.
pub fn validate_instance(instance: &Instance) -> ValidationReport {
    let mut r = ValidationReport::default();
    let vaccines = instance.vaccine_index();
    let mut ids: HashMap<&str, usize> = HashMap::new();

    let centrals = instance.nodes.iter().filter(|n| n.kind == NodeKind::CentralStore).count();
    if centrals != 1 {
        r.push("/nodes", format!("expected exactly one central store, found {centrals}"));
    }
    for (i, n) in instance.nodes.iter().enumerate() {
        let p = format!("/nodes/{i}");
        if n.id.is_empty() {
            r.push(format!("{p}/id"), "empty id");
        }
        if ids.insert(&n.id, i).is_some() {
            r.push(format!("{p}/id"), format!("duplicate node id {:?}", n.id));
        }
        if !n.position.iter().all(|c| c.is_finite()) {
            r.push(format!("{p}/position"), "non-finite coordinate");
        }
        if instance.coordinates == CoordSystem::Geographic
            && (n.position[0].abs() > 90.0 || n.position[1].abs() > 180.0)
        {
            r.push(format!("{p}/position"), "latitude/longitude out of range");
        }
        match n.storage_capacity {
            Some(u) if !n.kind.has_storage() && u != 0.0 => {
                r.push(format!("{p}/storage_capacity"), "only storage facilities hold inventory")
            }
            Some(u) if !(u >= 0.0 && u.is_finite()) => {
                r.push(format!("{p}/storage_capacity"), format!("capacity {u} must be a non-negative number"))
            }
            _ => {}
        }
        if let Some(c) = n.hub_cost {
            if !n.kind.has_storage() {
                r.push(format!("{p}/hub_cost"), "hubs need a storage facility");
            }
            if !(c >= 0.0 && c.is_finite()) {
                r.push(format!("{p}/hub_cost"), format!("cost {c} must be a non-negative number"));
            }
        }
        for (k, &w) in &n.storage_wastage {
            check_fraction(&mut r, format!("{p}/storage_wastage/{k}"), w, &vaccines, k);
        }
        for (k, &w) in &n.ovw_rate {
            check_fraction(&mut r, format!("{p}/ovw_rate/{k}"), w, &vaccines, k);
            if w >= 1.0 {
                r.push(format!("{p}/ovw_rate/{k}"), "division by zero in OVW correction");
            }
        }
    }
    for (i, n) in instance.nodes.iter().enumerate() {
        if let Some(h) = &n.host_community {
            match ids.get(h.as_str()).map(|&j| instance.nodes[j].kind) {
                Some(NodeKind::Community) => {}
                _ => r.push(format!("/nodes/{i}/host_community"), format!("{h:?} is not a community")),
            }
        }
    }

    for (i, v) in instance.vaccines.iter().enumerate() {
        let p = format!("/vaccines/{i}");
        if v.doses_per_regimen == 0 {
            r.push(format!("{p}/doses_per_regimen"), "regimen needs at least one dose");
        }
        if !(v.dose_volume_cm3 > 0.0 && v.dose_volume_cm3.is_finite()) {
            r.push(format!("{p}/dose_volume_cm3"), "dose volume must be positive");
        }
        if !(v.diluent_volume_cm3 >= 0.0 && v.diluent_volume_cm3.is_finite()) {
            r.push(format!("{p}/diluent_volume_cm3"), "diluent volume must be non-negative");
        }
        if v.ovw_rate >= 1.0 {
            r.push(format!("{p}/ovw_rate"), "division by zero in OVW correction");
        } else if !(v.ovw_rate >= 0.0) {
            r.push(format!("{p}/ovw_rate"), "fraction outside [0, 1)");
        }
        if v.vial_size == 0 {
            r.push(format!("{p}/vial_size"), "vial size must be positive");
        }
        if instance.vaccines[..i].iter().any(|w| w.id == v.id) {
            r.push(format!("{p}/id"), format!("duplicate vaccine id {:?}", v.id));
        }
    }

    let d = &instance.drone;
    for (field, value) in [
        ("payload", d.payload),
        ("speed_kmh", d.speed_kmh),
        ("range_km", d.range_km),
        ("unit_cost", d.unit_cost),
        ("hours_per_period", d.hours_per_period),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            r.push(format!("/drone/{field}"), format!("{field} must be strictly positive"));
        }
    }
    if instance.horizon == 0 {
        r.push("/horizon", "horizon must be positive");
    }
    if !(instance.budget >= 0.0 && instance.budget.is_finite()) {
        r.push("/budget", "budget must be non-negative");
    }
    if !(instance.epsilon > 0.0 && instance.epsilon < 1.0) {
        r.push("/epsilon", "epsilon must lie in (0, 1)");
    }
    if !(instance.access_radius_km > 0.0) {
        r.push("/access_radius_km", "radius must be positive");
    }

    let mut seen_arcs = std::collections::HashSet::new();
    for (i, a) in instance.arcs.iter().enumerate() {
        let p = format!("/arcs/{i}");
        let from = ids.get(a.from.as_str()).map(|&j| &instance.nodes[j]);
        let to = ids.get(a.to.as_str()).map(|&j| &instance.nodes[j]);
        let (Some(from), Some(to)) = (from, to) else {
            r.push(p, format!("arc {} -> {} references an unknown node", a.from, a.to));
            continue;
        };
        if !seen_arcs.insert((a.kind, a.from.as_str(), a.to.as_str())) {
            r.push(p.clone(), "duplicate arc");
        }
        if a.from == a.to {
            r.push(p.clone(), "self loop");
        }
        if !(a.distance_km >= 0.0 && a.distance_km.is_finite()) {
            r.push(format!("{p}/distance_km"), "distance must be non-negative");
        }
        if let Some(u) = a.transport_capacity {
            if a.kind != ArcKind::Land {
                r.push(format!("{p}/transport_capacity"), "only land arcs carry a vehicle capacity");
            } else if !(u >= 0.0 && u.is_finite()) {
                r.push(format!("{p}/transport_capacity"), format!("capacity {u} must be non-negative"));
            }
        }
        for (k, &w) in &a.transit_wastage {
            check_fraction(&mut r, format!("{p}/transit_wastage/{k}"), w, &vaccines, k);
        }
        match a.kind {
            ArcKind::Land => {
                let ok_to = to.kind.has_storage() || to.kind == NodeKind::OutreachPost;
                if !from.kind.has_storage() || !ok_to || to.kind.tier() < from.kind.tier() {
                    r.push(p, "land arcs run downstream between storage facilities or to outreach posts");
                }
            }
            ArcKind::Drone => {
                if !from.kind.has_storage() || to.kind == NodeKind::Community {
                    r.push(p.clone(), "drone arcs start at storage facilities and end at a facility or post");
                }
                if a.distance_km > d.range_km + 1e-9 {
                    r.push(p, "drone arc exceeds range");
                }
            }
            ArcKind::Access => {
                if from.kind != NodeKind::Community || !to.kind.is_center() {
                    r.push(p.clone(), "access arcs link a community to a clinic or outreach post");
                }
                if a.distance_km > instance.access_radius_km + 1e-9 {
                    r.push(p, "access arc exceeds the access radius");
                }
            }
        }
        if !a.transit_wastage.is_empty() && a.kind == ArcKind::Access {
            r.push(format!("/arcs/{i}/transit_wastage"), "access arcs carry no wastage");
        }
    }

    for (field, list) in [("demand", &instance.demand), ("unassigned_demand", &instance.unassigned_demand)] {
        for (i, dm) in list.iter().enumerate() {
            let p = format!("/{field}/{i}");
            match ids.get(dm.node.as_str()).map(|&j| instance.nodes[j].kind) {
                Some(NodeKind::Community) => {}
                Some(k) if k.is_center() && field == "demand" => {}
                _ => r.push(format!("{p}/node"), format!("demand must sit on a community or center, got {:?}", dm.node)),
            }
            if !vaccines.contains_key(dm.vaccine.as_str()) {
                r.push(format!("{p}/vaccine"), format!("unknown vaccine {:?}", dm.vaccine));
            }
            if dm.period == 0 || dm.period > instance.horizon {
                r.push(format!("{p}/period"), format!("period {} outside 1..={}", dm.period, instance.horizon));
            }
            if !(dm.doses >= 0.0 && dm.doses.is_finite()) {
                r.push(format!("{p}/doses"), "doses must be non-negative");
            }
        }
    }
    if let Some(supply) = &instance.central_supply {
        for (i, s) in supply.iter().enumerate() {
            let p = format!("/central_supply/{i}");
            if !vaccines.contains_key(s.vaccine.as_str()) {
                r.push(format!("{p}/vaccine"), format!("unknown vaccine {:?}", s.vaccine));
            }
            if s.period == 0 || s.period > instance.horizon {
                r.push(format!("{p}/period"), "period outside the horizon");
            }
            if !(s.doses >= 0.0 && s.doses.is_finite()) {
                r.push(format!("{p}/doses"), "doses must be non-negative");
            }
        }
    }
    r
}
