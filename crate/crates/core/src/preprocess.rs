//! Outreach-post selection by set cover, demand aggregation onto
//! vaccination centers, and construction of the reduced network.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vaxnet_milp::{solve_milp, SolveOptions, SolveStatus};

use crate::formulation::setcover::build_set_cover;
use crate::formulation::VarKey;
use crate::model::{Arc, ArcKind, Demand, Instance, Node, NodeKind};

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("access radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("node {0:?} has a non-finite position")]
    BadPosition(String),
    #[error("community {0:?} has no accessible vaccination center")]
    Uncovered(String),
    #[error("set cover infeasible: community {0:?} has no candidate")]
    Malformed(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

/// Reachability between candidate vaccination-center sites and communities.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessIndicator {
    /// Candidate sites: every community, then every clinic with no host community.
    pub candidates: Vec<String>,
    /// Which candidates are standalone clinics (always open).
    pub candidate_is_clinic: Vec<bool>,
    pub communities: Vec<String>,
    /// `covers[i][k]` is true when candidate `i` is within the radius of community `k`.
    pub covers: Vec<Vec<bool>>,
    pub radius_km: f64,
}

impl AccessIndicator {
    /// Builds an indicator from an explicit matrix with community candidates only.
    pub fn from_matrix(communities: Vec<String>, covers: Vec<Vec<bool>>) -> Self {
        let n = communities.len();
        Self {
            candidates: communities.clone(),
            candidate_is_clinic: vec![false; n],
            communities,
            covers,
            radius_km: f64::NAN,
        }
    }

    pub fn candidate_index(&self, id: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c == id)
    }

    pub fn covered_by(&self, candidate: usize) -> impl Iterator<Item = usize> + '_ {
        self.covers[candidate]
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(k, _)| k)
    }
}

/// `a_ik = 1` iff the distance between candidate `i` and community `k` is at most `radius_km`.
pub fn build_access_indicator(instance: &Instance, radius_km: f64) -> Result<AccessIndicator, PreprocessError> {
    if !(radius_km > 0.0 && radius_km.is_finite()) {
        return Err(PreprocessError::BadRadius(radius_km));
    }
    for n in &instance.nodes {
        if !n.position.iter().all(|c| c.is_finite()) {
            return Err(PreprocessError::BadPosition(n.id.clone()));
        }
    }
    let communities: Vec<&Node> = instance.nodes.iter().filter(|n| n.kind == NodeKind::Community).collect();
    let standalone: Vec<&Node> = instance
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Clinic && n.host_community.is_none())
        .collect();
    let mut candidates = Vec::new();
    let mut is_clinic = Vec::new();
    let mut covers = Vec::new();
    for &c in communities.iter().chain(&standalone) {
        candidates.push(c.id.clone());
        is_clinic.push(c.kind == NodeKind::Clinic);
        covers.push(
            communities
                .iter()
                .map(|k| instance.distance(c, k) <= radius_km)
                .collect(),
        );
    }
    Ok(AccessIndicator {
        candidates,
        candidate_is_clinic: is_clinic,
        communities: communities.iter().map(|n| n.id.clone()).collect(),
        covers,
        radius_km,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverMethod {
    Exact,
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutreachSelection {
    /// Community candidates with `W = 1`, clinic communities included.
    pub hosts: BTreeSet<String>,
    /// Standalone clinics, open by definition.
    pub clinics: BTreeSet<String>,
    pub method: CoverMethod,
    /// True when the exact solve hit its node limit and greedy was used.
    pub fell_back: bool,
}

impl OutreachSelection {
    /// Number of open centers counted by the cover objective.
    pub fn size(&self) -> usize {
        self.hosts.len() + self.clinics.len()
    }
}

/// Indices of candidates that must be open.
fn fixed_candidates(indicator: &AccessIndicator, clinic_communities: &BTreeSet<String>) -> Vec<bool> {
    indicator
        .candidates
        .iter()
        .zip(&indicator.candidate_is_clinic)
        .map(|(id, &clinic)| clinic || clinic_communities.contains(id))
        .collect()
}

fn selection_from(indicator: &AccessIndicator, chosen: &[bool], method: CoverMethod, fell_back: bool) -> OutreachSelection {
    let mut hosts = BTreeSet::new();
    let mut clinics = BTreeSet::new();
    for (i, &on) in chosen.iter().enumerate() {
        if on {
            if indicator.candidate_is_clinic[i] {
                clinics.insert(indicator.candidates[i].clone());
            } else {
                hosts.insert(indicator.candidates[i].clone());
            }
        }
    }
    OutreachSelection {
        hosts,
        clinics,
        method,
        fell_back,
    }
}

fn check_coverable(indicator: &AccessIndicator) -> Result<(), PreprocessError> {
    for (k, id) in indicator.communities.iter().enumerate() {
        if !indicator.covers.iter().any(|row| row[k]) {
            return Err(PreprocessError::Malformed(id.clone()));
        }
    }
    Ok(())
}

/// Max-coverage greedy; ties go to the lexicographically smallest id.
pub fn greedy_cover(indicator: &AccessIndicator, clinic_communities: &BTreeSet<String>) -> Result<OutreachSelection, PreprocessError> {
    check_coverable(indicator)?;
    let mut chosen = fixed_candidates(indicator, clinic_communities);
    let mut covered = vec![false; indicator.communities.len()];
    for (i, &on) in chosen.iter().enumerate() {
        if on {
            for k in indicator.covered_by(i) {
                covered[k] = true;
            }
        }
    }
    while covered.iter().any(|c| !c) {
        let mut best: Option<(usize, usize)> = None;
        for i in 0..indicator.candidates.len() {
            if chosen[i] {
                continue;
            }
            let gain = indicator.covered_by(i).filter(|&k| !covered[k]).count();
            if gain == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((b, g)) => gain > g || (gain == g && indicator.candidates[i] < indicator.candidates[b]),
            };
            if better {
                best = Some((i, gain));
            }
        }
        let (i, _) = best.expect("coverable instance always has a useful candidate");
        chosen[i] = true;
        for k in indicator.covered_by(i) {
            covered[k] = true;
        }
    }
    Ok(selection_from(indicator, &chosen, CoverMethod::Greedy, false))
}

/// Minimum cover by the MILP engine, falling back to greedy when
/// `node_limit` stops the search.
pub fn exact_cover(
    indicator: &AccessIndicator,
    clinic_communities: &BTreeSet<String>,
    node_limit: usize,
) -> Result<OutreachSelection, PreprocessError> {
    check_coverable(indicator)?;
    let (problem, vars) = build_set_cover(indicator, clinic_communities);
    let opts = SolveOptions {
        node_limit,
        relative_gap: 0.0,
        absolute_gap: 1e-6,
        ..Default::default()
    };
    let result = solve_milp(&problem, &opts).map_err(|e| PreprocessError::Solver(e.to_string()))?;
    match result.status {
        SolveStatus::Optimal => {
            let chosen: Vec<bool> = (0..indicator.candidates.len())
                .map(|i| vars.col(&VarKey::W(i)).is_some_and(|j| result.x[j] > 0.5))
                .collect();
            Ok(selection_from(indicator, &chosen, CoverMethod::Exact, false))
        }
        SolveStatus::Infeasible => Err(PreprocessError::Solver("set cover reported infeasible".into())),
        _ => {
            warn!("set cover node limit {node_limit} reached; using greedy cover");
            let mut sel = greedy_cover(indicator, clinic_communities)?;
            sel.fell_back = true;
            Ok(sel)
        }
    }
}

pub fn select_outreach_hosts(
    indicator: &AccessIndicator,
    clinic_communities: &BTreeSet<String>,
    method: CoverMethod,
) -> Result<OutreachSelection, PreprocessError> {
    match method {
        CoverMethod::Exact => exact_cover(indicator, clinic_communities, 20_000),
        CoverMethod::Greedy => greedy_cover(indicator, clinic_communities),
    }
}

/// Communities that host at least one clinic.
pub fn clinic_communities(instance: &Instance) -> BTreeSet<String> {
    instance
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Clinic)
        .filter_map(|n| n.host_community.clone())
        .collect()
}

/// Replaces all access arcs with community → center arcs within the radius.
pub fn rebuild_access_arcs(instance: &mut Instance) {
    instance.arcs.retain(|a| a.kind != ArcKind::Access);
    let mut arcs = Vec::new();
    for k in instance.nodes.iter().filter(|n| n.kind == NodeKind::Community) {
        for c in instance.nodes.iter().filter(|n| n.kind.is_center()) {
            let d = instance.distance(k, c);
            if d <= instance.access_radius_km {
                arcs.push(Arc::new(ArcKind::Access, &k.id, &c.id, d));
            }
        }
    }
    instance.arcs.extend(arcs);
}

/// Replaces all drone arcs with hub-candidate → center arcs within range.
pub fn rebuild_drone_arcs(instance: &mut Instance, transit_wastage: &BTreeMap<String, f64>) {
    instance.arcs.retain(|a| a.kind != ArcKind::Drone);
    let mut arcs = Vec::new();
    for h in instance.hub_candidates() {
        for c in instance.nodes.iter().filter(|n| n.kind.is_center() && n.id != h.id) {
            let d = instance.distance(h, c);
            if d <= instance.drone.range_km {
                let mut a = Arc::new(ArcKind::Drone, &h.id, &c.id, d);
                a.transit_wastage = transit_wastage.clone();
                arcs.push(a);
            }
        }
    }
    instance.arcs.extend(arcs);
}

/// Drone transit wastage currently in use (taken from the first drone arc).
pub fn drone_wastage(instance: &Instance) -> BTreeMap<String, f64> {
    instance
        .arcs
        .iter()
        .find(|a| a.kind == ArcKind::Drone)
        .map(|a| a.transit_wastage.clone())
        .unwrap_or_default()
}

fn fresh_id(taken: &BTreeSet<String>, base: String) -> String {
    if !taken.contains(&base) {
        return base;
    }
    (2..)
        .map(|k| format!("{base}-{k}"))
        .find(|c| !taken.contains(c))
        .expect("unbounded suffixes")
}

/// How new outreach posts receive vaccines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostLink {
    /// A land arc from the nearest district store plus drone arcs from hubs in range.
    #[default]
    NearestDistrict,
    /// Drone arcs only; posts stay dark without a drone network.
    DroneOnly,
}

/// Adds an outreach post at every selected host that has no clinic, wires
/// it by land to the nearest district store (nearest storage facility if
/// there is none) unless `link` is drone-only, and by drone to hubs in
/// range, and rebuilds access arcs.
pub fn place_outreach_posts(instance: &Instance, selection: &OutreachSelection, link: PostLink) -> Instance {
    let mut out = instance.clone();
    let with_clinic = clinic_communities(instance);
    let mut taken: BTreeSet<String> = out.nodes.iter().map(|n| n.id.clone()).collect();
    let drone_w = drone_wastage(instance);
    let mut new_nodes = Vec::new();
    let mut new_arcs = Vec::new();
    for host in &selection.hosts {
        if with_clinic.contains(host) {
            continue;
        }
        let Some(k) = instance.node(host) else { continue };
        if instance
            .nodes
            .iter()
            .any(|n| n.kind == NodeKind::OutreachPost && n.host_community.as_deref() == Some(host))
        {
            continue;
        }
        let id = fresh_id(&taken, format!("post-{host}"));
        taken.insert(id.clone());
        let mut post = Node::new(&id, NodeKind::OutreachPost, k.position);
        post.host_community = Some(host.clone());
        post.region = k.region.clone();
        let feeders: Vec<&Node> = {
            let districts: Vec<&Node> = instance.nodes.iter().filter(|n| n.kind == NodeKind::DistrictStore).collect();
            if districts.is_empty() {
                instance.nodes.iter().filter(|n| n.kind.has_storage()).collect()
            } else {
                districts
            }
        };
        let nearest = feeders.iter().min_by(|a, b| {
            instance
                .distance(a, k)
                .total_cmp(&instance.distance(b, k))
                .then(a.id.cmp(&b.id))
        });
        if let (Some(f), PostLink::NearestDistrict) = (nearest, link) {
            let mut arc = Arc::new(ArcKind::Land, &f.id, &id, instance.distance(f, k));
            // Same vehicle class as the feeder's other last-mile runs.
            if let Some(template) = instance
                .arcs
                .iter()
                .filter(|a| a.kind == ArcKind::Land && a.from == f.id)
                .find(|a| instance.node(&a.to).is_some_and(|n| n.kind.is_center()))
            {
                arc.transport_capacity = template.transport_capacity;
                arc.transit_wastage = template.transit_wastage.clone();
            }
            new_arcs.push(arc);
        }
        new_nodes.push(post);
    }
    out.nodes.extend(new_nodes);
    out.arcs.extend(new_arcs);
    rebuild_access_arcs(&mut out);
    let has_drone_arcs = instance.arcs.iter().any(|a| a.kind == ArcKind::Drone);
    if has_drone_arcs {
        rebuild_drone_arcs(&mut out, &drone_w);
    }
    out
}

/// What to do with demand that reaches no center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Uncovered {
    Reject,
    /// Move it to `unassigned_demand`.
    Keep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    pub demand: Vec<Demand>,
    pub unassigned: Vec<Demand>,
}

fn merge(entries: BTreeMap<(String, String, usize), f64>) -> Vec<Demand> {
    entries
        .into_iter()
        .map(|((node, vaccine, period), doses)| Demand {
            node,
            vaccine,
            period,
            doses,
        })
        .collect()
}

/// Assigns each community's demand to centers: a host keeps its demand,
/// otherwise it is split equally among accessible clinics, otherwise
/// among accessible outreach posts. Demand already sitting on centers
/// stays where it is.
pub fn aggregate_demand(instance: &Instance, policy: Uncovered) -> Result<Aggregation, PreprocessError> {
    let kinds: HashMap<&str, NodeKind> = instance.nodes.iter().map(|n| (n.id.as_str(), n.kind)).collect();
    let mut hosted: HashMap<&str, Vec<&str>> = HashMap::new();
    for n in instance.nodes.iter().filter(|n| n.kind.is_center()) {
        if let Some(h) = &n.host_community {
            hosted.entry(h.as_str()).or_default().push(n.id.as_str());
        }
    }
    let mut reach: HashMap<&str, (Vec<&str>, Vec<&str>)> = HashMap::new();
    for a in instance.arcs.iter().filter(|a| a.kind == ArcKind::Access) {
        let entry = reach.entry(a.from.as_str()).or_default();
        match kinds.get(a.to.as_str()) {
            Some(NodeKind::Clinic) => entry.0.push(a.to.as_str()),
            Some(NodeKind::OutreachPost) => entry.1.push(a.to.as_str()),
            _ => {}
        }
    }
    let mut assigned: BTreeMap<(String, String, usize), f64> = BTreeMap::new();
    let mut lost: BTreeMap<(String, String, usize), f64> = BTreeMap::new();
    for d in &instance.demand {
        let kind = kinds.get(d.node.as_str()).copied();
        if kind != Some(NodeKind::Community) {
            *assigned.entry((d.node.clone(), d.vaccine.clone(), d.period)).or_insert(0.0) += d.doses;
            continue;
        }
        let empty = (Vec::new(), Vec::new());
        let (clinics, posts) = reach.get(d.node.as_str()).unwrap_or(&empty);
        let targets: &[&str] = match hosted.get(d.node.as_str()) {
            Some(h) => h,
            None if !clinics.is_empty() => clinics,
            None => posts,
        };
        if targets.is_empty() {
            match policy {
                Uncovered::Reject => return Err(PreprocessError::Uncovered(d.node.clone())),
                Uncovered::Keep => {
                    *lost.entry((d.node.clone(), d.vaccine.clone(), d.period)).or_insert(0.0) += d.doses;
                    continue;
                }
            }
        }
        let share = d.doses / targets.len() as f64;
        for t in targets {
            *assigned.entry((t.to_string(), d.vaccine.clone(), d.period)).or_insert(0.0) += share;
        }
    }
    let mut unassigned = instance.unassigned_demand.clone();
    unassigned.extend(merge(lost));
    Ok(Aggregation {
        demand: merge(assigned),
        unassigned,
    })
}

/// Splits every community's demand equally across all clinics.
pub fn full_access_assignment(instance: &Instance) -> Aggregation {
    let clinics: Vec<&str> = instance
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Clinic)
        .map(|n| n.id.as_str())
        .collect();
    let mut assigned: BTreeMap<(String, String, usize), f64> = BTreeMap::new();
    let mut lost = instance.unassigned_demand.clone();
    for d in &instance.demand {
        if clinics.is_empty() {
            lost.push(d.clone());
            continue;
        }
        let share = d.doses / clinics.len() as f64;
        for c in &clinics {
            *assigned.entry((c.to_string(), d.vaccine.clone(), d.period)).or_insert(0.0) += share;
        }
    }
    Aggregation {
        demand: merge(assigned),
        unassigned: lost,
    }
}

/// Drops communities and access arcs and attaches the aggregated demand to
/// centers. Communities with unassigned demand stay as isolated nodes so
/// that their demand can still be reported by region.
pub fn build_reduced_network(instance: &Instance, aggregation: &Aggregation) -> Instance {
    let mut out = instance.clone();
    let keep: BTreeSet<&str> = aggregation.unassigned.iter().map(|d| d.node.as_str()).collect();
    out.nodes
        .retain(|n| n.kind != NodeKind::Community || keep.contains(n.id.as_str()));
    for n in &mut out.nodes {
        n.host_community = None;
    }
    out.arcs.retain(|a| a.kind != ArcKind::Access);
    out.demand = aggregation.demand.clone();
    out.unassigned_demand = aggregation.unassigned.clone();
    out
}

/// Everything the preprocessing stage produces.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub indicator: AccessIndicator,
    pub selection: OutreachSelection,
    /// Original network plus outreach posts, with community-level demand.
    pub expanded: Instance,
    /// Centers only, with aggregated demand.
    pub reduced: Instance,
}

pub fn preprocess(instance: &Instance, method: CoverMethod) -> Result<Preprocessed, PreprocessError> {
    preprocess_with(instance, method, PostLink::default())
}

pub fn preprocess_with(instance: &Instance, method: CoverMethod, link: PostLink) -> Result<Preprocessed, PreprocessError> {
    let indicator = build_access_indicator(instance, instance.access_radius_km)?;
    let selection = select_outreach_hosts(&indicator, &clinic_communities(instance), method)?;
    let expanded = place_outreach_posts(instance, &selection, link);
    let aggregation = aggregate_demand(&expanded, Uncovered::Reject)?;
    let reduced = build_reduced_network(&expanded, &aggregation);
    Ok(Preprocessed {
        indicator,
        selection,
        expanded,
        reduced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::CoordSystem;
    use crate::io::defaults::drone_preset;
    use crate::model::{StorageMode, Vaccine};

    fn line(n: usize, spacing: f64, clinics: &[usize]) -> Instance {
        let mut nodes = vec![Node::new("cs", NodeKind::CentralStore, [0.0, -50.0])];
        for i in 0..n {
            nodes.push(Node::new(format!("k{i}"), NodeKind::Community, [i as f64 * spacing, 0.0]));
        }
        for &c in clinics {
            let mut cl = Node::new(format!("c{c}"), NodeKind::Clinic, [c as f64 * spacing, 0.0]);
            cl.host_community = Some(format!("k{c}"));
            nodes.push(cl);
        }
        let demand = (0..n)
            .map(|i| Demand {
                node: format!("k{i}"),
                vaccine: "v".into(),
                period: 1,
                doses: 100.0,
            })
            .collect();
        Instance {
            name: "line".into(),
            coordinates: CoordSystem::Planar,
            nodes,
            arcs: vec![],
            vaccines: vec![Vaccine {
                id: "v".into(),
                doses_per_regimen: 1,
                dose_volume_cm3: 1.0,
                diluent_volume_cm3: 0.0,
                ovw_rate: 0.0,
                vial_size: 1,
                storage_mode: StorageMode::Refrigerated,
            }],
            demand,
            unassigned_demand: vec![],
            horizon: 1,
            budget: 0.0,
            drone: drone_preset("battery-75").unwrap(),
            epsilon: 1e-3,
            central_supply: None,
            access_radius_km: 5.0,
        }
    }

    #[test]
    fn radius_boundary() {
        let mut inst = line(2, 4.9, &[]);
        assert!(build_access_indicator(&inst, 5.0).unwrap().covers[0][1]);
        inst.nodes[2].position = [5.1, 0.0];
        assert!(!build_access_indicator(&inst, 5.0).unwrap().covers[0][1]);
    }

    #[test]
    fn line_of_six_covers_two_neighbours_each_side() {
        let ind = build_access_indicator(&line(6, 2.0, &[]), 5.0).unwrap();
        for i in 0..6usize {
            for k in 0..6usize {
                assert_eq!(ind.covers[i][k], i.abs_diff(k) <= 2, "{i} {k}");
            }
        }
    }

    #[test]
    fn line_of_six_needs_two_hosts() {
        let ind = build_access_indicator(&line(6, 2.0, &[]), 5.0).unwrap();
        let exact = select_outreach_hosts(&ind, &BTreeSet::new(), CoverMethod::Exact).unwrap();
        assert_eq!(exact.size(), 2);
        let greedy = select_outreach_hosts(&ind, &BTreeSet::new(), CoverMethod::Greedy).unwrap();
        assert!(greedy.size() >= 2);
    }

    #[test]
    fn all_clinic_communities_are_selected() {
        let inst = line(4, 2.0, &[0, 1, 2, 3]);
        let ind = build_access_indicator(&inst, 5.0).unwrap();
        let sel = select_outreach_hosts(&ind, &clinic_communities(&inst), CoverMethod::Exact).unwrap();
        assert_eq!(sel.size(), 4);
    }

    #[test]
    fn two_clinics_split_evenly() {
        // k1 sits between clinics at k0 and k2.
        let mut inst = line(3, 3.0, &[0, 2]);
        inst.demand.retain(|d| d.node == "k1");
        rebuild_access_arcs(&mut inst);
        let agg = aggregate_demand(&inst, Uncovered::Reject).unwrap();
        let got: Vec<(String, f64)> = agg.demand.iter().map(|d| (d.node.clone(), d.doses)).collect();
        assert_eq!(got, vec![("c0".to_string(), 50.0), ("c2".to_string(), 50.0)]);
    }

    #[test]
    fn clinic_takes_precedence_over_posts() {
        let mut inst = line(4, 2.0, &[0]);
        let sel = OutreachSelection {
            hosts: ["k0", "k2", "k3"].iter().map(|s| s.to_string()).collect(),
            clinics: BTreeSet::new(),
            method: CoverMethod::Greedy,
            fell_back: false,
        };
        inst.demand.retain(|d| d.node == "k1");
        let expanded = place_outreach_posts(&inst, &sel, PostLink::NearestDistrict);
        let agg = aggregate_demand(&expanded, Uncovered::Reject).unwrap();
        assert_eq!(agg.demand.len(), 1);
        assert_eq!((agg.demand[0].node.as_str(), agg.demand[0].doses), ("c0", 100.0));
    }

    #[test]
    fn reduced_network_keeps_facilities_and_centers() {
        let inst = line(10, 1.0, &[]);
        let pre = preprocess(&inst, CoverMethod::Exact).unwrap();
        let centers = pre.reduced.nodes.iter().filter(|n| n.kind.is_center()).count();
        assert_eq!(pre.reduced.nodes.len(), 1 + centers);
        assert!(pre.reduced.nodes.len() < pre.expanded.nodes.len());
        let total: f64 = pre.reduced.demand.iter().map(|d| d.doses).sum();
        assert_eq!(total, 1000.0);
    }
}
