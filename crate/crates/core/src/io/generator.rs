//! Seeded synthetic regions shaped like a four-tier national cold chain.
//!
//! Randomness comes from ChaCha8 seeded with the 64-bit `seed`, so the same
//! configuration yields the same instance on every platform. Draw order is
//! fixed: district sites, community sites, community sizes, region by
//! region.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::defaults::{default_vaccine, drone_preset, HUB_COST};
use crate::geo::CoordSystem;
use crate::model::{Arc, ArcKind, Demand, Instance, Node, NodeKind};
use crate::preprocess::{rebuild_access_arcs, rebuild_drone_arcs};

pub const STORAGE_WASTAGE: f64 = 0.01;
pub const LAND_WASTAGE: f64 = 0.01;
pub const DRONE_WASTAGE: f64 = 0.005;
/// Spread of urban communities around their district town, in km.
const URBAN_SD_KM: f64 = 4.0;
/// Smallest area per community the sampler accepts, in km².
const MIN_AREA_PER_COMMUNITY: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemandSpread {
    Uniform,
    /// `share` of the horizon's demand falls in `period`, the rest evenly.
    CampaignSpike { period: usize, share: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub name: String,
    pub seed: u64,
    /// Area of each region.
    pub region_area_km2: f64,
    /// Population of each region.
    pub population: f64,
    pub n_regions: usize,
    /// District stores per region.
    pub n_districts: usize,
    /// Clinics per region.
    pub n_clinics: usize,
    pub clinic_fraction_of_communities: f64,
    /// Share of communities clustered around district towns, in [0, 1].
    pub community_clustering: f64,
    pub capacity_scale: f64,
    /// Periods (days).
    pub horizon: usize,
    /// Annual births per 1000 inhabitants.
    pub birth_rate_per_1000: f64,
    pub vaccines: Vec<String>,
    pub drone_preset: String,
    pub budget: f64,
    pub access_radius_km: f64,
    pub demand_spread: DemandSpread,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            seed: 1,
            region_area_km2: 2_500.0,
            population: 60_000.0,
            n_regions: 1,
            n_districts: 2,
            n_clinics: 6,
            clinic_fraction_of_communities: 0.3,
            community_clustering: 0.6,
            capacity_scale: 1.0,
            horizon: 6,
            birth_rate_per_1000: 45.0,
            vaccines: vec!["BCG".into()],
            drone_preset: "battery-75".into(),
            budget: 0.0,
            access_radius_km: 5.0,
            demand_spread: DemandSpread::Uniform,
        }
    }
}

impl GeneratorConfig {
    /// Sparse desert region: density about 1 person per km², dispersed
    /// settlements and few clinics, so under half the demand lies within
    /// walking distance of one.
    pub fn agadez_like(seed: u64) -> Self {
        Self {
            name: "agadez-like".into(),
            seed,
            region_area_km2: 20_000.0,
            population: 20_000.0,
            clinic_fraction_of_communities: 0.15,
            community_clustering: 0.0,
            ..Self::default()
        }
    }

    /// Dense farming region: density about 120 people per km².
    pub fn maradi_like(seed: u64) -> Self {
        Self {
            name: "maradi-like".into(),
            seed,
            region_area_km2: 1_000.0,
            population: 122_550.0,
            community_clustering: 0.6,
            ..Self::default()
        }
    }

    pub fn n_communities(&self) -> usize {
        (self.n_clinics as f64 / self.clinic_fraction_of_communities - 1e-9).ceil() as usize
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("invalid generator setting: {0}")]
    Config(String),
    #[error("region of {area} km² is too small for {count} communities")]
    Geometry { area: f64, count: usize },
}

fn check(cfg: &GeneratorConfig) -> Result<(), GeneratorError> {
    let bad = |m: &str| Err(GeneratorError::Config(m.into()));
    if cfg.n_regions == 0 || cfg.n_districts == 0 || cfg.n_clinics == 0 || cfg.horizon == 0 {
        return bad("counts and horizon must be positive");
    }
    if !(cfg.clinic_fraction_of_communities > 0.0 && cfg.clinic_fraction_of_communities <= 1.0) {
        return bad("clinic fraction must lie in (0, 1]");
    }
    if !(0.0..=1.0).contains(&cfg.community_clustering) {
        return bad("community clustering must lie in [0, 1]");
    }
    for (name, v) in [
        ("region area", cfg.region_area_km2),
        ("population", cfg.population),
        ("capacity scale", cfg.capacity_scale),
        ("birth rate", cfg.birth_rate_per_1000),
        ("access radius", cfg.access_radius_km),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return bad(&format!("{name} must be positive"));
        }
    }
    if !(cfg.budget >= 0.0 && cfg.budget.is_finite()) {
        return bad("budget must be non-negative");
    }
    if cfg.vaccines.is_empty() {
        return bad("at least one vaccine is required");
    }
    if let DemandSpread::CampaignSpike { period, share } = cfg.demand_spread {
        if period == 0 || period > cfg.horizon || !(0.0..=1.0).contains(&share) {
            return bad("campaign spike needs a period inside the horizon and a share in [0, 1]");
        }
    }
    let count = cfg.n_communities();
    if cfg.region_area_km2 < count as f64 * MIN_AREA_PER_COMMUNITY {
        return Err(GeneratorError::Geometry {
            area: cfg.region_area_km2,
            count,
        });
    }
    Ok(())
}

fn wastage_map(vaccines: &[String], w: f64) -> BTreeMap<String, f64> {
    vaccines.iter().map(|v| (v.clone(), w)).collect()
}

/// Splits `children` over the horizon according to `spread`.
fn period_shares(spread: DemandSpread, horizon: usize) -> Vec<f64> {
    match spread {
        DemandSpread::Uniform => vec![1.0 / horizon as f64; horizon],
        DemandSpread::CampaignSpike { period, share } => {
            if horizon == 1 {
                return vec![1.0];
            }
            let rest = (1.0 - share) / (horizon - 1) as f64;
            (1..=horizon).map(|t| if t == period { share } else { rest }).collect()
        }
    }
}

pub fn generate_synthetic(cfg: &GeneratorConfig) -> Result<Instance, GeneratorError> {
    check(cfg)?;
    let vaccines = cfg
        .vaccines
        .iter()
        .map(|id| default_vaccine(id).ok_or_else(|| GeneratorError::Config(format!("unknown vaccine {id:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let drone = drone_preset(&cfg.drone_preset)
        .ok_or_else(|| GeneratorError::Config(format!("unknown drone preset {:?}", cfg.drone_preset)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let side = cfg.region_area_km2.sqrt();
    let n_comm = cfg.n_communities();
    let urban = Normal::new(0.0, URBAN_SD_KM).expect("positive sd");
    let size = LogNormal::new(0.0, 0.8).expect("positive sigma");
    let periods = period_shares(cfg.demand_spread, cfg.horizon);
    // Volume opened per child, so capacities leave room for open-vial waste.
    let dose_volume: f64 = vaccines
        .iter()
        .map(|v| v.dose_volume_cm3 * v.doses_per_regimen as f64 / (1.0 - v.ovw_rate).max(0.05))
        .sum();
    // Periods in which land deliveries reach clinics (three hops from the
    // central store).
    let window = cfg.horizon.saturating_sub(3).max(1) as f64;
    let scale = cfg.capacity_scale;

    let mid_y = side / 2.0;
    let mut nodes = vec![Node::new("CS", NodeKind::CentralStore, [-0.1 * side, mid_y])];
    let mut arcs = Vec::new();
    let mut demand = Vec::new();
    let wl = wastage_map(&cfg.vaccines, LAND_WASTAGE);
    let wb = wastage_map(&cfg.vaccines, STORAGE_WASTAGE);

    for r in 0..cfg.n_regions {
        let region = format!("R{}", r + 1);
        let x0 = r as f64 * side;
        let clamp = |p: [f64; 2]| [p[0].clamp(x0, x0 + side), p[1].clamp(0.0, side)];

        let mut districts = Vec::new();
        for _ in 0..cfg.n_districts {
            districts.push([
                x0 + side * rng.random_range(0.1..0.9),
                side * rng.random_range(0.1..0.9),
            ]);
        }
        let mut sites = Vec::with_capacity(n_comm);
        let mut weights = Vec::with_capacity(n_comm);
        for _ in 0..n_comm {
            let is_urban = rng.random_bool(cfg.community_clustering);
            let p = if is_urban {
                let c = districts[rng.random_range(0..districts.len())];
                clamp([c[0] + urban.sample(&mut rng), c[1] + urban.sample(&mut rng)])
            } else {
                [x0 + side * rng.random::<f64>(), side * rng.random::<f64>()]
            };
            sites.push(p);
            weights.push(size.sample(&mut rng) * if is_urban { 3.0 } else { 1.0 });
        }
        let total_w: f64 = weights.iter().sum();

        // Largest communities host the clinics.
        let mut order: Vec<usize> = (0..n_comm).collect();
        order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
        let mut clinic_host = vec![false; n_comm];
        for &k in order.iter().take(cfg.n_clinics) {
            clinic_host[k] = true;
        }

        let region_children = cfg.population * cfg.birth_rate_per_1000 / 1000.0 * cfg.horizon as f64 / 365.0;
        let region_volume = region_children * dose_volume;
        let nearest = |p: [f64; 2]| {
            (0..districts.len())
                .min_by(|&a, &b| {
                    let da = (districts[a][0] - p[0]).hypot(districts[a][1] - p[1]);
                    let db = (districts[b][0] - p[0]).hypot(districts[b][1] - p[1]);
                    da.total_cmp(&db)
                })
                .expect("at least one district")
        };
        let mut district_volume = vec![0.0; districts.len()];
        for k in 0..n_comm {
            district_volume[nearest(sites[k])] += region_volume * weights[k] / total_w;
        }
        let clinic_volume = region_volume / cfg.n_clinics as f64;

        let rc_id = format!("{region}-RC");
        let mut rc = Node::new(&rc_id, NodeKind::RegionalCenter, [x0 + side / 2.0, mid_y]);
        rc.region = Some(region.clone());
        rc.hub_cost = Some(HUB_COST);
        rc.storage_capacity = Some((scale * 1.5 * region_volume / window).round());
        rc.storage_wastage = wb.clone();
        let mut a = Arc::new(ArcKind::Land, "CS", &rc_id, 0.0);
        a.transit_wastage = wl.clone();
        arcs.push((a, nodes[0].position, rc.position));
        nodes.push(rc.clone());

        let mut district_ids = Vec::new();
        for (d, &pos) in districts.iter().enumerate() {
            let id = format!("{region}-D{:02}", d + 1);
            let mut n = Node::new(&id, NodeKind::DistrictStore, pos);
            n.region = Some(region.clone());
            n.hub_cost = Some(HUB_COST);
            n.storage_capacity = Some((scale * 0.8 * district_volume[d] / window).round().max(1.0));
            n.storage_wastage = wb.clone();
            let mut a = Arc::new(ArcKind::Land, &rc_id, &id, 0.0);
            a.transit_wastage = wl.clone();
            a.transport_capacity = Some((scale * 1.2 * district_volume[d] / window).round().max(1.0));
            arcs.push((a, rc.position, pos));
            nodes.push(n);
            district_ids.push(id);
        }

        let mut comm_nodes = Vec::new();
        let mut clinic_nodes = Vec::new();
        for k in 0..n_comm {
            let kid = format!("{region}-K{:04}", k + 1);
            let mut n = Node::new(&kid, NodeKind::Community, sites[k]);
            n.region = Some(region.clone());
            let pop = cfg.population * weights[k] / total_w;
            n.population = Some(pop);
            let children = pop * cfg.birth_rate_per_1000 / 1000.0 * cfg.horizon as f64 / 365.0;
            for v in &vaccines {
                for (t, share) in periods.iter().enumerate() {
                    let doses = children * v.doses_per_regimen as f64 * share;
                    if doses > 0.0 {
                        demand.push(Demand {
                            node: kid.clone(),
                            vaccine: v.id.clone(),
                            period: t + 1,
                            doses,
                        });
                    }
                }
            }
            if clinic_host[k] {
                let cid = format!("{region}-C{:04}", k + 1);
                let mut c = Node::new(&cid, NodeKind::Clinic, sites[k]);
                c.region = Some(region.clone());
                c.host_community = Some(kid.clone());
                c.storage_capacity = Some((scale * 0.8 * clinic_volume / window).round().max(1.0));
                c.storage_wastage = wb.clone();
                let d = nearest(sites[k]);
                let mut a = Arc::new(ArcKind::Land, &district_ids[d], &cid, 0.0);
                a.transit_wastage = wl.clone();
                a.transport_capacity = Some((scale * 1.5 * clinic_volume / window).round().max(1.0));
                arcs.push((a, districts[d], sites[k]));
                clinic_nodes.push(c);
            }
            comm_nodes.push(n);
        }
        nodes.extend(clinic_nodes);
        nodes.extend(comm_nodes);
    }

    let arcs = arcs
        .into_iter()
        .map(|(mut a, p, q)| {
            a.distance_km = crate::geo::distance(CoordSystem::Planar, p, q);
            a
        })
        .collect();
    let mut inst = Instance {
        name: cfg.name.clone(),
        coordinates: CoordSystem::Planar,
        nodes,
        arcs,
        vaccines,
        demand,
        unassigned_demand: vec![],
        horizon: cfg.horizon,
        budget: cfg.budget,
        drone,
        epsilon: crate::model::default_epsilon(),
        central_supply: None,
        access_radius_km: cfg.access_radius_km,
    };
    rebuild_access_arcs(&mut inst);
    rebuild_drone_arcs(&mut inst, &wastage_map(&cfg.vaccines, DRONE_WASTAGE));
    Ok(inst)
}

/// Swaps the drone preset and regenerates drone arcs for the new range.
pub fn with_drone(instance: &Instance, preset: &crate::model::DroneSpec) -> Instance {
    let mut out = instance.clone();
    let w = crate::preprocess::drone_wastage(instance);
    let w = if w.is_empty() {
        wastage_map(&instance.vaccines.iter().map(|v| v.id.clone()).collect::<Vec<_>>(), DRONE_WASTAGE)
    } else {
        w
    };
    out.drone = preset.clone();
    rebuild_drone_arcs(&mut out, &w);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_follow_config() {
        let cfg = GeneratorConfig::default();
        let inst = generate_synthetic(&cfg).unwrap();
        let count = |k: NodeKind| inst.nodes.iter().filter(|n| n.kind == k).count();
        assert_eq!(count(NodeKind::Clinic), 6);
        assert_eq!(count(NodeKind::Community), 20);
        assert_eq!(count(NodeKind::DistrictStore), 2);
        assert_eq!(count(NodeKind::RegionalCenter), 1);
        assert!(crate::model::validate_instance(&inst).is_ok());
    }

    #[test]
    fn rejects_crowded_region() {
        let cfg = GeneratorConfig {
            region_area_km2: 0.5,
            ..GeneratorConfig::default()
        };
        assert!(matches!(generate_synthetic(&cfg), Err(GeneratorError::Geometry { .. })));
    }

    #[test]
    fn spike_shares_sum_to_one() {
        let s = period_shares(DemandSpread::CampaignSpike { period: 2, share: 0.5 }, 6);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(s[1], 0.5);
    }
}
