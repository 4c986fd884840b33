use std::collections::BTreeSet;

use vaxnet_milp::{solve_milp, SolveOptions, SolveStatus};

use super::setcover::build_set_cover;
use super::*;
use crate::geo::CoordSystem;
use crate::model::{Arc, Demand, DroneSpec, Instance, Node, StorageMode, Vaccine};
use crate::preprocess::{aggregate_demand, build_reduced_network, AccessIndicator, Uncovered};

/// Central store, one hub-candidate clinic, one outreach post served by
/// drone, one community reaching the post. One vaccine, two periods.
fn tiny() -> Instance {
    let mut clinic = Node::new("h", NodeKind::Clinic, [0.0, 0.0]);
    clinic.storage_capacity = Some(10_000.0);
    clinic.hub_cost = Some(1_000_000.0);
    Instance {
        name: "tiny".into(),
        coordinates: CoordSystem::Planar,
        nodes: vec![
            Node::new("cs", NodeKind::CentralStore, [-10.0, 0.0]),
            clinic,
            Node::new("post", NodeKind::OutreachPost, [37.5, 0.0]),
            Node::new("k", NodeKind::Community, [37.5, 1.0]),
        ],
        arcs: vec![
            Arc::new(ArcKind::Land, "cs", "h", 10.0),
            Arc::new(ArcKind::Drone, "h", "post", 37.5),
            Arc::new(ArcKind::Access, "k", "post", 1.0),
        ],
        vaccines: vec![Vaccine {
            id: "V".into(),
            doses_per_regimen: 1,
            dose_volume_cm3: 1.5,
            diluent_volume_cm3: 0.5,
            ovw_rate: 0.0,
            vial_size: 1,
            storage_mode: StorageMode::Either,
        }],
        demand: vec![Demand {
            node: "k".into(),
            vaccine: "V".into(),
            period: 2,
            doses: 40.0,
        }],
        unassigned_demand: vec![],
        horizon: 2,
        budget: 2_000_000.0,
        drone: DroneSpec {
            name: "test".into(),
            payload: 1000.0,
            speed_kmh: 75.0,
            range_km: 75.0,
            unit_cost: 30_000.0,
            hours_per_period: 8.0,
        },
        epsilon: 1e-3,
        central_supply: None,
        access_radius_km: 5.0,
    }
}

fn reduced(inst: &Instance) -> Instance {
    let agg = aggregate_demand(inst, Uncovered::Reject).unwrap();
    build_reduced_network(inst, &agg)
}

fn solve(model: &Model) -> f64 {
    let r = solve_milp(&model.problem, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    r.objective
}

fn count(model: &Model, symbol: char) -> usize {
    model.vars.counts().get(&symbol).copied().unwrap_or(0)
}

#[test]
fn hand_count_of_tiny_p() {
    let m = build_model_p(&tiny(), &BuildOptions::default()).unwrap();
    // Y, Z, V per period, S on the land arc, D on the drone arc, I at the
    // two storage nodes, X on the access arc, N for the community.
    let expected = [('Y', 1), ('Z', 1), ('V', 2), ('S', 2), ('D', 2), ('I', 4), ('X', 2), ('N', 1)];
    for (sym, n) in expected {
        assert_eq!(count(&m, sym), n, "{sym}");
    }
    assert_eq!(m.problem.num_vars(), 15);
    assert_eq!(m.vars.len(), 15);
}

#[test]
fn zero_budget_leaves_no_drone_columns() {
    let mut inst = tiny();
    inst.budget = 0.0;
    let m = build_model_p(&inst, &BuildOptions::default()).unwrap();
    for sym in ['Y', 'Z', 'V', 'D'] {
        assert_eq!(count(&m, sym), 0, "{sym}");
    }
    // The post is only reachable by drone.
    assert_eq!(solve(&m), 0.0);
}

#[test]
fn min_drones_below_cheapest_hub_is_infeasible() {
    let opts = BuildOptions {
        min_drones: 1,
        ..Default::default()
    };
    let mut inst = tiny();
    inst.budget = 500_000.0;
    let m = build_model_p(&inst, &opts).unwrap();
    let r = solve_milp(&m.problem, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Infeasible);
    // With the full budget one drone is affordable and nothing is lost.
    assert!((solve(&build_model_p(&tiny(), &opts).unwrap()) - 40.04).abs() < 1e-9);
}

#[test]
fn budget_row_charges_hub_and_drones() {
    let m = build_model_p(&tiny(), &BuildOptions::default()).unwrap();
    let row = m.problem.constraints.iter().find(|c| c.name == "budget").unwrap();
    let y = m.vars.col(&VarKey::Y(1)).unwrap();
    let z = m.vars.col(&VarKey::Z).unwrap();
    assert!(row.terms.contains(&(y, 1_000_000.0)));
    assert!(row.terms.contains(&(z, 30_000.0)));
    assert_eq!(row.rhs, 2_000_000.0);
}

#[test]
fn drone_hours_coefficient() {
    let m = build_model_p(&tiny(), &BuildOptions::default()).unwrap();
    let d = m
        .vars
        .col(&VarKey::D {
            arc: 1,
            vaccine: 0,
            period: 1,
        })
        .unwrap();
    let row = m.problem.constraints.iter().find(|c| c.name == "drone_hours_1_1").unwrap();
    let coef = row.terms.iter().find(|t| t.0 == d).unwrap().1;
    assert!((coef - 0.002).abs() < 1e-15);
    let v = m.vars.col(&VarKey::V { node: 1, period: 1 }).unwrap();
    assert!(row.terms.contains(&(v, -8.0)));
}

#[test]
fn land_arrivals_lag_one_period() {
    let m = build_model_p(&tiny(), &BuildOptions::default()).unwrap();
    let s1 = m
        .vars
        .col(&VarKey::S {
            arc: 0,
            vaccine: 0,
            period: 1,
        })
        .unwrap();
    let s2 = m
        .vars
        .col(&VarKey::S {
            arc: 0,
            vaccine: 0,
            period: 2,
        })
        .unwrap();
    let row = |name: &str| m.problem.constraints.iter().find(|c| c.name == name).unwrap();
    assert!(!row("inv_bal_1_0_1").terms.iter().any(|t| t.0 == s1 || t.0 == s2));
    assert!(row("inv_bal_1_0_2").terms.contains(&(s1, -1.0)));
}

#[test]
fn tiny_p_serves_demand_by_drone() {
    let m = build_model_p(&tiny(), &BuildOptions::default()).unwrap();
    let obj = solve(&m);
    // 40 children, one dose each, plus epsilon per dose.
    assert!((obj - (40.0 + 40.0 * 1e-3)).abs() < 1e-6, "{obj}");
}

#[test]
fn aggregated_model_has_no_community_columns() {
    let q = build_model_q(&reduced(&tiny()), &BuildOptions::default()).unwrap();
    assert!(q.vars.iter().all(|(_, k)| !matches!(k, VarKey::X { community: Some(_), .. })));
    assert!(count(&q, 'X') > 0);
}

#[test]
fn aggregated_model_is_smaller() {
    let inst = tiny();
    let p = build_model_p(&inst, &BuildOptions::default()).unwrap();
    let mut inst2 = inst.clone();
    // A second community on the same post makes the difference visible.
    inst2.nodes.push(Node::new("k2", NodeKind::Community, [37.5, -1.0]));
    inst2.arcs.push(Arc::new(ArcKind::Access, "k2", "post", 1.0));
    inst2.demand.push(Demand {
        node: "k2".into(),
        vaccine: "V".into(),
        period: 1,
        doses: 5.0,
    });
    let p2 = build_model_p(&inst2, &BuildOptions::default()).unwrap();
    let q2 = build_model_q(&reduced(&inst2), &BuildOptions::default()).unwrap();
    assert!(q2.problem.num_vars() < p2.problem.num_vars());
    assert!(q2.problem.num_rows() <= p2.problem.num_rows());
    assert!(p.problem.num_vars() < p2.problem.num_vars());
}

#[test]
fn zero_aggregated_demand_gives_zero() {
    let mut inst = reduced(&tiny());
    for d in &mut inst.demand {
        d.doses = 0.0;
    }
    let q = build_model_q(&inst, &BuildOptions::default()).unwrap();
    assert_eq!(count(&q, 'X'), 0);
    assert_eq!(solve(&q), 0.0);
}

#[test]
fn demand_kinds_are_checked() {
    let inst = tiny();
    assert!(matches!(
        build_model_q(&inst, &BuildOptions::default()),
        Err(BuildError::NotAggregated(_))
    ));
    assert!(matches!(
        build_model_p(&reduced(&inst), &BuildOptions::default()),
        Err(BuildError::NotCommunityLevel(_))
    ));
}

#[test]
fn exhausted_budget_leaves_only_fixed_hub() {
    let mut inst = reduced(&tiny());
    inst.budget = 1_000_000.0;
    let r = HubRestriction {
        candidates: BTreeSet::from(["h".to_string()]),
        fixed_open: BTreeSet::from(["h".to_string()]),
    };
    let m = build_model_q_restricted(&inst, &r, &BuildOptions::default()).unwrap();
    let y = m.vars.col(&VarKey::Y(1)).unwrap();
    assert_eq!(m.problem.variables[y].lower, 1.0);
    assert_eq!(m.problem.variables[y].upper, 1.0);
    assert_eq!(count(&m, 'Z'), 0);
    assert_eq!(count(&m, 'V'), 0);
}

#[test]
fn restriction_errors() {
    let inst = reduced(&tiny());
    let fixed_outside = HubRestriction {
        candidates: BTreeSet::new(),
        fixed_open: BTreeSet::from(["h".to_string()]),
    };
    assert_eq!(
        build_model_q_restricted(&inst, &fixed_outside, &BuildOptions::default()).unwrap_err(),
        BuildError::FixedNotCandidate("h".into())
    );
    let unknown = HubRestriction {
        candidates: BTreeSet::from(["post".to_string()]),
        fixed_open: BTreeSet::new(),
    };
    assert_eq!(
        build_model_q_restricted(&inst, &unknown, &BuildOptions::default()).unwrap_err(),
        BuildError::UnknownHub("post".into())
    );
    let mut poor = inst.clone();
    poor.budget = 10.0;
    let sunk = HubRestriction {
        candidates: BTreeSet::from(["h".to_string()]),
        fixed_open: BTreeSet::from(["h".to_string()]),
    };
    assert!(matches!(
        build_model_q_restricted(&poor, &sunk, &BuildOptions::default()),
        Err(BuildError::SunkCost { .. })
    ));
}

#[test]
fn unrestricted_candidates_reproduce_q() {
    let inst = reduced(&tiny());
    let q = build_model_q(&inst, &BuildOptions::default()).unwrap();
    let r = HubRestriction {
        candidates: BTreeSet::from(["h".to_string()]),
        fixed_open: BTreeSet::new(),
    };
    let qbar = build_model_q_restricted(&inst, &r, &BuildOptions::default()).unwrap();
    assert_eq!(q.problem.variables, qbar.problem.variables);
    assert_eq!(q.problem.constraints, qbar.problem.constraints);
}

#[test]
fn empty_candidate_set_drops_all_hubs() {
    let inst = reduced(&tiny());
    let r = HubRestriction::default();
    let m = build_model_q_restricted(&inst, &r, &BuildOptions::default()).unwrap();
    assert_eq!(count(&m, 'Y'), 0);
    assert_eq!(solve(&m), 0.0);
}

#[test]
fn stationed_drones_add_equalities() {
    let m = build_model_p(
        &tiny(),
        &BuildOptions {
            stationed_drones: true,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(m.problem.constraints.iter().any(|c| c.name == "stationed_1_2"));
}

fn cover_optimum(ind: &AccessIndicator, clinics: &BTreeSet<String>) -> f64 {
    let (p, _) = build_set_cover(ind, clinics);
    let r = solve_milp(&p, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    -r.objective
}

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("k{i}")).collect()
}

#[test]
fn identity_cover_needs_everyone() {
    let n = 5;
    let covers = (0..n).map(|i| (0..n).map(|k| i == k).collect()).collect();
    let ind = AccessIndicator::from_matrix(ids(n), covers);
    assert_eq!(cover_optimum(&ind, &BTreeSet::new()), n as f64);
}

#[test]
fn one_candidate_covers_all() {
    let n = 5;
    let covers = (0..n).map(|i| (0..n).map(|k| i == 2 || i == k).collect()).collect();
    let ind = AccessIndicator::from_matrix(ids(n), covers);
    assert_eq!(cover_optimum(&ind, &BTreeSet::new()), 1.0);
    let clinics = BTreeSet::from(["k0".to_string(), "k4".to_string()]);
    assert_eq!(cover_optimum(&ind, &clinics), 3.0);
}

#[test]
fn line_of_six_matches_brute_force() {
    // Neighbours on a line cover each other.
    let n = 6usize;
    let covers: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|k| i.abs_diff(k) <= 1).collect()).collect();
    let mut best = n;
    for mask in 1u32..(1 << n) {
        let ok = (0..n).all(|k| (0..n).any(|i| mask & (1 << i) != 0 && covers[i][k]));
        if ok {
            best = best.min(mask.count_ones() as usize);
        }
    }
    let ind = AccessIndicator::from_matrix(ids(n), covers);
    assert_eq!(cover_optimum(&ind, &BTreeSet::new()), best as f64);
    assert_eq!(best, 2);
}

#[test]
fn extract_rounds_within_tolerance() {
    let m = build_model_p(&tiny(), &BuildOptions::default()).unwrap();
    let y = m.vars.col(&VarKey::Y(1)).unwrap();
    let mut x = vec![0.0; m.problem.num_vars()];
    x[y] = 0.9999999;
    let sol = extract_solution(&m, &x).unwrap();
    assert_eq!(sol.hubs, vec!["h".to_string()]);

    x[y] = 0.4;
    assert!(matches!(extract_solution(&m, &x), Err(ExtractError::Fractional { .. })));

    assert!(matches!(extract_solution(&m, &x[1..]), Err(ExtractError::Length { .. })));
}

#[test]
fn extract_zero_vector() {
    let m = build_model_p(&tiny(), &BuildOptions::default()).unwrap();
    let sol = extract_solution(&m, &vec![0.0; m.problem.num_vars()]).unwrap();
    assert_eq!(sol.objective, 0.0);
    assert!(sol.hubs.is_empty());
    assert_eq!(sol.drones, 0);
    assert!(sol.land.is_empty() && sol.drone_flow.is_empty() && sol.administered.is_empty());
}

#[test]
fn model_kind_round_trips_through_strings() {
    for k in [ModelKind::P, ModelKind::Q, ModelKind::QBar] {
        assert_eq!(k.to_string().parse::<ModelKind>().unwrap(), k);
    }
    assert!("R".parse::<ModelKind>().is_err());
}
