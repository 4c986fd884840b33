use vaxnet::geo::euclidean;
use vaxnet::io::defaults::{default_drone_specs, default_vaccine, drone_preset};
use vaxnet::io::generator::{generate_synthetic, GeneratorConfig};
use vaxnet::io::units::parse_volume;
use vaxnet::io::{instance_to_json, load_instance, parse_instance, save_instance, IoError};
use vaxnet::model::NodeKind;
use vaxnet::preprocess::{build_access_indicator, clinic_communities, select_outreach_hosts, CoverMethod};

const MINIMAL: &str = r#"{
  "schema_version": 1,
  "instance": {
    "name": "minimal",
    "coordinates": "planar",
    "nodes": [
      {"id": "cs", "kind": "central_store", "position": [0, 0]},
      {"id": "c1", "kind": "clinic", "position": [10, 0], "storage_capacity": "2 L"}
    ],
    "arcs": [{"kind": "land", "from": "cs", "to": "c1", "distance_km": 10}],
    "vaccines": [
      {"id": "BCG", "doses_per_regimen": 1, "dose_volume_cm3": 0.879, "storage_mode": "either"}
    ],
    "demand": [{"node": "c1", "vaccine": "BCG", "period": 2, "doses": 30}],
    "horizon": 2,
    "budget": 0,
    "drone": {"payload": "1.0 L", "speed_kmh": 75, "range_km": 75, "unit_cost": 30000, "hours_per_period": 8}
  }
}"#;

#[test]
fn minimal_file_loads() {
    let inst = parse_instance(MINIMAL).unwrap();
    assert_eq!(inst.nodes.len(), 2);
    assert_eq!(inst.drone.payload, 1000.0);
    assert_eq!(inst.nodes[1].storage_capacity, Some(2000.0));
    assert_eq!(inst.epsilon, 1e-3);
    assert_eq!(inst.access_radius_km, 5.0);
}

#[test]
fn negative_capacity_points_at_field() {
    let text = MINIMAL.replace(r#""position": [0, 0]}"#, r#""position": [0, 0], "storage_capacity": -1}"#);
    match parse_instance(&text) {
        Err(IoError::Invalid(report)) => {
            assert!(report.violations.iter().any(|v| v.path == "/nodes/0/storage_capacity"), "{report}");
        }
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn unknown_field_is_a_schema_error() {
    let text = MINIMAL.replace(r#""horizon": 2"#, r#""horizon": 2, "colour": "red""#);
    match parse_instance(&text) {
        Err(IoError::Schema { pointer, message }) => {
            assert_eq!(pointer, "/colour");
            assert!(message.contains("colour"), "{message}");
        }
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn bad_type_reports_nested_pointer() {
    let text = MINIMAL.replace(r#""distance_km": 10"#, r#""distance_km": "far""#);
    match parse_instance(&text) {
        Err(IoError::Schema { pointer, .. }) => assert_eq!(pointer, "/arcs/0/distance_km"),
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn wrong_version_rejected() {
    let text = MINIMAL.replace(r#""schema_version": 1"#, r#""schema_version": 7"#);
    assert!(matches!(parse_instance(&text), Err(IoError::Version { found: 7 })));
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(load_instance("/nonexistent/x.json"), Err(IoError::Io { .. })));
}

#[test]
fn volume_units() {
    assert_eq!(parse_volume("1.0 L").unwrap(), 1000.0);
    assert_eq!(parse_volume("250 mL").unwrap(), 250.0);
    assert_eq!(parse_volume("40 cm3").unwrap(), 40.0);
    assert_eq!(parse_volume("0.5 m3").unwrap(), 500_000.0);
    assert!(parse_volume("3 gallons").is_err());
    assert!(parse_volume("L").is_err());
}

#[test]
fn file_round_trip() {
    let inst = generate_synthetic(&GeneratorConfig::default()).unwrap();
    let dir = std::env::temp_dir().join(format!("vaxnet-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("inst.json");
    save_instance(&inst, &path).unwrap();
    let back = load_instance(&path).unwrap();
    assert_eq!(back, inst);
    assert_eq!(instance_to_json(&back), std::fs::read_to_string(&path).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn presets_and_vaccines() {
    let v = default_vaccine("DTP-HebB-Hip").unwrap();
    assert_eq!((v.dose_volume_cm3, v.diluent_volume_cm3, v.doses_per_regimen), (3.062, 0.0, 3));
    let opv = default_vaccine("OPV").unwrap();
    assert_eq!(opv.doses_per_regimen, 4);
    assert_eq!(opv.storage_mode, vaxnet::model::StorageMode::Frozen);
    let b75 = drone_preset("battery-75").unwrap();
    assert_eq!((b75.range_km, b75.speed_kmh), (75.0, 75.0));
    let fuel = drone_preset("fuel-900").unwrap();
    assert_eq!((fuel.range_km, fuel.payload), (900.0, 10_000.0));
    assert!(drone_preset("jetpack").is_none());
    assert_eq!(default_drone_specs().len(), 4);
}

#[test]
fn generator_is_deterministic() {
    for seed in [1, 7, 42] {
        let cfg = GeneratorConfig {
            seed,
            vaccines: vec!["BCG".into(), "Measles".into()],
            ..GeneratorConfig::default()
        };
        let a = instance_to_json(&generate_synthetic(&cfg).unwrap());
        let b = instance_to_json(&generate_synthetic(&cfg).unwrap());
        assert_eq!(a, b);
    }
    let a = generate_synthetic(&GeneratorConfig::default()).unwrap();
    let b = generate_synthetic(&GeneratorConfig {
        seed: 2,
        ..GeneratorConfig::default()
    })
    .unwrap();
    assert_ne!(a, b);
}

fn mean_nearest_neighbour(cfg: &GeneratorConfig) -> f64 {
    let inst = generate_synthetic(cfg).unwrap();
    let pts: Vec<[f64; 2]> = inst
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Community)
        .map(|n| n.position)
        .collect();
    let total: f64 = pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            pts.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| euclidean(*p, *q))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / pts.len() as f64
}

#[test]
fn dense_region_has_closer_neighbours() {
    for seed in 1..=5 {
        let sparse = mean_nearest_neighbour(&GeneratorConfig::agadez_like(seed));
        let dense = mean_nearest_neighbour(&GeneratorConfig::maradi_like(seed));
        assert!(dense < sparse, "seed {seed}: {dense} vs {sparse}");
    }
}

#[test]
fn regimen_consistent_demand() {
    let cfg = GeneratorConfig {
        vaccines: vec!["BCG".into(), "DTP-HebB-Hip".into(), "OPV".into()],
        ..GeneratorConfig::default()
    };
    let inst = generate_synthetic(&cfg).unwrap();
    let a: std::collections::HashMap<&str, f64> = inst
        .vaccines
        .iter()
        .map(|v| (v.id.as_str(), v.doses_per_regimen as f64))
        .collect();
    let mut per: std::collections::BTreeMap<(&str, &str), f64> = Default::default();
    for d in &inst.demand {
        *per.entry((d.node.as_str(), d.vaccine.as_str())).or_default() += d.doses / a[d.vaccine.as_str()];
    }
    for k in inst.nodes.iter().filter(|n| n.kind == NodeKind::Community) {
        let children: Vec<f64> = inst.vaccines.iter().map(|v| per[&(k.id.as_str(), v.id.as_str())]).collect();
        for c in &children {
            assert!((c - children[0]).abs() <= 1e-9 * children[0].max(1.0), "{}: {children:?}", k.id);
        }
    }
}

#[test]
fn all_clinic_communities_are_selected() {
    let cfg = GeneratorConfig {
        clinic_fraction_of_communities: 1.0,
        ..GeneratorConfig::default()
    };
    let inst = generate_synthetic(&cfg).unwrap();
    let communities = inst.nodes.iter().filter(|n| n.kind == NodeKind::Community).count();
    assert_eq!(clinic_communities(&inst).len(), communities);
    let ind = build_access_indicator(&inst, inst.access_radius_km).unwrap();
    for method in [CoverMethod::Exact, CoverMethod::Greedy] {
        let sel = select_outreach_hosts(&ind, &clinic_communities(&inst), method).unwrap();
        assert_eq!(sel.hosts.len(), communities);
    }
}
