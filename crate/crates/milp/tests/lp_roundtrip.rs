use proptest::prelude::*;
use vaxnet_milp::{parse_lp, to_lp_string, Domain, Problem, RowSense};

fn coefficient() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-1000i32..1000).prop_map(f64::from),
        (-1.0e6f64..1.0e6),
        (-1.0f64..1.0).prop_map(|v| v * 1e-9),
    ]
}

fn bound_pair() -> impl Strategy<Value = (f64, f64)> {
    prop_oneof![
        Just((0.0, f64::INFINITY)),
        Just((f64::NEG_INFINITY, f64::INFINITY)),
        (-50.0f64..0.0, 0.0f64..50.0),
        (0i32..5).prop_map(|v| (f64::from(v), f64::from(v))),
        (0.0f64..10.0).prop_map(|v| (f64::NEG_INFINITY, v)),
    ]
}

fn problem() -> impl Strategy<Value = Problem> {
    (1usize..12, 0usize..10).prop_flat_map(|(n, m)| {
        let vars = proptest::collection::vec((0u8..3, bound_pair(), coefficient()), n);
        let rows = proptest::collection::vec(
            (
                proptest::collection::vec((0..n, coefficient()), 0..n + 2),
                0u8..3,
                coefficient(),
            ),
            m,
        );
        (vars, rows).prop_map(|(vars, rows)| {
            let mut p = Problem::new("prop");
            for (j, (d, (lo, hi), c)) in vars.into_iter().enumerate() {
                let domain = [Domain::Continuous, Domain::Integer, Domain::Binary][d as usize];
                p.add_variable(format!("v_{j}"), domain, lo, hi, c);
            }
            for (i, (terms, s, rhs)) in rows.into_iter().enumerate() {
                let sense = [RowSense::Le, RowSense::Eq, RowSense::Ge][s as usize];
                p.add_constraint(format!("row_{i}"), terms, sense, rhs);
            }
            p
        })
    })
}

proptest! {
    #[test]
    fn write_then_parse_is_identity(p in problem()) {
        prop_assume!(p.validate().is_ok());
        let text = to_lp_string(&p).unwrap();
        let back = parse_lp(&text).unwrap();
        prop_assert_eq!(back.variables.len(), p.variables.len());
        for (a, b) in back.variables.iter().zip(&p.variables) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(a.domain, b.domain);
            prop_assert_eq!(a.lower.to_bits() | (1 << 63), b.lower.to_bits() | (1 << 63));
            prop_assert_eq!(a.upper, b.upper);
            prop_assert_eq!(a.objective, b.objective);
        }
        prop_assert_eq!(back, p);
    }
}

#[test]
fn long_rows_wrap_and_still_parse() {
    let mut p = Problem::new("wide");
    for j in 0..40 {
        p.add_variable(format!("x_{j}"), Domain::Continuous, 0.0, f64::INFINITY, 1.0 / (j + 1) as f64);
    }
    p.add_constraint("all", (0..40).map(|j| (j, -(j as f64) - 0.5)), RowSense::Ge, -1e3);
    let text = to_lp_string(&p).unwrap();
    assert!(text.lines().all(|l| l.len() < 560));
    assert_eq!(parse_lp(&text).unwrap(), p);
}

#[test]
fn file_round_trip() {
    let dir = std::env::temp_dir().join(format!("vaxnet-milp-lp-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m.lp");
    let mut p = Problem::new("file");
    let y = p.add_variable("Y_r1", Domain::Binary, 0.0, 1.0, 0.0);
    let z = p.add_variable("Z", Domain::Integer, 0.0, 3.0, 0.0);
    p.add_constraint("budget", [(y, 1e6), (z, 3e4)], RowSense::Le, 2e6);
    vaxnet_milp::write_lp_file(&p, &path).unwrap();
    assert_eq!(vaxnet_milp::read_lp_file(&path).unwrap(), p);
    std::fs::remove_dir_all(&dir).unwrap();
}
