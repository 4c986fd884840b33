//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Run alone with `cargo test -p vaxnet --test acceptance`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vaxnet::audit::audit_solution;
use vaxnet::experiments::{
    aggregated_for, baseline_instance, run_baseline, run_budget_range_grid, run_sequential_expansion, AccessMode,
    ExperimentOptions,
};
use vaxnet::formulation::{build_model_p, build_model_q, BuildOptions, Model};
use vaxnet::io::csv_out::report_to_csv;
use vaxnet::io::defaults::drone_preset;
use vaxnet::io::generator::{generate_synthetic, with_drone, GeneratorConfig};
use vaxnet::io::{instance_to_json, to_json};
use vaxnet::model::{ArcKind, Demand, Instance, NodeKind, Solution};
use vaxnet::preprocess::{
    aggregate_demand, build_reduced_network, exact_cover, full_access_assignment, greedy_cover, preprocess_with,
    AccessIndicator, CoverMethod, PostLink, Uncovered,
};
use vaxnet::solve::solve_model;
use vaxnet_milp::{parse_lp, solve_milp, to_lp_string, Problem, RowSense, SolveOptions, SolveStatus};

const ORACLE_REL_TOL: f64 = 1e-6;
const ORACLE_BUDGET_S: f64 = 120.0;
const CONSERVATION_REL_TOL: f64 = 1e-12;
const AUDIT_TOL: f64 = 1e-6;
const MONOTONE_TOL: f64 = 1e-9;
const COLLAPSE_SR_TOL: f64 = 1e-9;
const GAP_FLOOR: f64 = -1e-9;
const GAP_ZERO_TOL: f64 = 1e-6;

const BUDGETS: [f64; 5] = [0.0, 2e6, 3e6, 4e6, 5e6];
const RANGES: [&str; 4] = ["battery-30", "battery-50", "battery-75", "fuel-900"];

/// Tight gaps so that objectives compare at the monotonicity tolerance.
fn exact_opts() -> SolveOptions {
    SolveOptions {
        relative_gap: 1e-12,
        absolute_gap: 1e-12,
        ..SolveOptions::default()
    }
}

fn experiment_opts() -> ExperimentOptions {
    ExperimentOptions {
        solve: exact_opts(),
        threads: Some(4),
        ..ExperimentOptions::default()
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Solved models and solutions, shared between criteria.
#[derive(Default)]
struct Pool {
    problems: Vec<(String, Problem)>,
    solutions: Vec<(String, Solution, Instance)>,
}

impl Pool {
    fn model(&mut self, tag: &str, m: &Model) {
        self.problems.push((tag.to_string(), m.problem.clone()));
    }

    fn solve(&mut self, tag: &str, m: &Model, inst: &Instance) -> Solution {
        self.model(tag, m);
        let s = solve_model(m, &exact_opts()).expect("solver error");
        self.solutions.push((tag.to_string(), s.clone(), inst.clone()));
        s
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- 1

/// Community-level instance with at most three hub candidates, two
/// vaccines and three periods, and a fleet small enough to enumerate.
fn tiny_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = ["BCG", "Measles", "DTP-HebB-Hip"];
    let n_vaccines = rng.random_range(1..=2);
    let first = rng.random_range(0..pool.len());
    let vaccines = (0..n_vaccines).map(|k| pool[(first + k) % pool.len()].to_string()).collect();
    let cfg = GeneratorConfig {
        seed,
        region_area_km2: rng.random_range(300.0..900.0),
        population: rng.random_range(20_000.0..60_000.0),
        n_districts: rng.random_range(1..=2),
        n_clinics: 2,
        clinic_fraction_of_communities: 0.5,
        horizon: rng.random_range(2..=3),
        vaccines,
        drone_preset: RANGES[rng.random_range(0..3)].into(),
        ..GeneratorConfig::default()
    };
    let mut inst = generate_synthetic(&cfg).expect("valid tiny config");
    for n in inst.nodes.iter_mut().filter(|n| n.hub_cost.is_some()) {
        n.hub_cost = Some((rng.random_range(0.4..1.2f64) * 1e6).round());
    }
    inst.drone.unit_cost = rng.random_range(4..=6) as f64 * 1e5;
    inst.drone.payload = rng.random_range(300.0..1500.0);
    let link = if rng.random_bool(0.5) {
        PostLink::DroneOnly
    } else {
        PostLink::NearestDistrict
    };
    let mut expanded = preprocess_with(&inst, CoverMethod::Exact, link).expect("coverable").expanded;
    expanded.budget = [0.0, 1.3e6, 1.8e6, 2.5e6][rng.random_range(0..4)];
    expanded
}

fn row_holds(terms: &[(usize, f64)], sense: RowSense, rhs: f64, x: &[f64]) -> bool {
    let lhs: f64 = terms.iter().map(|&(j, a)| a * x[j]).sum();
    let tol = 1e-9 * rhs.abs().max(1.0);
    match sense {
        RowSense::Le => lhs <= rhs + tol,
        RowSense::Ge => lhs >= rhs - tol,
        RowSense::Eq => (lhs - rhs).abs() <= tol,
    }
}

fn minilp_max(p: &Problem) -> Option<f64> {
    let mut q = minilp::Problem::new(minilp::OptimizationDirection::Maximize);
    let vars: Vec<minilp::Variable> = p.variables.iter().map(|v| q.add_var(v.objective, (v.lower, v.upper))).collect();
    for c in &p.constraints {
        let op = match c.sense {
            RowSense::Le => minilp::ComparisonOp::Le,
            RowSense::Ge => minilp::ComparisonOp::Ge,
            RowSense::Eq => minilp::ComparisonOp::Eq,
        };
        let expr: Vec<(minilp::Variable, f64)> = c.terms.iter().map(|&(j, a)| (vars[j], a)).collect();
        q.add_constraint(expr, op, c.rhs);
    }
    q.solve().ok().map(|s| s.objective())
}

/// Best objective over every integer assignment that satisfies the rows
/// made of integer columns only, with an LP over the continuous rest.
/// Returns the optimum and the number of LPs solved.
fn enumerate_integers(p: &Problem) -> (Option<f64>, usize) {
    let ints = p.integer_columns();
    let pos: HashMap<usize, usize> = ints.iter().enumerate().map(|(k, &j)| (j, k)).collect();
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); ints.len()];
    for (r, c) in p.constraints.iter().enumerate() {
        if !c.terms.is_empty() && c.terms.iter().all(|(j, _)| pos.contains_key(j)) {
            let last = c.terms.iter().map(|(j, _)| pos[j]).max().expect("non-empty");
            checks[last].push(r);
        }
    }
    struct Walk<'a> {
        p: &'a Problem,
        ints: &'a [usize],
        checks: &'a [Vec<usize>],
        x: Vec<f64>,
        best: Option<f64>,
        lps: usize,
    }
    fn go(w: &mut Walk, depth: usize) {
        if depth == w.ints.len() {
            let mut lp = w.p.clone();
            for &j in w.ints {
                lp.variables[j].lower = w.x[j];
                lp.variables[j].upper = w.x[j];
            }
            w.lps += 1;
            if let Some(z) = minilp_max(&lp) {
                w.best = Some(w.best.map_or(z, |b: f64| b.max(z)));
            }
            return;
        }
        let j = w.ints[depth];
        let (lo, hi) = (w.p.variables[j].lower, w.p.variables[j].upper);
        assert!(hi.is_finite(), "integer column without an upper bound");
        let mut v = lo.ceil();
        while v <= hi + 1e-9 {
            w.x[j] = v;
            let ok = w.checks[depth].iter().all(|&r| {
                let c = &w.p.constraints[r];
                row_holds(&c.terms, c.sense, c.rhs, &w.x)
            });
            if ok {
                go(w, depth + 1);
            }
            v += 1.0;
        }
        w.x[j] = 0.0;
    }
    let mut w = Walk {
        p,
        ints: &ints,
        checks: &checks,
        x: vec![0.0; p.num_vars()],
        best: None,
        lps: 0,
    };
    go(&mut w, 0);
    (w.best, w.lps)
}

fn criterion_oracle(pool: &mut Pool) -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut lps = 0;
    let mut with_hub = 0;
    let mut failures = Vec::new();
    let n = 24;
    for seed in 1..=n {
        let inst = tiny_instance(seed);
        let candidates = inst.hub_candidates().count();
        let model = build_model_p(&inst, &BuildOptions::default()).expect("tiny model builds");
        pool.model(&format!("oracle-{seed}"), &model);
        let r = solve_milp(&model.problem, &exact_opts()).expect("solver error");
        let (oracle, count) = enumerate_integers(&model.problem);
        lps += count;
        let sol = solve_model(&model, &exact_opts()).expect("solver error");
        if !sol.hubs.is_empty() {
            with_hub += 1;
        }
        pool.solutions.push((format!("oracle-{seed}"), sol, inst.clone()));
        let ok = match (r.status, oracle) {
            (SolveStatus::Optimal, Some(z)) => {
                let d = rel_diff(r.objective, z);
                worst = worst.max(d);
                d <= ORACLE_REL_TOL
            }
            (SolveStatus::Infeasible, None) => true,
            _ => false,
        };
        if !ok || candidates > 3 || inst.vaccines.len() > 2 || inst.horizon > 3 {
            failures.push(format!("seed {seed}: {:?} {} vs {oracle:?}", r.status, r.objective));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < ORACLE_BUDGET_S;
    outcome(
        pass,
        format!(
            "{n} instances ({with_hub} open a hub), {lps} enumerated LPs, max rel diff {worst:.1e} (tol {ORACLE_REL_TOL:.0e}), {secs:.1} s (limit {ORACLE_BUDGET_S} s){}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------- 2

fn brute_force_cover(covers: &[Vec<bool>], forced: u32) -> u32 {
    let n = covers.len();
    let k = covers[0].len();
    (0u32..1 << n)
        .filter(|m| m & forced == forced)
        .filter(|m| (0..k).all(|c| (0..n).any(|i| m >> i & 1 == 1 && covers[i][c])))
        .map(u32::count_ones)
        .min()
        .expect("full set covers")
}

fn criterion_set_cover() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases = 60;
    let mut bad = Vec::new();
    let mut greedy_worse = 0;
    for case in 0..cases {
        let n = rng.random_range(3..=15);
        let density = rng.random_range(0.1..0.5);
        let mut covers: Vec<Vec<bool>> = (0..n).map(|_| (0..n).map(|_| rng.random_bool(density)).collect()).collect();
        // Symmetric, like a distance threshold.
        for i in 0..n {
            covers[i][i] = true;
            for k in 0..i {
                covers[k][i] = covers[i][k];
            }
        }
        let ids: Vec<String> = (0..n).map(|i| format!("k{i:02}")).collect();
        let mut forced_mask = 0u32;
        let mut fixed = BTreeSet::new();
        for i in 0..n {
            if rng.random_bool(0.1) {
                forced_mask |= 1 << i;
                fixed.insert(ids[i].clone());
            }
        }
        let ind = AccessIndicator::from_matrix(ids, covers.clone());
        let exact = exact_cover(&ind, &fixed, 1_000_000).expect("coverable");
        let greedy = greedy_cover(&ind, &fixed).expect("coverable");
        let truth = brute_force_cover(&covers, forced_mask) as usize;
        if exact.fell_back || exact.size() != truth || greedy.size() < truth {
            bad.push(format!("case {case}: exact {} greedy {} brute {truth}", exact.size(), greedy.size()));
        }
        if greedy.size() > truth {
            greedy_worse += 1;
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{cases} indicators with |K| <= 15, exact = brute force on all, greedy larger on {greedy_worse}{}",
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------- 3

fn per_vaccine_period(demand: &[Demand]) -> BTreeMap<(String, usize), f64> {
    let mut out = BTreeMap::new();
    for d in demand {
        *out.entry((d.vaccine.clone(), d.period)).or_insert(0.0) += d.doses;
    }
    out
}

fn generated_family() -> Vec<Instance> {
    let mut out = Vec::new();
    for seed in 1..=6 {
        for (k, base) in [
            GeneratorConfig::default(),
            GeneratorConfig::agadez_like(seed),
            GeneratorConfig::maradi_like(seed),
        ]
        .into_iter()
        .enumerate()
        {
            let cfg = GeneratorConfig {
                seed,
                n_regions: 1 + (seed as usize + k) % 2,
                vaccines: if k == 1 {
                    vec!["BCG".into(), "OPV".into(), "Measles".into()]
                } else {
                    vec!["BCG".into()]
                },
                ..base
            };
            out.push(generate_synthetic(&cfg).expect("valid config"));
        }
    }
    out
}

fn conserved(before: &[Demand], after: &[Demand]) -> f64 {
    let (b, a) = (per_vaccine_period(before), per_vaccine_period(after));
    let keys: BTreeSet<&(String, usize)> = b.keys().chain(a.keys()).collect();
    keys.into_iter()
        .map(|k| {
            let (x, y) = (b.get(k).copied().unwrap_or(0.0), a.get(k).copied().unwrap_or(0.0));
            (x - y).abs() / x.abs().max(1.0)
        })
        .fold(0.0, f64::max)
}

fn criterion_conservation() -> Outcome {
    let family = generated_family();
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (i, inst) in family.iter().enumerate() {
        for link in [PostLink::NearestDistrict, PostLink::DroneOnly] {
            let pre = preprocess_with(inst, CoverMethod::Exact, link).expect("coverable");
            let mut after = pre.reduced.demand.clone();
            after.extend(pre.reduced.unassigned_demand.iter().cloned());
            worst = worst.max(conserved(&inst.demand, &after));
            let again = aggregate_demand(&pre.reduced, Uncovered::Reject).expect("centers only");
            if again.demand != pre.reduced.demand || build_reduced_network(&pre.reduced, &again) != pre.reduced {
                bad.push(format!("instance {i} {link:?}: not idempotent"));
            }
        }
        // Baseline aggregations keep what they cannot place.
        let keep = aggregate_demand(inst, Uncovered::Keep).expect("keep");
        let mut after = keep.demand.clone();
        after.extend(keep.unassigned.iter().cloned());
        worst = worst.max(conserved(&inst.demand, &after));
        let reduced = build_reduced_network(inst, &keep);
        if aggregate_demand(&reduced, Uncovered::Keep).expect("keep") != keep {
            bad.push(format!("instance {i} keep: not idempotent"));
        }
        let full = full_access_assignment(inst);
        worst = worst.max(conserved(&inst.demand, &full.demand));
    }
    if worst > CONSERVATION_REL_TOL {
        bad.push(format!("conservation off by {worst:e}"));
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} generated instances, max rel imbalance {worst:.1e} (tol {CONSERVATION_REL_TOL:.0e}), idempotent{}",
            family.len(),
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------- 4

fn criterion_audit(pool: &Pool) -> Outcome {
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    let mut audited = 0;
    for (tag, sol, inst) in &pool.solutions {
        if !sol.status.is_some_and(|s| s.has_point()) {
            continue;
        }
        audited += 1;
        let r = audit_solution(sol, inst);
        worst = r.worst.values().copied().fold(worst, f64::max);
        if !r.is_ok() {
            bad.push(format!("{tag}: {}", r.violations[0]));
        }
    }
    outcome(
        bad.is_empty() && worst <= AUDIT_TOL && audited > 0,
        format!(
            "{audited} returned solutions re-checked against instance data, worst residual {worst:.1e} (tol {AUDIT_TOL:.0e}){}",
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------- 5

fn monotone_instance(seed: u64) -> Instance {
    let cfg = GeneratorConfig {
        seed,
        ..GeneratorConfig::default()
    };
    generate_synthetic(&cfg).expect("valid config")
}

fn criterion_monotonicity(pool: &mut Pool) -> Outcome {
    let opts = experiment_opts();
    let mut bad = Vec::new();
    let mut solves = 0;
    let mut rising = 0;
    for seed in 1..=5u64 {
        let inst = monotone_instance(seed);
        let solve_at = |pool: &mut Pool, preset: &str, budget: f64| -> f64 {
            let mut reduced = aggregated_for(&inst, &drone_preset(preset).expect("preset"), &opts).expect("preprocess");
            reduced.budget = budget;
            let m = build_model_q(&reduced, &BuildOptions::default()).expect("builds");
            pool.solve(&format!("mono-{seed}-{preset}-{budget}"), &m, &reduced).objective
        };
        let by_budget: Vec<f64> = BUDGETS.iter().map(|&b| solve_at(pool, "battery-75", b)).collect();
        let by_range: Vec<f64> = RANGES.iter().map(|&r| solve_at(pool, r, 3e6)).collect();
        solves += by_budget.len() + by_range.len();
        for (name, seq) in [("budget", &by_budget), ("range", &by_range)] {
            for w in seq.windows(2) {
                if w[1] < w[0] - MONOTONE_TOL * w[0].abs().max(1.0) {
                    bad.push(format!("seed {seed} {name}: {seq:?}"));
                    break;
                }
            }
        }
        if by_budget[1] > by_budget[0] + 1e-9 {
            rising += 1;
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{solves} solves on 5 seeds, budgets {{0,2,3,4,5}}M and ranges {{30,50,75,900}} km, tol {MONOTONE_TOL:.0e}; 2M beats 0 on {rising}/5{}",
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------- 6

/// Maximum doses administered by land alone, written directly from the
/// instance with no drone terms. Single vaccine only.
fn land_flow_sr(inst: &Instance) -> f64 {
    assert_eq!(inst.vaccines.len(), 1);
    let vac = &inst.vaccines[0];
    let t_max = inst.horizon;
    let mut lp = minilp::Problem::new(minilp::OptimizationDirection::Maximize);
    let idx: HashMap<&str, usize> = inst.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let land: Vec<_> = inst.arcs.iter().filter(|a| a.kind == ArcKind::Land).collect();
    let s: Vec<Vec<minilp::Variable>> = land
        .iter()
        .map(|_| (0..t_max).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect())
        .collect();
    let mut demand = vec![0.0; inst.nodes.len()];
    for d in &inst.demand {
        demand[idx[d.node.as_str()]] += d.doses;
    }
    let mut supply = vec![0.0; t_max];
    for s in inst.effective_supply() {
        supply[s.period - 1] += s.doses;
    }
    let mut x_total = Vec::new();
    for (i, n) in inst.nodes.iter().enumerate() {
        let storage = n.kind.has_storage();
        if !storage && n.kind != NodeKind::OutreachPost {
            continue;
        }
        let serves = n.kind.is_center() && demand[i] > 0.0;
        let x: Vec<Option<minilp::Variable>> = (0..t_max).map(|_| serves.then(|| lp.add_var(1.0, (0.0, f64::INFINITY)))).collect();
        let inv: Vec<Option<minilp::Variable>> = (0..t_max).map(|_| storage.then(|| lp.add_var(0.0, (0.0, f64::INFINITY)))).collect();
        let wb = n.storage_wastage.get(&vac.id).copied().unwrap_or(0.0);
        let ovw = n.ovw_rate.get(&vac.id).copied().unwrap_or(vac.ovw_rate);
        for t in 0..t_max {
            // stock(t) + out(t) + X/(1-ovw) - (1-wb) stock(t-1) - in(t-1) = supply
            let mut row: Vec<(minilp::Variable, f64)> = Vec::new();
            if let Some(v) = inv[t] {
                row.push((v, 1.0));
            }
            if t > 0 {
                if let Some(v) = inv[t - 1] {
                    row.push((v, -(1.0 - wb)));
                }
            }
            let mut arriving: Vec<(minilp::Variable, f64)> = Vec::new();
            for (a, arc) in land.iter().enumerate() {
                let w = arc.transit_wastage.get(&vac.id).copied().unwrap_or(0.0);
                if idx[arc.from.as_str()] == i {
                    row.push((s[a][t], 1.0));
                }
                if idx[arc.to.as_str()] == i && t > 0 {
                    row.push((s[a][t - 1], -(1.0 - w)));
                    arriving.push((s[a][t - 1], 1.0 - w));
                }
            }
            if let Some(v) = x[t] {
                row.push((v, 1.0 / (1.0 - ovw)));
            }
            let rhs = if n.kind == NodeKind::CentralStore { supply[t] } else { 0.0 };
            lp.add_constraint(row, minilp::ComparisonOp::Eq, rhs);
            if let (Some(u), Some(v)) = (n.storage_capacity, inv[t]) {
                let mut cap: Vec<(minilp::Variable, f64)> = vec![(v, vac.dose_volume_cm3)];
                cap.extend(arriving.iter().map(|&(s, w)| (s, w * vac.dose_volume_cm3)));
                lp.add_constraint(cap, minilp::ComparisonOp::Le, u);
            }
        }
        if serves {
            let all: Vec<(minilp::Variable, f64)> = x.iter().flatten().map(|&v| (v, 1.0)).collect();
            lp.add_constraint(all, minilp::ComparisonOp::Le, demand[i]);
            x_total.extend(x.into_iter().flatten());
        }
    }
    for (a, arc) in land.iter().enumerate() {
        if let Some(u) = arc.transport_capacity {
            for t in 0..t_max {
                lp.add_constraint([(s[a][t], vac.dose_volume_cm3)], minilp::ComparisonOp::Le, u);
            }
        }
    }
    let served = lp.solve().expect("land LP solves").objective();
    let all: f64 = inst.demand.iter().chain(&inst.unassigned_demand).map(|d| d.doses).sum();
    if all > 0.0 {
        served / all
    } else {
        1.0
    }
}

fn criterion_zero_budget(pool: &mut Pool) -> Outcome {
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for seed in 1..=5u64 {
        let mut inst = monotone_instance(seed);
        inst.budget = 0.0;
        for link in [PostLink::DroneOnly, PostLink::NearestDistrict] {
            let pre = preprocess_with(&inst, CoverMethod::Exact, link).expect("coverable");
            let p = build_model_p(&pre.expanded, &BuildOptions::default()).expect("builds");
            let q = build_model_q(&pre.reduced, &BuildOptions::default()).expect("builds");
            let sp = pool.solve(&format!("zero-{seed}-{link:?}-P"), &p, &pre.expanded);
            let sq = pool.solve(&format!("zero-{seed}-{link:?}-Q"), &q, &pre.reduced);
            for (tag, s) in [("P", &sp), ("Q", &sq)] {
                let idle = s.hubs.is_empty()
                    && s.drones == 0
                    && s.drones_used.iter().all(|d| d.drones == 0)
                    && s.drone_flow.iter().all(|f| f.doses == 0.0);
                if !idle {
                    bad.push(format!("seed {seed} {link:?} {tag}: drone activity at zero budget"));
                }
            }
            let sr = vaxnet::experiments::outcome_of(&sq, &pre.reduced, 0.0).sr_community;
            let oracle = land_flow_sr(&pre.reduced);
            let d = (sr - oracle).abs();
            worst = worst.max(d);
            cases += 1;
            if d > COLLAPSE_SR_TOL {
                bad.push(format!("seed {seed} {link:?}: SR {sr} vs land LP {oracle}"));
            }
        }
        // The baseline network has no posts to feed at all.
        let base = baseline_instance(&inst, AccessMode::Limited);
        let m = build_model_q(&base, &BuildOptions::default()).expect("builds");
        let s = pool.solve(&format!("zero-{seed}-baseline"), &m, &base);
        let d = (vaxnet::experiments::outcome_of(&s, &base, 0.0).sr_community - land_flow_sr(&base)).abs();
        worst = worst.max(d);
        cases += 1;
        if d > COLLAPSE_SR_TOL {
            bad.push(format!("seed {seed} baseline: off by {d:e}"));
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{cases} zero-budget solves idle every drone; max |SR - land LP SR| {worst:.1e} (tol {COLLAPSE_SR_TOL:.0e}){}",
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------- 7

fn criterion_access_direction() -> Outcome {
    let opts = experiment_opts();
    let mut bad = Vec::new();
    let mut lines = Vec::new();
    for seed in 1..=3u64 {
        let inst = generate_synthetic(&GeneratorConfig::agadez_like(seed)).expect("valid config");
        let limited_net = baseline_instance(&inst, AccessMode::Limited);
        let placed: f64 = limited_net.demand.iter().map(|d| d.doses).sum();
        let lost: f64 = limited_net.unassigned_demand.iter().map(|d| d.doses).sum();
        let coverage = placed / (placed + lost);
        let full = run_baseline(&inst, AccessMode::Full, &opts).expect("solves");
        let limited = run_baseline(&inst, AccessMode::Limited, &opts).expect("solves");
        let (f, l) = (&full.rows[0].outcome, &limited.rows[0].outcome);
        lines.push(format!(
            "seed {seed}: coverage {:.0}%, full {:.3} > limited {:.3} < clinic {:.3}",
            100.0 * coverage,
            f.sr_community,
            l.sr_community,
            l.sr_clinic
        ));
        if !(coverage <= 0.5 && f.sr_community > l.sr_community && l.sr_clinic > l.sr_community) {
            bad.push(seed);
        }
    }
    outcome(bad.is_empty(), lines.join("; "))
}

// ---------------------------------------------------------------- 8

fn criterion_expansion() -> Outcome {
    let opts = experiment_opts();
    let schedule = [2e6, 3e6, 4e6, 5e6];
    let mut bad = Vec::new();
    let (mut stages, mut zero_checks, mut min_gap, mut max_gap) = (0, 0, f64::INFINITY, f64::NEG_INFINITY);
    for seed in 1..=3u64 {
        let cfg = GeneratorConfig {
            seed,
            n_regions: 2,
            ..GeneratorConfig::default()
        };
        let inst = generate_synthetic(&cfg).expect("valid config");
        let drones = [drone_preset("battery-75").expect("preset")];
        let r = run_sequential_expansion(&inst, &schedule, &drones, &opts).expect("runs");
        let metric = |key: &str, name: &str| {
            r.extra
                .iter()
                .find(|e| e.scenario == key && e.metric == name)
                .map(|e| e.value)
        };
        for s in 1..=schedule.len() {
            let key = format!("battery-75-s{s}-Qbar");
            let Some(gap) = metric(&key, "gap_pct") else {
                bad.push(format!("seed {seed} stage {s}: no sequential solve"));
                continue;
            };
            stages += 1;
            min_gap = min_gap.min(gap);
            max_gap = max_gap.max(gap);
            if gap < GAP_FLOOR {
                bad.push(format!("seed {seed} stage {s}: gap {gap}"));
            }
            let within = metric(&key, "q_hubs_in_candidates") == Some(1.0);
            let carried = metric(&key, "fixed_in_q_hubs") == Some(1.0);
            if within && carried {
                zero_checks += 1;
                if gap.abs() > GAP_ZERO_TOL {
                    bad.push(format!("seed {seed} stage {s}: gap {gap} with Q hubs among candidates"));
                }
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{stages} stages on 3 two-region instances, gap% in [{min_gap:.4}, {max_gap:.4}] (floor {GAP_FLOOR:.0e}); {zero_checks} stages with Q hubs among candidates all at 0 (tol {GAP_ZERO_TOL:.0e}){}",
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------- 9

fn criterion_lp_round_trip(pool: &mut Pool) -> Outcome {
    // Add the set cover models and the multi-vaccine community models.
    for (i, inst) in generated_family().iter().enumerate().step_by(3) {
        let pre = preprocess_with(inst, CoverMethod::Exact, PostLink::NearestDistrict).expect("coverable");
        let (cover, _) = vaxnet::formulation::setcover::build_set_cover(
            &pre.indicator,
            &vaxnet::preprocess::clinic_communities(inst),
        );
        pool.problems.push((format!("cover-{i}"), cover));
        pool.model(&format!("family-{i}-P"), &build_model_p(&pre.expanded, &BuildOptions::default()).expect("builds"));
    }
    let mut bad = Vec::new();
    let mut nnz = 0;
    for (tag, p) in &pool.problems {
        nnz += p.nnz();
        let text = match to_lp_string(p) {
            Ok(t) => t,
            Err(e) => {
                bad.push(format!("{tag}: {e}"));
                continue;
            }
        };
        match parse_lp(&text) {
            Ok(back) if &back == p => {}
            Ok(_) => bad.push(format!("{tag}: parsed problem differs")),
            Err(e) => bad.push(format!("{tag}: {e}")),
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} built models ({nnz} nonzeros) written and re-parsed identically{}",
            pool.problems.len(),
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------- 10

fn pipeline_bytes() -> (String, String, String) {
    let cfg = GeneratorConfig {
        seed: 77,
        vaccines: vec!["BCG".into(), "Measles".into()],
        budget: 3e6,
        ..GeneratorConfig::default()
    };
    let inst = generate_synthetic(&cfg).expect("valid config");
    let pre = preprocess_with(&inst, CoverMethod::Exact, PostLink::NearestDistrict).expect("coverable");
    let m = build_model_q(&pre.reduced, &BuildOptions::default()).expect("builds");
    let sol = solve_model(&m, &SolveOptions::default()).expect("solves");
    let presets: Vec<_> = ["battery-30", "fuel-900"].iter().map(|p| drone_preset(p).expect("preset")).collect();
    let grid = run_budget_range_grid(&with_drone(&inst, &presets[0]), &[0.0, 2e6], &presets, &experiment_opts()).expect("runs");
    (instance_to_json(&inst), to_json(&sol), report_to_csv(&grid).expect("csv"))
}

fn criterion_determinism() -> Outcome {
    let a = pipeline_bytes();
    let b = pipeline_bytes();
    let same = [a.0 == b.0, a.1 == b.1, a.2 == b.2];
    outcome(
        same.iter().all(|&s| s),
        format!(
            "instance {} bytes, solution {} bytes, CSV {} bytes; identical: {:?}",
            a.0.len(),
            a.1.len(),
            a.2.len(),
            same
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut pool = Pool::default();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        println!(
            "{} [{id:>2}] {name}: {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        results.push((id, name, o));
    };
    run(1, "MILP oracle equivalence", &mut || criterion_oracle(&mut pool));
    run(2, "set cover exactness", &mut criterion_set_cover);
    run(3, "aggregation conservation", &mut criterion_conservation);
    run(5, "monotonicity", &mut || criterion_monotonicity(&mut pool));
    run(6, "zero-budget collapse", &mut || criterion_zero_budget(&mut pool));
    run(7, "access-mode direction", &mut criterion_access_direction);
    run(8, "sequential-expansion gap", &mut criterion_expansion);
    run(4, "constraint residual audit", &mut || criterion_audit(&pool));
    run(9, "LP file round trip", &mut || criterion_lp_round_trip(&mut pool));
    run(10, "determinism", &mut criterion_determinism);
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed in {:.1} s",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
