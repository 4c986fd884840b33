//! End-to-end experiment runs: baseline access modes, capacity sweeps,
//! budget × range grids, a two-level fractional factorial, and staged hub
//! expansion.
//!
//! Cells are independent solves and run on up to `VAXNET_THREADS` threads.
//! Rows come back sorted by scenario key, so reports do not depend on the
//! thread count.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;
use vaxnet_milp::SolveOptions;

use crate::formulation::{build_model_q, build_model_q_restricted, BuildError, BuildOptions, HubRestriction, ModelKind};
use crate::io::generator::with_drone;
use crate::metrics::{compute_fic, compute_supply_ratio, compute_utilization, SrLevel};
use crate::model::{ArcKind, DroneSpec, Instance, NodeKind, Solution, SolutionStatus};
use crate::preprocess::{
    aggregate_demand, build_reduced_network, full_access_assignment, preprocess_with, rebuild_access_arcs, CoverMethod,
    PostLink, PreprocessError, Uncovered,
};
use crate::solve::{solve_model, SolveModelError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Solve(#[from] SolveModelError),
    #[error("{0}")]
    Input(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessMode {
    /// Every community reaches every clinic.
    Full,
    /// Communities reach centers within the access radius only.
    Limited,
}

impl std::fmt::Display for AccessMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AccessMode::Full => "full",
            AccessMode::Limited => "limited",
        })
    }
}

/// Everything that distinguishes one solve from another.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub key: String,
    pub instance: String,
    pub model: ModelKind,
    pub access_mode: AccessMode,
    pub budget: f64,
    pub drone_preset: String,
    pub tc_multiplier: f64,
    pub sc_multiplier: f64,
    pub demand_multiplier: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<usize>,
}

impl Scenario {
    fn new(key: impl Into<String>, instance: &Instance, model: ModelKind, access_mode: AccessMode) -> Self {
        Self {
            key: key.into(),
            instance: instance.name.clone(),
            model,
            access_mode,
            budget: instance.budget,
            drone_preset: instance.drone.name.clone(),
            tc_multiplier: 1.0,
            sc_multiplier: 1.0,
            demand_multiplier: 1.0,
            stage: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub status: String,
    pub objective: f64,
    pub gap: f64,
    /// Administered over all demand, reachable or not.
    pub sr_community: f64,
    /// Administered over demand assigned to a center.
    pub sr_clinic: f64,
    pub sr_community_by_region: BTreeMap<String, f64>,
    pub sr_clinic_by_region: BTreeMap<String, f64>,
    pub fic: f64,
    pub hubs: Vec<String>,
    pub drones: u64,
    pub nodes: usize,
    #[serde(skip)]
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub scenario: Scenario,
    pub outcome: Outcome,
}

/// A derived figure that belongs to a scenario (or to the whole run, with
/// an empty key).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtraMetric {
    pub scenario: String,
    pub metric: String,
    pub unit: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ExperimentReport {
    pub experiment: String,
    pub rows: Vec<ReportRow>,
    pub extra: Vec<ExtraMetric>,
}

impl ExperimentReport {
    fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.into(),
            ..Default::default()
        }
    }

    pub fn row(&self, key: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.scenario.key == key)
    }

    fn sort(&mut self) {
        self.rows.sort_by(|a, b| a.scenario.key.cmp(&b.scenario.key));
    }

    /// Fixed-width summary for the terminal.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{:<36} {:>10} {:>8} {:>8} {:>8} {:>6} {:>8}\n",
            "scenario", "status", "SR", "SRclin", "FIC", "Z", "time_s"
        );
        for r in &self.rows {
            let o = &r.outcome;
            s.push_str(&format!(
                "{:<36} {:>10} {:>8.4} {:>8.4} {:>8.4} {:>6} {:>8.2}\n",
                r.scenario.key, o.status, o.sr_community, o.sr_clinic, o.fic, o.drones, o.runtime_s
            ));
        }
        for e in &self.extra {
            s.push_str(&format!("{} {} {} = {:.6}\n", e.scenario, e.metric, e.unit, e.value));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    pub solve: SolveOptions,
    pub build: BuildOptions,
    pub cover: CoverMethod,
    /// Drone-only posts make the zero-budget cell coincide with the
    /// limited-access baseline.
    pub post_link: PostLink,
    /// `None` reads `VAXNET_THREADS`, falling back to the core count.
    pub threads: Option<usize>,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            build: BuildOptions::default(),
            cover: CoverMethod::Exact,
            post_link: PostLink::DroneOnly,
            threads: None,
        }
    }
}

impl ExperimentOptions {
    fn thread_count(&self, cells: usize) -> usize {
        let n = self.threads.unwrap_or_else(|| {
            std::env::var("VAXNET_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        });
        n.clamp(1, cells.max(1))
    }
}

/// Runs `f` over `cells` on a bounded pool, keeping input order.
fn parallel_map<T: Sync, R: Send>(cells: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if threads <= 1 {
        return cells.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<R>>> = Mutex::new((0..cells.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                let r = f(&cells[i]);
                out.lock().expect("no poisoned workers")[i] = Some(r);
            });
        }
    });
    out.into_inner()
        .expect("no poisoned workers")
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect()
}

fn status_label(s: Option<SolutionStatus>) -> String {
    match s {
        Some(SolutionStatus::Optimal) => "optimal".into(),
        Some(SolutionStatus::Feasible { .. }) => "feasible".into(),
        Some(SolutionStatus::Infeasible) => "infeasible".into(),
        Some(SolutionStatus::Unbounded) => "unbounded".into(),
        Some(SolutionStatus::NoSolution) | None => "no_solution".into(),
    }
}

/// Metrics of a solved aggregated instance.
pub fn outcome_of(solution: &Solution, instance: &Instance, runtime_s: f64) -> Outcome {
    let community = compute_supply_ratio(solution, instance, SrLevel::CommunitiesOfRegion);
    let clinic = compute_supply_ratio(solution, instance, SrLevel::Region);
    Outcome {
        status: status_label(solution.status),
        objective: solution.objective,
        gap: solution.gap,
        sr_community: community.total.sr,
        sr_clinic: clinic.total.sr,
        sr_community_by_region: community.rows.iter().map(|r| (r.unit.clone(), r.sr)).collect(),
        sr_clinic_by_region: clinic.rows.iter().map(|r| (r.unit.clone(), r.sr)).collect(),
        fic: compute_fic(solution, instance).proportion,
        hubs: solution.hubs.clone(),
        drones: solution.drones,
        nodes: solution.nodes_explored,
        runtime_s,
    }
}

fn solve_q(
    instance: &Instance,
    restriction: Option<&HubRestriction>,
    opts: &ExperimentOptions,
) -> Result<(Solution, Outcome), ExperimentError> {
    let start = Instant::now();
    let model = match restriction {
        Some(r) => build_model_q_restricted(instance, r, &opts.build)?,
        None => build_model_q(instance, &opts.build)?,
    };
    let sol = solve_model(&model, &opts.solve)?;
    let outcome = outcome_of(&sol, instance, start.elapsed().as_secs_f64());
    Ok((sol, outcome))
}

/// Network without drones and outreach posts, at zero budget.
fn baseline_network(instance: &Instance) -> Instance {
    let mut out = instance.clone();
    out.budget = 0.0;
    let posts: BTreeSet<String> = out
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::OutreachPost)
        .map(|n| n.id.clone())
        .collect();
    let demand_on_posts = out.demand.iter().any(|d| posts.contains(&d.node));
    if !demand_on_posts {
        out.nodes.retain(|n| !posts.contains(&n.id));
    }
    out.arcs
        .retain(|a| a.kind != ArcKind::Drone && !posts.contains(&a.from) && !posts.contains(&a.to));
    rebuild_access_arcs(&mut out);
    out
}

/// The aggregated instance a baseline run solves.
pub fn baseline_instance(instance: &Instance, mode: AccessMode) -> Instance {
    let net = baseline_network(instance);
    let agg = match mode {
        AccessMode::Full => full_access_assignment(&net),
        AccessMode::Limited => aggregate_demand(&net, Uncovered::Keep).expect("keep policy never fails"),
    };
    build_reduced_network(&net, &agg)
}

fn baseline_row(instance: &Instance, mode: AccessMode, key: String, opts: &ExperimentOptions) -> Result<ReportRow, ExperimentError> {
    let reduced = baseline_instance(instance, mode);
    let (_, outcome) = solve_q(&reduced, None, opts)?;
    let mut scenario = Scenario::new(key, instance, ModelKind::Q, mode);
    scenario.budget = 0.0;
    scenario.drone_preset = "none".into();
    Ok(ReportRow { scenario, outcome })
}

/// No drones, no outreach posts. Reports community-level and clinic-level
/// supply ratios.
pub fn run_baseline(instance: &Instance, mode: AccessMode, opts: &ExperimentOptions) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::new("baseline");
    report.rows.push(baseline_row(instance, mode, format!("baseline-{mode}"), opts)?);
    Ok(report)
}

/// Multiplies land capacities by `tc` and storage capacities by `sc`.
pub fn scale_capacities(instance: &Instance, tc: f64, sc: f64) -> Instance {
    let mut out = instance.clone();
    for a in &mut out.arcs {
        if let Some(u) = a.transport_capacity.as_mut() {
            *u *= tc;
        }
    }
    for n in &mut out.nodes {
        if let Some(u) = n.storage_capacity.as_mut() {
            *u *= sc;
        }
    }
    out
}

/// Multiplies every demand entry, and any explicit supply, by `factor`.
pub fn scale_demand(instance: &Instance, factor: f64) -> Instance {
    let mut out = instance.clone();
    for d in out.demand.iter_mut().chain(out.unassigned_demand.iter_mut()) {
        d.doses *= factor;
    }
    if let Some(s) = out.central_supply.as_mut() {
        for e in s {
            e.doses *= factor;
        }
    }
    out
}

/// Clinics at peak storage use in the limited-access baseline.
pub fn bottleneck_clinics(instance: &Instance, opts: &ExperimentOptions) -> Result<BTreeSet<String>, ExperimentError> {
    let reduced = baseline_instance(instance, AccessMode::Limited);
    let (sol, _) = solve_q(&reduced, None, opts)?;
    let util = compute_utilization(&sol, &reduced);
    let clinic_use: Vec<(String, f64)> = util
        .storage
        .iter()
        .filter(|s| reduced.node(&s.node).is_some_and(|n| n.kind == NodeKind::Clinic))
        .map(|s| (s.node.clone(), s.utilization))
        .collect();
    let peak = clinic_use.iter().map(|c| c.1).fold(0.0, f64::max);
    if peak <= 0.0 {
        return Ok(BTreeSet::new());
    }
    Ok(clinic_use
        .into_iter()
        .filter(|(_, u)| *u >= peak * (1.0 - 1e-6))
        .map(|(id, _)| id)
        .collect())
}

fn fmt_level(v: f64) -> String {
    format!("{v:.3}")
}

/// Limited-access baseline on a grid of capacity multipliers. With
/// `bottleneck_unlimited`, the most loaded clinics get unlimited storage.
pub fn run_capacity_sweep(
    instance: &Instance,
    tc_levels: &[f64],
    sc_levels: &[f64],
    bottleneck_unlimited: bool,
    opts: &ExperimentOptions,
) -> Result<ExperimentReport, ExperimentError> {
    if tc_levels.iter().chain(sc_levels).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(ExperimentError::Input("capacity multipliers must be positive".into()));
    }
    let mut base = instance.clone();
    let mut report = ExperimentReport::new("capacity_sweep");
    if bottleneck_unlimited {
        let clinics = bottleneck_clinics(instance, opts)?;
        for n in &mut base.nodes {
            if clinics.contains(&n.id) {
                n.storage_capacity = None;
            }
        }
        for c in &clinics {
            report.extra.push(ExtraMetric {
                scenario: String::new(),
                metric: "unlimited_clinic".into(),
                unit: c.clone(),
                value: 1.0,
            });
        }
    }
    let cells: Vec<(f64, f64)> = tc_levels
        .iter()
        .flat_map(|&tc| sc_levels.iter().map(move |&sc| (tc, sc)))
        .collect();
    let threads = opts.thread_count(cells.len());
    let rows = parallel_map(&cells, threads, |&(tc, sc)| {
        let scaled = scale_capacities(&base, tc, sc);
        let key = format!("tc{}-sc{}", fmt_level(tc), fmt_level(sc));
        let mut row = baseline_row(&scaled, AccessMode::Limited, key, opts)?;
        row.scenario.tc_multiplier = tc;
        row.scenario.sc_multiplier = sc;
        Ok::<_, ExperimentError>(row)
    });
    for r in rows {
        report.rows.push(r?);
    }
    report.sort();
    Ok(report)
}

/// Set cover, post placement and aggregation for one drone setting.
pub fn aggregated_for(instance: &Instance, drone: &DroneSpec, opts: &ExperimentOptions) -> Result<Instance, ExperimentError> {
    let with = with_drone(instance, drone);
    let pre = preprocess_with(&with, opts.cover, opts.post_link)?;
    Ok(pre.reduced)
}

fn budget_key(b: f64) -> String {
    format!("{:09.3}M", b / 1e6)
}

/// Solves the aggregated model for every budget and drone preset.
pub fn run_budget_range_grid(
    instance: &Instance,
    budgets: &[f64],
    drones: &[DroneSpec],
    opts: &ExperimentOptions,
) -> Result<ExperimentReport, ExperimentError> {
    if budgets.iter().any(|&b| !(b >= 0.0 && b.is_finite())) {
        return Err(ExperimentError::Input("budgets must be non-negative".into()));
    }
    let mut reduced = Vec::new();
    for d in drones {
        reduced.push(aggregated_for(instance, d, opts)?);
    }
    let cells: Vec<(usize, f64)> = (0..drones.len())
        .flat_map(|p| budgets.iter().map(move |&b| (p, b)))
        .collect();
    let threads = opts.thread_count(cells.len());
    let rows = parallel_map(&cells, threads, |&(p, b)| {
        let mut inst = reduced[p].clone();
        inst.budget = b;
        let (_, outcome) = solve_q(&inst, None, opts)?;
        let key = format!("{}-b{}", drones[p].name, budget_key(b));
        let scenario = Scenario::new(key, &inst, ModelKind::Q, AccessMode::Limited);
        Ok::<_, ExperimentError>(ReportRow { scenario, outcome })
    });
    let mut report = ExperimentReport::new("budget_range_grid");
    for r in rows {
        report.rows.push(r?);
    }
    report.sort();
    Ok(report)
}

pub const FACTOR_NAMES: [&str; 6] = ["budget", "payload", "range", "tc", "sc", "demand"];

/// Low and high settings of the six design factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorLevels {
    pub budget: (f64, f64),
    pub payload_cm3: (f64, f64),
    pub range_km: (f64, f64),
    pub tc: (f64, f64),
    pub sc: (f64, f64),
    pub demand: (f64, f64),
}

impl Default for FactorLevels {
    fn default() -> Self {
        Self {
            budget: (2e6, 4e6),
            payload_cm3: (1000.0, 2000.0),
            range_km: (30.0, 75.0),
            tc: (1.0, 2.0),
            sc: (1.0, 2.0),
            demand: (1.0, 1.5),
        }
    }
}

impl FactorLevels {
    fn pairs(&self) -> [(f64, f64); 6] {
        [self.budget, self.payload_cm3, self.range_km, self.tc, self.sc, self.demand]
    }
}

/// 16-run resolution IV design in ±1 coding: A..D in standard order with
/// E = ABC and F = BCD.
pub fn fractional_factorial_design() -> Vec<[i8; 6]> {
    (0..16)
        .map(|run| {
            let bit = |k: usize| if run >> k & 1 == 1 { 1i8 } else { -1 };
            let (a, b, c, d) = (bit(0), bit(1), bit(2), bit(3));
            [a, b, c, d, a * b * c, b * c * d]
        })
        .collect()
}

/// `mean(high) − mean(low)` per factor.
pub fn main_effects(design: &[[i8; 6]], response: &[f64]) -> [f64; 6] {
    let mut out = [0.0; 6];
    for (f, e) in out.iter_mut().enumerate() {
        let (mut hi, mut nh, mut lo, mut nl) = (0.0, 0, 0.0, 0);
        for (row, &y) in design.iter().zip(response) {
            if row[f] > 0 {
                hi += y;
                nh += 1;
            } else {
                lo += y;
                nl += 1;
            }
        }
        *e = hi / nh as f64 - lo / nl as f64;
    }
    out
}

/// Factor indices by decreasing absolute effect.
pub fn rank_effects(effects: &[f64; 6]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..6).collect();
    idx.sort_by(|&a, &b| effects[b].abs().total_cmp(&effects[a].abs()).then(a.cmp(&b)));
    idx
}

/// Runs the 2^(6−2) design with community SR as the response.
pub fn run_fractional_factorial(
    instance: &Instance,
    levels: &FactorLevels,
    opts: &ExperimentOptions,
) -> Result<ExperimentReport, ExperimentError> {
    for (name, (lo, hi)) in FACTOR_NAMES.iter().zip(levels.pairs()) {
        if !(lo.is_finite() && hi.is_finite()) || lo == hi {
            return Err(ExperimentError::Input(format!("factor {name} needs two distinct levels")));
        }
    }
    let design = fractional_factorial_design();
    let threads = opts.thread_count(design.len());
    let pairs = levels.pairs();
    let runs: Vec<(usize, [i8; 6])> = design.iter().copied().enumerate().collect();
    let rows = parallel_map(&runs, threads, |&(run, coded)| {
        let at = |f: usize| if coded[f] > 0 { pairs[f].1 } else { pairs[f].0 };
        let mut drone = instance.drone.clone();
        drone.payload = at(1);
        drone.range_km = at(2);
        drone.name = format!("p{}-r{}", at(1), at(2));
        let scaled = scale_demand(&scale_capacities(instance, at(3), at(4)), at(5));
        let mut reduced = aggregated_for(&scaled, &drone, opts)?;
        reduced.budget = at(0);
        let (_, outcome) = solve_q(&reduced, None, opts)?;
        let mut scenario = Scenario::new(format!("run{:02}", run + 1), &reduced, ModelKind::Q, AccessMode::Limited);
        scenario.tc_multiplier = at(3);
        scenario.sc_multiplier = at(4);
        scenario.demand_multiplier = at(5);
        Ok::<_, ExperimentError>(ReportRow { scenario, outcome })
    });
    let mut report = ExperimentReport::new("fractional_factorial");
    for r in rows {
        report.rows.push(r?);
    }
    report.sort();
    let response: Vec<f64> = report.rows.iter().map(|r| r.outcome.sr_community).collect();
    let effects = main_effects(&design, &response);
    for (rank, f) in rank_effects(&effects).into_iter().enumerate() {
        report.extra.push(ExtraMetric {
            scenario: String::new(),
            metric: format!("effect_{}", FACTOR_NAMES[f]),
            unit: format!("rank{}", rank + 1),
            value: effects[f],
        });
    }
    Ok(report)
}

/// `100 (SR_opt − SR_seq) / SR_opt`, zero when the optimum serves nothing.
pub fn sr_gap_pct(optimal: f64, sequential: f64) -> f64 {
    if optimal <= 0.0 {
        0.0
    } else {
        100.0 * (optimal - sequential) / optimal
    }
}

/// Stage-wise hub expansion at regional centers only, carrying opened hubs
/// forward, compared per stage with the unrestricted optimum.
pub fn run_sequential_expansion(
    instance: &Instance,
    schedule: &[f64],
    drones: &[DroneSpec],
    opts: &ExperimentOptions,
) -> Result<ExperimentReport, ExperimentError> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] <= w[0]) || schedule.iter().any(|b| !(*b >= 0.0)) {
        return Err(ExperimentError::Input("budget schedule must be strictly increasing".into()));
    }
    let mut report = ExperimentReport::new("sequential_expansion");
    for drone in drones {
        let reduced = aggregated_for(instance, drone, opts)?;
        let candidates: BTreeSet<String> = reduced
            .hub_candidates()
            .filter(|n| n.kind == NodeKind::RegionalCenter)
            .map(|n| n.id.clone())
            .collect();
        let optimal = parallel_map(schedule, opts.thread_count(schedule.len()), |&b| {
            let mut inst = reduced.clone();
            inst.budget = b;
            solve_q(&inst, None, opts)
        });
        let mut fixed: BTreeSet<String> = BTreeSet::new();
        for (s, (&b, opt)) in schedule.iter().zip(optimal).enumerate() {
            let stage = s + 1;
            let (_, q) = opt?;
            let mut inst = reduced.clone();
            inst.budget = b;
            let key = |tag: &str| format!("{}-s{stage}-{tag}", drone.name);
            let mut sq = Scenario::new(key("Q"), &inst, ModelKind::Q, AccessMode::Limited);
            sq.stage = Some(stage);
            let restriction = HubRestriction {
                candidates: candidates.clone(),
                fixed_open: fixed.clone(),
            };
            let mut sbar = Scenario::new(key("Qbar"), &inst, ModelKind::QBar, AccessMode::Limited);
            sbar.stage = Some(stage);
            let q_within = q.hubs.iter().all(|h| candidates.contains(h));
            let fixed_within = fixed.iter().all(|h| q.hubs.contains(h));
            match solve_q(&inst, Some(&restriction), opts) {
                Ok((_, qbar)) => {
                    fixed = qbar.hubs.iter().cloned().collect();
                    let gap = sr_gap_pct(q.sr_community, qbar.sr_community);
                    for (metric, value) in [
                        ("gap_pct", gap),
                        ("objective_gap", q.objective - qbar.objective),
                        ("q_hubs_in_candidates", f64::from(u8::from(q_within))),
                        ("fixed_in_q_hubs", f64::from(u8::from(fixed_within))),
                    ] {
                        report.extra.push(ExtraMetric {
                            scenario: sbar.key.clone(),
                            metric: metric.into(),
                            unit: String::new(),
                            value,
                        });
                    }
                    report.rows.push(ReportRow {
                        scenario: sbar,
                        outcome: qbar,
                    });
                }
                Err(ExperimentError::Build(BuildError::SunkCost { cost, budget })) => {
                    log::warn!("stage {stage}: sunk cost {cost} exceeds budget {budget}");
                    report.extra.push(ExtraMetric {
                        scenario: sbar.key.clone(),
                        metric: "stage_infeasible".into(),
                        unit: String::new(),
                        value: 1.0,
                    });
                }
                Err(e) => return Err(e),
            }
            report.rows.push(ReportRow { scenario: sq, outcome: q });
        }
    }
    report.sort();
    Ok(report)
}
