//! `vaxnet` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 infeasible model,
//! 3 solver limit reached (outputs are still written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use vaxnet::experiments::{
    outcome_of, run_baseline, run_budget_range_grid, run_capacity_sweep, run_fractional_factorial,
    run_sequential_expansion, AccessMode, ExperimentOptions, ExperimentReport, FactorLevels, Outcome,
};
use vaxnet::formulation::{build_model_p, build_model_q, is_community_level, BuildOptions, Model};
use vaxnet::io::csv_out::export_results_csv;
use vaxnet::io::defaults::{default_drone_specs, drone_preset, PRESET_NAMES};
use vaxnet::io::generator::{generate_synthetic, GeneratorConfig};
use vaxnet::io::{instance_to_json, load_instance, save_instance, write_json};
use vaxnet::model::{DroneSpec, NodeKind, SolutionStatus};
use vaxnet::preprocess::{preprocess_with, CoverMethod, PostLink};
use vaxnet::solve::{solve_model, SolveModelError};
use vaxnet::Instance;
use vaxnet_milp::{write_lp_file, SolveError, SolveOptions};

const INFEASIBLE: u8 = 2;
const LIMIT: u8 = 3;

#[derive(Parser)]
#[command(name = "vaxnet", version, about = "Vaccine cold-chain network design with drone hubs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance file and print its size.
    Validate(Common),
    /// Select outreach hosts and write the aggregated instance.
    Preprocess {
        #[command(flatten)]
        common: Common,
        /// Also write the expanded (community-level) instance here.
        #[arg(long, value_name = "PATH")]
        expanded: Option<PathBuf>,
    },
    /// Solve model P or Q and write the solution as JSON.
    Solve(ModelArgs),
    /// Write the built model in LP format.
    ExportLp(ModelArgs),
    /// Zero-budget runs without drones or outreach posts.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// Run one access mode only.
        #[arg(long, value_enum)]
        access: Option<Access>,
    },
    /// Baseline over a grid of transport and storage capacity multipliers.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,1.5,2")]
        tc: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,1.5,2")]
        sc: Vec<f64>,
        /// Lift storage limits at the most loaded clinics.
        #[arg(long)]
        bottleneck: bool,
    },
    /// Model Q over budgets and drone presets.
    Grid {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0,2e6,4e6")]
        budgets: Vec<f64>,
        /// Drone presets; all of them when omitted.
        #[arg(long, value_delimiter = ',')]
        presets: Vec<String>,
    },
    /// Two-level fractional factorial design over six factors.
    Doe(Common),
    /// Stage-wise hub expansion against the unrestricted optimum.
    Expand {
        #[command(flatten)]
        common: Common,
        /// Strictly increasing budget per stage.
        #[arg(long, value_delimiter = ',', default_value = "2e6,3e6,4e6,5e6")]
        schedule: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "battery-75")]
        presets: Vec<String>,
    },
    /// Write a seeded synthetic instance.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    instance: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Walking radius for access, in km [instance value, 5 when unset].
    #[arg(long, value_name = "KM")]
    radius_km: Option<f64>,
    /// Weight of delivered doses in the objective [instance value, 0.001 when unset].
    #[arg(long)]
    epsilon: Option<f64>,
    /// Relative optimality gap.
    #[arg(long)]
    gap: Option<f64>,
    /// Wall-clock limit per solve, in seconds.
    #[arg(long, value_name = "SECONDS")]
    time_limit: Option<f64>,
    #[arg(long, value_enum, default_value_t = Cover::Exact)]
    cover: Cover,
    #[arg(long, value_enum, default_value_t = Link::DroneOnly)]
    post_link: Link,
    /// Solver progress and debug logs on stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = ModelArg::Q)]
    model: ModelArg,
    /// Override the instance budget.
    #[arg(long)]
    budget: Option<f64>,
    /// Require at least this many drones.
    #[arg(long, default_value_t = 0)]
    min_drones: u64,
    /// Keep each hub's drone count fixed over the horizon.
    #[arg(long)]
    stationed: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Region::Default)]
    region: Region,
    #[arg(long)]
    regions: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    vaccines: Vec<String>,
    #[arg(long)]
    drone: Option<String>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, value_name = "KM")]
    radius_km: Option<f64>,
    #[arg(long)]
    verbose: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    #[value(name = "P", alias = "p")]
    P,
    #[value(name = "Q", alias = "q")]
    Q,
}

#[derive(Clone, Copy, ValueEnum)]
enum Access {
    Full,
    Limited,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cover {
    Exact,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum Link {
    DroneOnly,
    NearestDistrict,
}

#[derive(Clone, Copy, ValueEnum)]
enum Region {
    Default,
    Agadez,
    Maradi,
}

impl Common {
    fn check(&self) -> Result<()> {
        if let Some(r) = self.radius_km {
            if !(r > 0.0 && r.is_finite()) {
                bail!("--radius-km must be positive");
            }
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                bail!("--epsilon must be non-negative");
            }
        }
        self.solve_options().validate().map_err(anyhow::Error::msg)
    }

    fn load(&self) -> Result<Instance> {
        let mut inst = load_instance(&self.instance)?;
        if let Some(r) = self.radius_km {
            inst.access_radius_km = r;
        }
        if let Some(e) = self.epsilon {
            inst.epsilon = e;
        }
        info!(
            "loaded {}: {} nodes, {} arcs, {} demand entries",
            inst.name,
            inst.nodes.len(),
            inst.arcs.len(),
            inst.demand.len()
        );
        Ok(inst)
    }

    fn solve_options(&self) -> SolveOptions {
        let mut opts = SolveOptions {
            time_limit_s: self.time_limit,
            verbose: self.verbose,
            ..SolveOptions::default()
        };
        if let Some(g) = self.gap {
            opts.relative_gap = g;
        }
        opts
    }

    fn cover(&self) -> CoverMethod {
        match self.cover {
            Cover::Exact => CoverMethod::Exact,
            Cover::Greedy => CoverMethod::Greedy,
        }
    }

    fn link(&self) -> PostLink {
        match self.post_link {
            Link::DroneOnly => PostLink::DroneOnly,
            Link::NearestDistrict => PostLink::NearestDistrict,
        }
    }

    fn experiment_options(&self) -> ExperimentOptions {
        ExperimentOptions {
            solve: self.solve_options(),
            cover: self.cover(),
            post_link: self.link(),
            ..ExperimentOptions::default()
        }
    }
}

fn presets(names: &[String]) -> Result<Vec<DroneSpec>> {
    if names.is_empty() {
        return Ok(default_drone_specs());
    }
    names
        .iter()
        .map(|n| {
            drone_preset(n).with_context(|| format!("unknown drone preset {n:?} (known: {})", PRESET_NAMES.join(", ")))
        })
        .collect()
}

fn status_code(status: Option<SolutionStatus>) -> u8 {
    match status {
        Some(SolutionStatus::Optimal) => 0,
        Some(SolutionStatus::Infeasible) => INFEASIBLE,
        Some(SolutionStatus::Unbounded) => 1,
        Some(SolutionStatus::Feasible { .. }) | Some(SolutionStatus::NoSolution) | None => LIMIT,
    }
}

fn report_code(report: &ExperimentReport) -> u8 {
    let statuses: Vec<&str> = report.rows.iter().map(|r| r.outcome.status.as_str()).collect();
    if statuses.iter().any(|s| *s == "feasible" || *s == "no_solution") {
        LIMIT
    } else if statuses.contains(&"infeasible") {
        INFEASIBLE
    } else {
        0
    }
}

fn finish_report(report: &ExperimentReport, out: Option<&Path>) -> Result<u8> {
    print!("{}", report.summary());
    if let Some(path) = out {
        export_results_csv(report, path)?;
        info!("wrote {}", path.display());
    }
    Ok(report_code(report))
}

/// The instance a model of `kind` runs on: the expanded network for P, the
/// aggregated one for Q. Already aggregated input goes to Q as is.
fn model_instance(inst: &Instance, common: &Common, kind: ModelArg) -> Result<Instance> {
    if !is_community_level(inst) {
        return match kind {
            ModelArg::Q => Ok(inst.clone()),
            ModelArg::P => bail!("model P needs community-level demand; {} is already aggregated", inst.name),
        };
    }
    let pre = preprocess_with(inst, common.cover(), common.link())?;
    info!("{} outreach hosts selected", pre.selection.size());
    Ok(match kind {
        ModelArg::P => pre.expanded,
        ModelArg::Q => pre.reduced,
    })
}

fn build(args: &ModelArgs) -> Result<(Instance, Model)> {
    let mut inst = args.common.load()?;
    if let Some(b) = args.budget {
        if !(b >= 0.0 && b.is_finite()) {
            bail!("--budget must be non-negative");
        }
        inst.budget = b;
    }
    let target = model_instance(&inst, &args.common, args.model)?;
    let opts = BuildOptions {
        stationed_drones: args.stationed,
        min_drones: args.min_drones,
    };
    let model = match args.model {
        ModelArg::P => build_model_p(&target, &opts)?,
        ModelArg::Q => build_model_q(&target, &opts)?,
    };
    info!(
        "model {}: {} columns, {} rows",
        model.kind,
        model.problem.num_vars(),
        model.problem.num_rows()
    );
    Ok((target, model))
}

fn print_outcome(o: &Outcome) {
    println!("status      {}", o.status);
    if o.status != "optimal" && o.status != "feasible" {
        return;
    }
    println!("objective   {:.6}", o.objective);
    println!("gap         {:.3e}", o.gap);
    println!("SR          {:.4}", o.sr_community);
    println!("SR clinics  {:.4}", o.sr_clinic);
    println!("FIC         {:.4}", o.fic);
    println!("hubs        {}", if o.hubs.is_empty() { "-".into() } else { o.hubs.join(" ") });
    println!("drones      {}", o.drones);
    println!("B&B nodes   {}", o.nodes);
}

fn solve(args: &ModelArgs) -> Result<u8> {
    let (target, model) = build(args)?;
    let start = std::time::Instant::now();
    let sol = match solve_model(&model, &args.common.solve_options()) {
        Ok(s) => s,
        Err(SolveModelError::Solver(e @ (SolveError::TimeLimit | SolveError::IterationLimit(_)))) => {
            eprintln!("solver stopped before finding a solution: {e}");
            return Ok(LIMIT);
        }
        Err(e) => return Err(e.into()),
    };
    print_outcome(&outcome_of(&sol, &target, start.elapsed().as_secs_f64()));
    if let Some(path) = &args.common.out {
        write_json(&sol, path)?;
        info!("wrote {}", path.display());
    }
    let code = status_code(sol.status);
    if code == INFEASIBLE {
        eprintln!("model is infeasible");
    } else if code == LIMIT {
        eprintln!("solver limit reached; the solution may not be optimal");
    }
    Ok(code)
}

fn export_lp(args: &ModelArgs) -> Result<u8> {
    let (_, model) = build(args)?;
    match &args.common.out {
        Some(path) => {
            write_lp_file(&model.problem, path)?;
            info!("wrote {}", path.display());
        }
        None => print!("{}", vaxnet_milp::to_lp_string(&model.problem)?),
    }
    Ok(0)
}

fn validate(common: &Common) -> Result<u8> {
    let inst = common.load()?;
    let count = |k: NodeKind| inst.nodes.iter().filter(|n| n.kind == k).count();
    println!(
        "{}: valid; {} clinics, {} communities, {} hub candidates, {} arcs, {} vaccines, {} periods",
        inst.name,
        count(NodeKind::Clinic),
        count(NodeKind::Community),
        inst.hub_candidates().count(),
        inst.arcs.len(),
        inst.vaccines.len(),
        inst.horizon
    );
    Ok(0)
}

fn preprocess(common: &Common, expanded: Option<&Path>) -> Result<u8> {
    let inst = common.load()?;
    let pre = preprocess_with(&inst, common.cover(), common.link())?;
    let posts = pre
        .expanded
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::OutreachPost)
        .count();
    println!(
        "{} hosts selected{}, {} outreach posts added; reduced network has {} nodes",
        pre.selection.size(),
        if pre.selection.fell_back { " (greedy fallback)" } else { "" },
        posts,
        pre.reduced.nodes.len()
    );
    if let Some(path) = &common.out {
        save_instance(&pre.reduced, path)?;
    }
    if let Some(path) = expanded {
        save_instance(&pre.expanded, path)?;
    }
    Ok(0)
}

fn baseline(common: &Common, access: Option<Access>) -> Result<u8> {
    let inst = common.load()?;
    let opts = common.experiment_options();
    let modes = match access {
        Some(Access::Full) => vec![AccessMode::Full],
        Some(Access::Limited) => vec![AccessMode::Limited],
        None => vec![AccessMode::Full, AccessMode::Limited],
    };
    let mut report = ExperimentReport {
        experiment: "baseline".into(),
        ..Default::default()
    };
    for mode in modes {
        let r = run_baseline(&inst, mode, &opts)?;
        report.rows.extend(r.rows);
        report.extra.extend(r.extra);
    }
    finish_report(&report, common.out.as_deref())
}

fn generate(args: &GenerateArgs) -> Result<u8> {
    let mut cfg = match args.region {
        Region::Default => GeneratorConfig {
            seed: args.seed,
            ..GeneratorConfig::default()
        },
        Region::Agadez => GeneratorConfig::agadez_like(args.seed),
        Region::Maradi => GeneratorConfig::maradi_like(args.seed),
    };
    if let Some(n) = args.regions {
        cfg.n_regions = n;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if !args.vaccines.is_empty() {
        cfg.vaccines = args.vaccines.clone();
    }
    if let Some(d) = &args.drone {
        cfg.drone_preset = d.clone();
    }
    if let Some(b) = args.budget {
        cfg.budget = b;
    }
    if let Some(r) = args.radius_km {
        cfg.access_radius_km = r;
    }
    let inst = generate_synthetic(&cfg)?;
    match &args.out {
        Some(path) => {
            save_instance(&inst, path)?;
            println!("{}: {} nodes, {} arcs", path.display(), inst.nodes.len(), inst.arcs.len());
        }
        None => print!("{}", instance_to_json(&inst)),
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::Generate(args) => generate(args),
        Command::Validate(c) => {
            c.check()?;
            validate(c)
        }
        Command::Preprocess { common, expanded } => {
            common.check()?;
            preprocess(common, expanded.as_deref())
        }
        Command::Solve(args) => {
            args.common.check()?;
            solve(args)
        }
        Command::ExportLp(args) => {
            args.common.check()?;
            export_lp(args)
        }
        Command::Baseline { common, access } => {
            common.check()?;
            baseline(common, *access)
        }
        Command::Sweep { common, tc, sc, bottleneck } => {
            common.check()?;
            let inst = common.load()?;
            let r = run_capacity_sweep(&inst, tc, sc, *bottleneck, &common.experiment_options())?;
            finish_report(&r, common.out.as_deref())
        }
        Command::Grid { common, budgets, presets: names } => {
            common.check()?;
            let drones = presets(names)?;
            let inst = common.load()?;
            let r = run_budget_range_grid(&inst, budgets, &drones, &common.experiment_options())?;
            finish_report(&r, common.out.as_deref())
        }
        Command::Doe(common) => {
            common.check()?;
            let inst = common.load()?;
            let r = run_fractional_factorial(&inst, &FactorLevels::default(), &common.experiment_options())?;
            finish_report(&r, common.out.as_deref())
        }
        Command::Expand {
            common,
            schedule,
            presets: names,
        } => {
            common.check()?;
            let drones = presets(names)?;
            let inst = common.load()?;
            let r = run_sequential_expansion(&inst, schedule, &drones, &common.experiment_options())?;
            finish_report(&r, common.out.as_deref())
        }
    }
}

fn verbose(cli: &Cli) -> bool {
    match &cli.command {
        Command::Generate(a) => a.verbose,
        Command::Validate(c) | Command::Doe(c) => c.verbose,
        Command::Solve(a) | Command::ExportLp(a) => a.common.verbose,
        Command::Preprocess { common, .. }
        | Command::Baseline { common, .. }
        | Command::Sweep { common, .. }
        | Command::Grid { common, .. }
        | Command::Expand { common, .. } => common.verbose,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = if verbose(&cli) { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
