//! `topoctl` — generate, solve, compare and sweep topology-control scenarios for
//! hybrid RF/optical mesh networks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use topoctl::experiment::{self, BlockingConfig, DeskConfig, ReductionConfig};
use topoctl::ilp::build::BuildOptions;
use topoctl::ilp::lp_export::export_lp;
use topoctl::report::{build_report, compare, SolveReport};
use topoctl::scenario::{generate, GenConfig, Scenario};
use topoctl::solve::routes::build_route_table;
use topoctl::solve::{exact, first_fit, lr, pso, Budget, SolveResult, SolveStatus};

#[derive(Parser)]
#[command(
    name = "topoctl",
    version,
    about = "Topology control for hybrid RF/optical mesh networks",
    long_about = "Generates deployment scenarios, builds the power-minimization \
                  program with hop and throughput guarantees, and solves it with an \
                  exact branch-and-bound engine or one of the heuristic engines."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random scenario file
    Gen(GenArgs),
    /// Solve one scenario with one engine and emit a report
    Solve(SolveArgs),
    /// Run several engines on one scenario and tabulate them
    Compare(CompareArgs),
    /// Run a batch experiment and emit CSV
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of nodes
    #[arg(long, default_value_t = 10)]
    nodes: usize,
    /// Area as WIDTHxHEIGHT in meters, e.g. 150x100
    #[arg(long, value_parser = parse_area, conflicts_with_all = ["width", "height"])]
    area: Option<(f64, f64)>,
    /// Area width in meters
    #[arg(long, default_value_t = 150.0)]
    width: f64,
    /// Area height in meters
    #[arg(long, default_value_t = 150.0)]
    height: f64,
    /// RF transceivers per node
    #[arg(long, default_value_t = 1)]
    rf: usize,
    /// Optical transceivers per node
    #[arg(long, default_value_t = 2)]
    fso: usize,
    /// Transmit power menu in mW, ascending
    #[arg(long, value_delimiter = ',', default_values_t = vec![5.0, 10.0])]
    powers: Vec<f64>,
    /// Beam opening menu in mrad, ascending
    #[arg(long, value_delimiter = ',', default_values_t = vec![80.0])]
    beams: Vec<f64>,
    /// Number of traffic requests
    #[arg(long, default_value_t = 4)]
    requests: usize,
    /// Hop budget for every request
    #[arg(long, default_value_t = 3)]
    max_hops: u32,
    /// Throughput floor for every request, Mbps
    #[arg(long, default_value_t = 5.0)]
    throughput: f64,
    /// Fraction of node pairs without optical line of sight
    #[arg(long, default_value_t = 0.0)]
    blocked_fraction: f64,
    /// RNG seed (falls back to $FSO_TOPOCTL_SEED, then 7)
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    /// Exact branch and bound over the full program
    Ilp,
    /// Lagrangian relaxation with iterative repair
    Lr,
    /// Particle swarm over routes and link settings
    Pso,
    /// Greedy first-fit assignment
    Firstfit,
}

impl EngineArg {
    fn name(self) -> &'static str {
        match self {
            EngineArg::Ilp => "ilp",
            EngineArg::Lr => "lr",
            EngineArg::Pso => "pso",
            EngineArg::Firstfit => "firstfit",
        }
    }
}

#[derive(Args, Clone, serde::Serialize)]
struct EngineOpts {
    /// Search-node budget for the exact engine and the overall relaxation run
    #[arg(long, default_value_t = 5_000_000)]
    budget_nodes: u64,
    /// Search-node budget for each relaxation subproblem
    #[arg(long, default_value_t = 200_000)]
    lr_subproblem_nodes: u64,
    /// Wall-clock budget in seconds (ignored with --deterministic)
    #[arg(long, default_value_t = 30.0)]
    budget_secs: f64,
    /// Node-budget-only mode: no wall-clock cutoffs, zeroed timing in reports,
    /// so identical runs produce byte-identical output
    #[arg(long)]
    deterministic: bool,
    /// Swarm RNG seed (falls back to $FSO_TOPOCTL_SEED, then the engine default)
    #[arg(long)]
    seed: Option<u64>,
    /// Swarm size
    #[arg(long, default_value_t = 30)]
    swarm: usize,
    /// Swarm iteration count
    #[arg(long, default_value_t = 150)]
    iterations: usize,
    /// Relaxation iteration cap
    #[arg(long, default_value_t = 50)]
    lr_iterations: usize,
    /// Route options per request fed to the swarm and greedy engines
    #[arg(long, default_value_t = 4)]
    k_routes: usize,
    /// Tighten the big-M in the power-linking rows to the per-slot tuple count
    #[arg(long)]
    tighten_big_m: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario JSON file
    scenario: PathBuf,
    /// Engine to run
    #[arg(long, value_enum, default_value_t = EngineArg::Ilp)]
    engine: EngineArg,
    #[command(flatten)]
    opts: EngineOpts,
    /// Write the JSON report here (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the solved topology as Graphviz DOT
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write the full program in LP format
    #[arg(long)]
    lp: Option<PathBuf>,
    /// Write relaxation iteration rows as JSON lines
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Scenario JSON file
    scenario: PathBuf,
    /// Engines to run, in order
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = vec![EngineArg::Ilp, EngineArg::Lr, EngineArg::Pso, EngineArg::Firstfit])]
    engines: Vec<EngineArg>,
    #[command(flatten)]
    opts: EngineOpts,
    /// Write the comparison as JSON here (text table always goes to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for one full JSON report per engine (<engine>.json)
    #[arg(long)]
    report_dir: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    /// Blocking probability versus offered load (greedy vs swarm admission)
    BlockingOffered,
    /// Blocking probability versus transceivers per node
    BlockingSlots,
    /// Rows deactivated by the relaxation's first repair, per transceiver count
    Reduction,
    /// Engine objectives on small instances the exact solver closes
    Desk,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum VaryArg {
    /// Offered request count (blocking versus load)
    Sd,
    /// Transceivers per node (blocking versus slot count)
    T,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("experiment").required(true).args(["kind", "vary"]))]
struct SweepArgs {
    /// Which experiment to run
    #[arg(long, value_enum)]
    kind: Option<SweepKind>,
    /// Sweep one parameter over --from..=--to by --step instead of a named kind
    #[arg(long, value_enum)]
    vary: Option<VaryArg>,
    /// First swept value
    #[arg(long, default_value_t = 5)]
    from: usize,
    /// Last swept value, inclusive
    #[arg(long, default_value_t = 20)]
    to: usize,
    /// Sweep stride
    #[arg(long, default_value_t = 5)]
    step: usize,
    /// Deployment seeds per swept point
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Offered request count held fixed while varying transceivers
    #[arg(long, default_value_t = 15)]
    offered: usize,
    /// Shrink the experiment for a fast smoke run
    #[arg(long)]
    quick: bool,
    /// Write CSV here (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn env_seed() -> Option<u64> {
    std::env::var("FSO_TOPOCTL_SEED").ok()?.parse().ok()
}

fn parse_area(s: &str) -> Result<(f64, f64), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let parse = |v: &str, name: &str| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|m| m.is_finite() && *m > 0.0)
            .ok_or_else(|| format!("{name} must be a positive number, got {v:?}"))
    };
    Ok((parse(w, "width")?, parse(h, "height")?))
}

/// The engine knobs as they were actually applied: the seed field folds in the
/// environment fallback so the echoed report reproduces the run by itself.
fn effective_opts(opts: &EngineOpts) -> serde_json::Value {
    let mut echo = opts.clone();
    echo.seed = opts.seed.or_else(env_seed);
    serde_json::to_value(&echo).expect("engine options serialize")
}

fn write_out(path: &Option<PathBuf>, content: &str) -> topoctl::Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, content)?;
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn budget(opts: &EngineOpts) -> Budget {
    Budget {
        max_nodes: opts.budget_nodes,
        max_wall_s: if opts.deterministic { f64::INFINITY } else { opts.budget_secs },
    }
}

fn pso_options(opts: &EngineOpts) -> pso::PsoOptions {
    let mut p = pso::PsoOptions {
        swarm_size: opts.swarm,
        max_iterations: opts.iterations,
        ..pso::PsoOptions::default()
    };
    if let Some(seed) = opts.seed.or_else(env_seed) {
        p.seed = seed;
    }
    p
}

fn lr_options(opts: &EngineOpts) -> lr::LrOptions {
    let defaults = lr::LrOptions::default();
    let sub = Budget {
        max_nodes: opts.lr_subproblem_nodes,
        max_wall_s: if opts.deterministic {
            f64::INFINITY
        } else {
            defaults.subproblem_budget.max_wall_s
        },
    };
    lr::LrOptions { max_iterations: opts.lr_iterations, subproblem_budget: sub, repair_budget: sub, ..defaults }
}

struct Solved {
    result: SolveResult,
    trace: Option<Vec<lr::LrTraceRow>>,
}

fn run_engine(engine: EngineArg, sc: &Scenario, opts: &EngineOpts) -> topoctl::Result<(Solved, SolveReport)> {
    let cands = sc.candidates()?;
    let inst = sc.instance(&cands, &BuildOptions { tighten_big_m: opts.tighten_big_m })?;
    let solved = match engine {
        EngineArg::Ilp => Solved {
            result: exact::solve(&inst, &budget(opts)),
            trace: None,
        },
        EngineArg::Lr => {
            let out = lr::solve(&inst, &lr_options(opts), &budget(opts));
            Solved { result: out.result, trace: Some(out.trace) }
        }
        EngineArg::Pso => {
            let table = build_route_table(sc.nodes.len(), &cands, &inst.requests, opts.k_routes);
            Solved {
                result: pso::solve(&inst, &cands, &table, &pso_options(opts)),
                trace: None,
            }
        }
        EngineArg::Firstfit => {
            let table = build_route_table(sc.nodes.len(), &cands, &inst.requests, opts.k_routes);
            Solved { result: first_fit::solve(&inst, &cands, &table), trace: None }
        }
    };
    let mut report = build_report(sc, &inst, &cands, engine.name(), &solved.result, opts.deterministic);
    report.options = Some(effective_opts(opts));
    Ok((solved, report))
}

fn cmd_gen(args: &GenArgs) -> topoctl::Result<()> {
    let file = generate(&GenConfig {
        n_nodes: args.nodes,
        area_m: args.area.unwrap_or((args.width, args.height)),
        rf_per_node: args.rf,
        fso_per_node: args.fso,
        powers_mw: args.powers.clone(),
        beams_mrad: args.beams.clone(),
        n_requests: args.requests,
        max_hops: args.max_hops,
        min_throughput_mbps: args.throughput,
        blocked_fraction: args.blocked_fraction,
        seed: args.seed.or_else(env_seed).unwrap_or(7),
    });
    // Surface validation problems at generation time, not first use.
    file.resolve()?;
    write_out(&args.out, &file.to_json())
}

fn cmd_solve(args: &SolveArgs) -> topoctl::Result<SolveStatus> {
    let sc = Scenario::load(&args.scenario)?;
    if let Some(lp_path) = &args.lp {
        let cands = sc.candidates()?;
        let inst = sc.instance(&cands, &BuildOptions { tighten_big_m: args.opts.tighten_big_m })?;
        std::fs::write(lp_path, export_lp(&inst, "topoctl")?)?;
    }
    let (solved, report) = run_engine(args.engine, &sc, &args.opts)?;
    if let Some(dot_path) = &args.dot {
        if let Some(a) = &solved.result.assignment {
            let cands = sc.candidates()?;
            let inst = sc.instance(&cands, &BuildOptions { tighten_big_m: args.opts.tighten_big_m })?;
            std::fs::write(dot_path, topoctl::dot::assignment_dot(&sc, &inst, &cands, a))?;
        }
    }
    if let Some(trace_path) = &args.trace {
        let mut lines = String::new();
        for row in solved.trace.as_deref().unwrap_or(&[]) {
            lines.push_str(&serde_json::to_string(row).expect("trace row serializes"));
            lines.push('\n');
        }
        std::fs::write(trace_path, lines)?;
    }
    write_out(&args.out, &report.to_json())?;
    Ok(report.status)
}

fn cmd_compare(args: &CompareArgs) -> topoctl::Result<()> {
    let sc = Scenario::load(&args.scenario)?;
    let mut reports = Vec::new();
    for &engine in &args.engines {
        let (_, report) = run_engine(engine, &sc, &args.opts)?;
        reports.push(report);
    }
    if let Some(dir) = &args.report_dir {
        std::fs::create_dir_all(dir)?;
        for report in &reports {
            std::fs::write(dir.join(format!("{}.json", report.engine)), report.to_json())?;
        }
    }
    let mut cmp = compare(&reports);
    cmp.options = Some(effective_opts(&args.opts));
    print!("{}", cmp.render_text());
    if let Some(out) = &args.out {
        std::fs::write(out, cmp.to_json())?;
    }
    Ok(())
}

/// `--from/--to/--step` expanded to the swept points, smallest first.
fn sweep_points(args: &SweepArgs) -> topoctl::Result<Vec<usize>> {
    if args.step == 0 || args.to < args.from {
        return Err(topoctl::Error::Refused(format!(
            "empty sweep: from {} to {} step {}",
            args.from, args.to, args.step
        )));
    }
    Ok((args.from..=args.to).step_by(args.step).collect())
}

fn cmd_sweep(args: &SweepArgs) -> topoctl::Result<()> {
    if let Some(vary) = args.vary {
        let points = sweep_points(args)?;
        let cfg = BlockingConfig {
            seeds: (1..=args.seeds).collect(),
            ..BlockingConfig::default()
        };
        let rows = match vary {
            VaryArg::Sd => {
                let cfg = BlockingConfig { offered_counts: points, ..cfg };
                experiment::blocking_by_offered(&cfg)?
            }
            VaryArg::T => experiment::blocking_by_slots(&cfg, &points, args.offered)?,
        };
        return write_out(&args.out, &experiment::blocking_csv(&rows));
    }
    let csv = match args.kind.expect("clap requires --kind or --vary") {
        SweepKind::BlockingOffered => {
            let cfg = if args.quick {
                BlockingConfig {
                    n_nodes: 8,
                    offered_counts: vec![3, 6],
                    seeds: vec![1, 2],
                    ..BlockingConfig::default()
                }
            } else {
                BlockingConfig::default()
            };
            experiment::blocking_csv(&experiment::blocking_by_offered(&cfg)?)
        }
        SweepKind::BlockingSlots => {
            let (cfg, slots, offered) = if args.quick {
                (
                    BlockingConfig {
                        n_nodes: 8,
                        seeds: vec![1, 2],
                        ..BlockingConfig::default()
                    },
                    vec![2, 3],
                    5,
                )
            } else {
                (BlockingConfig::default(), vec![2, 3, 4, 5], 15)
            };
            experiment::blocking_csv(&experiment::blocking_by_slots(&cfg, &slots, offered)?)
        }
        SweepKind::Reduction => {
            let cfg = if args.quick {
                ReductionConfig {
                    slot_counts: vec![2],
                    seeds: vec![1],
                    n_requests: 2,
                    powers_mw: vec![5.0, 10.0],
                    beams_mrad: vec![80.0, 120.0],
                    area_m: (80.0, 80.0),
                    ..ReductionConfig::default()
                }
            } else {
                ReductionConfig::default()
            };
            experiment::reduction_csv(&experiment::reduction_sweep(&cfg)?)
        }
        SweepKind::Desk => {
            let cfg = if args.quick {
                DeskConfig {
                    target: 3,
                    max_attempts: 10,
                    node_counts: vec![5],
                    request_counts: vec![2],
                    ..DeskConfig::default()
                }
            } else {
                DeskConfig::default()
            };
            experiment::desk_csv(&experiment::desk_suite(&cfg)?)
        }
    };
    write_out(&args.out, &csv)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> topoctl::Result<ExitCode> {
        match &cli.cmd {
            Cmd::Gen(a) => {
                cmd_gen(a)?;
                Ok(ExitCode::SUCCESS)
            }
            Cmd::Solve(a) => {
                let status = cmd_solve(a)?;
                Ok(match status {
                    SolveStatus::Optimal | SolveStatus::Feasible => ExitCode::SUCCESS,
                    SolveStatus::Infeasible | SolveStatus::NoFeasibleFound => ExitCode::from(2),
                    SolveStatus::Timeout => ExitCode::from(3),
                })
            }
            Cmd::Compare(a) => {
                cmd_compare(a)?;
                Ok(ExitCode::SUCCESS)
            }
            Cmd::Sweep(a) => {
                cmd_sweep(a)?;
                Ok(ExitCode::SUCCESS)
            }
        }
    };
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
