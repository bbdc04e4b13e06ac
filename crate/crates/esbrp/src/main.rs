use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use esbrp::io::{self, FileError};
use esbrp::reports::{compare_charging, sweep_battery, sweep_mrt};
use esbrp::solve::{init_threads, run_with_mask, RunError, Solver};
use esbrp::fixtures;
use esbrp_core::eval::{check_arcs, check_solution, objective, ChargePolicy, ObjectiveForm};
use esbrp_core::generate::{gen_instance, GenSpec};
use esbrp_core::instance::{FleetMode, Instance};
use esbrp_core::lns::LnsConfig;
use esbrp_core::milp::{build_model, emit_lp, model_stats};
use esbrp_core::preprocess::{connectivity_report, eliminate_arcs};

/// Electric school bus routing with partial en-route charging.
///
/// INSTANCE is a TOML file, or `fixture:NAME` for a bundled instance
/// (fourteen-node, one-stop, full-infeasible, salt-lake-city).
///
/// Exit status: 0 success, 1 infeasible or violated, 2 bad input.
#[derive(Parser)]
#[command(name = "esbrp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an instance and, optionally, a solution against it.
    Check {
        instance: String,
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Run arc elimination and report removals per rule.
    Preprocess {
        instance: String,
        /// CSV of removed arcs per bus type and rule.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance.
    Solve {
        instance: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum)]
        fleet: Option<Fleet>,
        #[arg(long, value_enum, default_value = "partial")]
        charge: Charge,
        /// Solution file (TOML).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-visit trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Objective component CSV.
        #[arg(long)]
        costs: Option<PathBuf>,
        /// Search log CSV (incumbents and bound).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Write the linearized model in LP format.
    EmitLp {
        instance: String,
        #[arg(long, value_enum)]
        fleet: Option<Fleet>,
        #[arg(long, value_enum, default_value = "partial")]
        charge: Charge,
        #[arg(long)]
        out: PathBuf,
        /// Model statistics CSV.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Total cost against battery size, homogeneous fleet.
    SweepBattery {
        instance: String,
        #[arg(long, value_delimiter = ',', default_value = "60,75,90,100,110")]
        sizes: Vec<f64>,
        #[arg(long, value_enum, default_value = "partial")]
        charge: Charge,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fleet size and cost against the maximum ride time.
    SweepMrt {
        instance: String,
        /// Seconds; `inf` removes the limit.
        #[arg(long, value_delimiter = ',', default_value = "150,200,300,400,500,1000")]
        mrts: Vec<f64>,
        #[arg(long, value_enum, default_value = "partial")]
        charge: Charge,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Partial against full charging, per battery size.
    CompareCharging {
        instance: String,
        /// Battery sizes; the instance's first bus type when omitted.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a random instance.
    Gen {
        #[arg(long, default_value_t = 10)]
        stops: usize,
        #[arg(long, default_value_t = 1)]
        stations: usize,
        /// Copies per station.
        #[arg(long, default_value_t = 2)]
        copies: usize,
        #[arg(long, default_value_t = 40.0)]
        side: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Catalog rows (0 = type I ... 4 = type V); several make a mixed fleet.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        types: Vec<usize>,
        /// Buses per type; one per stop when omitted.
        #[arg(long)]
        buses: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Exact search (default).
    #[arg(long, conflicts_with = "lns")]
    exact: bool,
    /// Large neighborhood search.
    #[arg(long)]
    lns: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// LNS iterations per start.
    #[arg(long, default_value_t = 10_000)]
    iters: u64,
    /// Independent LNS starts, run in parallel.
    #[arg(long, default_value_t = 1)]
    starts: usize,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl SolverArgs {
    fn solver(&self) -> Solver {
        if self.lns {
            Solver::Lns {
                cfg: LnsConfig {
                    seed: self.seed,
                    iterations: self.iters,
                    ..LnsConfig::default()
                },
                starts: self.starts,
                time_limit: self.time_limit,
            }
        } else {
            Solver::Exact {
                time_limit: self.time_limit,
            }
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Fleet {
    Ho,
    He,
}

#[derive(Clone, Copy, ValueEnum)]
enum Charge {
    Partial,
    Full,
}

impl From<Charge> for ChargePolicy {
    fn from(c: Charge) -> Self {
        match c {
            Charge::Partial => ChargePolicy::Partial,
            Charge::Full => ChargePolicy::Full,
        }
    }
}

/// Failures that map to exit status 1.
#[derive(Debug)]
struct Infeasible(String);

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Infeasible {}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<Infeasible>().is_some() => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(arg: &str, fleet: Option<Fleet>) -> Result<Instance> {
    let mut inst = match arg.strip_prefix("fixture:") {
        Some(name) => fixtures::load(name).with_context(|| format!("no bundled instance named {name}"))?,
        None => io::read_instance(Path::new(arg))?,
    };
    match fleet {
        Some(Fleet::Ho) => inst.fleet_mode = FleetMode::Homogeneous,
        Some(Fleet::He) => inst.fleet_mode = FleetMode::Heterogeneous,
        None => {}
    }
    Ok(inst)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(BufWriter::new(f))
}

fn solve_failure(e: RunError) -> anyhow::Error {
    if e.is_infeasible() {
        Infeasible(e.to_string()).into()
    } else {
        e.into()
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Check { instance, solution } => {
            let inst = load(&instance, None)?;
            println!(
                "instance ok: {} nodes, {} stops, {} chargers, {} bus types",
                inst.len(),
                inst.stops().len(),
                inst.chargers().len(),
                inst.bus_types.len()
            );
            let Some(path) = solution else { return Ok(()) };
            let file = io::read_solution(&inst, &path)?;
            let mut violations = check_solution(&inst, &file.solution, file.policy);
            violations.extend(check_arcs(&inst, &file.solution, &eliminate_arcs(&inst)));
            if !violations.is_empty() {
                let lines: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
                bail!(Infeasible(format!("{} violation(s):\n{}", violations.len(), lines.join("\n"))));
            }
            let cost = objective(&inst, &file.solution, ObjectiveForm::Linearized, file.policy)
                .map_err(|v| Infeasible(v.to_string()))?;
            println!("solution ok: {} routes, objective {:.4}", file.solution.routes.len(), cost.total);
        }
        Command::Preprocess { instance, out } => {
            let inst = load(&instance, None)?;
            let mask = eliminate_arcs(&inst);
            for k in inst.active_types() {
                let removed: usize = mask.removed_by_rule(k).iter().sum();
                println!(
                    "type {}: {} arcs kept, {} removed",
                    inst.bus_types[k].name,
                    mask.allowed_count(k),
                    removed
                );
            }
            if let Some(path) = out {
                io::write_preprocess_csv(&inst, &mask, create(&path)?)?;
            }
            let stranded = connectivity_report(&inst, &mask).stranded_for_all(inst.active_types());
            if !stranded.is_empty() {
                let ids: Vec<String> = stranded.iter().map(|&s| inst.node(s).id.to_string()).collect();
                bail!(Infeasible(format!("no bus type can serve stop(s) {}", ids.join(", "))));
            }
        }
        Command::Solve {
            instance,
            solver,
            fleet,
            charge,
            out,
            trace,
            costs,
            log,
        } => {
            let inst = load(&instance, fleet)?;
            let policy = charge.into();
            let res = run_with_mask(&inst, &eliminate_arcs(&inst), policy, &solver.solver()).map_err(solve_failure)?;
            println!(
                "objective {:.4} (fleet {:.4}, travel {:.4}, charging {:.4}); {} routes; {}; {:.2} s",
                res.objective.total,
                res.objective.fleet_cost,
                res.objective.travel_time_cost,
                res.objective.charging_cost,
                res.solution.routes.len(),
                if res.proven_optimal { "optimal" } else { "not proven optimal" },
                res.wall_time
            );
            for r in &res.solution.routes {
                let ids: Vec<String> = r.visits.iter().map(|&i| inst.node(i).id.to_string()).collect();
                println!("  {}: {}", inst.bus_types[r.bus_type].name, ids.join(" -> "));
            }
            if let Some(path) = out {
                let text = io::solution_to_toml(&inst, &res.solution, policy, Some(res.objective.total));
                io::write_file(&path, &text)?;
            }
            if let Some(path) = trace {
                io::write_trace_csv(&inst, &res.solution, policy, create(&path)?)?;
            }
            if let Some(path) = costs {
                io::write_costs_csv(&res.objective, create(&path)?)?;
            }
            if let Some(path) = log {
                io::write_search_log(&res, create(&path)?)?;
            }
        }
        Command::EmitLp {
            instance,
            fleet,
            charge,
            out,
            stats,
        } => {
            let inst = load(&instance, fleet)?;
            let model = build_model(&inst, &eliminate_arcs(&inst), inst.fleet_mode, charge.into())
                .map_err(|e| Infeasible(e.to_string()))?;
            io::write_file(&out, &emit_lp(&model))?;
            let s = model_stats(&model);
            println!("{} variables ({} binary), {} constraints", s.variables, s.binaries, s.constraints);
            if let Some(path) = stats {
                io::write_stats_csv(&s, create(&path)?)?;
            }
        }
        Command::SweepBattery {
            instance,
            sizes,
            charge,
            solver,
            out,
        } => {
            let inst = load(&instance, None)?;
            let report = sweep_battery(&inst, &sizes, charge.into(), &solver.solver())?;
            report.write_csv(create(&out)?)?;
            match report.argmin() {
                Some(row) => println!("lowest total at {} kWh: {:.2}", row.value, row.outcome.cost.total),
                None => bail!(Infeasible("every battery size is infeasible".into())),
            }
        }
        Command::SweepMrt {
            instance,
            mrts,
            charge,
            solver,
            out,
        } => {
            let inst = load(&instance, None)?;
            let report = sweep_mrt(&inst, &mrts, charge.into(), &solver.solver())?;
            report.write_csv(create(&out)?)?;
            for row in &report.rows {
                if row.outcome.is_feasible() {
                    println!("h = {}: {} buses, {:.2}", row.value, row.outcome.fleet, row.outcome.cost.total);
                } else {
                    println!("h = {}: infeasible", row.value);
                }
            }
        }
        Command::CompareCharging {
            instance,
            sizes,
            solver,
            out,
        } => {
            let inst = load(&instance, None)?;
            let report = compare_charging(&inst, &sizes, &solver.solver())?;
            report.write_csv(create(&out)?)?;
            for row in &report.rows {
                match row.savings() {
                    Some(s) => println!("{} kWh: partial saves {:.2}", row.battery, s),
                    None => println!("{} kWh: {}", row.battery, row.remark()),
                }
            }
        }
        Command::Gen {
            stops,
            stations,
            copies,
            side,
            seed,
            types,
            buses,
            out,
        } => {
            if stops == 0 {
                bail!("--stops must be at least 1");
            }
            if let Some(&bad) = types.iter().find(|&&t| t > 4) {
                bail!("catalog row {bad} does not exist (0-4)");
            }
            let spec = GenSpec {
                stops,
                stations,
                copies,
                side,
                bus_types: types,
                buses_per_type: buses,
                ..GenSpec::default()
            };
            let inst = gen_instance(&spec, seed);
            io::write_file(&out, &io::instance_to_toml(&inst, Some(&format!("generated-{stops}-{seed}"))))?;
        }
    }
    Ok(())
}
