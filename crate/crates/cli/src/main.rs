//! `lmtsim`: run, sweep and compare aggregation-tree simulations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lmt_core::experiment::{self, compare_csv, metrics_header, ExperimentPlan, Summary, DEFAULT_NODE_COUNTS};
use lmt_core::metrics::RunMetrics;
use lmt_core::sim;
use lmt_core::topology::{assign_energy, deploy};
use lmt_core::trees::oracle::{check_instance, oracle_best_tree, random_instance};
use lmt_core::{Error, Scheme, SimConfig};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_CELLS: u8 = 4;

#[derive(Parser)]
#[command(name = "lmtsim", version, about = "Lifetime-maximizing aggregation tree simulator")]
struct Cli {
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One (N, scheme, seed) run.
    Run(RunArgs),
    /// Sweep N x scheme x seeds and emit figure data.
    Sweep(SweepArgs),
    /// Compare two summary.csv files.
    Compare(CompareArgs),
    /// Check the tree builders against exhaustive search on random instances.
    OracleTest(OracleArgs),
}

#[derive(Args)]
struct Common {
    /// `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Simulated seconds.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    no_aggregation: bool,
    #[arg(long)]
    run_to_extinction: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, default_value = "dlmt")]
    algo: Scheme,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out/run")]
    out: PathBuf,
    /// Load the field and initial energies instead of deploying one.
    #[arg(long)]
    topology_in: Option<PathBuf>,
    #[arg(long)]
    topology_out: Option<PathBuf>,
    /// Write the initial tree.
    #[arg(long)]
    tree_out: Option<PathBuf>,
    /// Compare the initial tree against exhaustive search; fails on mismatch.
    #[arg(long)]
    oracle_check: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',')]
    nodes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    algo: Option<Vec<Scheme>>,
    /// First seed; cell seeds are seed, seed+1, ...
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = experiment::DEFAULT_SEEDS)]
    seeds: usize,
    #[arg(long, default_value = "out/sweep")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 500)]
    instances: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let print_config = cli.print_config;
    let result = match cli.command {
        Command::Run(a) => cmd_run(a, print_config),
        Command::Sweep(a) => cmd_sweep(a, print_config),
        Command::Compare(a) => cmd_compare(a),
        Command::OracleTest(a) => cmd_oracle(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::DeploymentInfeasible { .. } => EXIT_INFEASIBLE,
                Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::Parse { .. } | Error::OracleLimit { .. } => {
                    EXIT_USAGE
                }
                _ => EXIT_FAIL,
            })
        }
    }
}

fn base_config(c: &Common) -> lmt_core::Result<SimConfig> {
    let mut cfg = match &c.config {
        Some(p) => SimConfig::from_text(&fs::read_to_string(p)?)?,
        None => SimConfig::default(),
    };
    for kv in &c.overrides {
        cfg.apply_text(kv)?;
    }
    if let Some(d) = c.duration {
        cfg.sim_duration = d;
    }
    if c.no_aggregation {
        cfg.aggregation = false;
    }
    if c.run_to_extinction {
        cfg.run_to_extinction = true;
    }
    Ok(cfg)
}

fn cmd_run(a: RunArgs, print_config: bool) -> lmt_core::Result<u8> {
    let mut cfg = base_config(&a.common)?;
    if let Some(n) = a.nodes {
        cfg.node_count = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if print_config {
        print!("{}", cfg.to_text());
        return Ok(0);
    }
    let (topology, energies) = match &a.topology_in {
        Some(p) => {
            let (t, e) = lmt_core::Topology::from_text(&fs::read_to_string(p)?)?;
            cfg.node_count = t.len();
            (t, e)
        }
        None => {
            cfg.validate()?;
            let t = deploy(&cfg)?;
            let e = assign_energy(&t, &cfg, cfg.seed)?;
            (t, e)
        }
    };
    if a.oracle_check {
        let sources = topology.sources().clone();
        let (_, best) = oracle_best_tree(&topology, &energies, &sources, cfg.oracle_limit)?;
        let built = a.algo.build(&topology, &energies, &sources)?;
        if built.tree_energy != best {
            eprintln!("oracle mismatch: {} tree energy {} vs optimum {best}", a.algo, built.tree_energy);
            return Ok(EXIT_FAIL);
        }
        eprintln!("oracle check passed: tree energy {best}");
    }
    let trace = sim::run(&cfg, &topology, &energies, a.algo)?;
    trace.write_csvs(&a.out)?;
    let text = topology.to_text(&energies);
    write_file(&a.out.join("topology.txt"), &text)?;
    if let Some(p) = &a.topology_out {
        write_file(p, &text)?;
    }
    if let Some(tree) = &trace.initial_tree {
        write_file(&a.out.join("tree.txt"), &tree.to_text())?;
        if let Some(p) = &a.tree_out {
            write_file(p, &tree.to_text())?;
        }
    }
    let m = RunMetrics::from_trace(&trace, cfg.node_count);
    let header = metrics_header();
    let row = format!("{},{},{},{}", cfg.node_count, a.algo, cfg.seed, m.csv_fields());
    write_file(&a.out.join("metrics.csv"), &format!("{header}\n{row}\n"))?;
    println!("{header}\n{row}");
    Ok(0)
}

fn cmd_sweep(a: SweepArgs, print_config: bool) -> lmt_core::Result<u8> {
    let mut base = base_config(&a.common)?;
    if let Some(s) = a.seed {
        base.seed = s;
    }
    if print_config {
        print!("{}", base.to_text());
        return Ok(0);
    }
    let plan = ExperimentPlan {
        node_counts: a.nodes.unwrap_or_else(|| DEFAULT_NODE_COUNTS.to_vec()),
        schemes: a.algo.unwrap_or_else(|| Scheme::ALL.to_vec()),
        seeds: a.seeds,
        base,
        out: a.out,
        threads: a.threads,
    };
    let out = experiment::sweep(&plan)?;
    eprintln!(
        "{} cells ({} run, {} loaded), {} failed; results in {}",
        out.results.len() + out.failures.len(),
        out.computed,
        out.results.len() + out.failures.len() - out.computed,
        out.failures.len(),
        plan.out.display()
    );
    for (k, e) in &out.failures {
        eprintln!("  {}: {e}", k.file_stem());
    }
    Ok(if out.failures.is_empty() { 0 } else { EXIT_CELLS })
}

fn cmd_compare(a: CompareArgs) -> lmt_core::Result<u8> {
    let sa = Summary::from_csv(&fs::read_to_string(&a.a)?)?;
    let sb = Summary::from_csv(&fs::read_to_string(&a.b)?)?;
    let body = compare_csv(&experiment::compare(&sa, &sb)?);
    let out = a.out.unwrap_or_else(|| a.a.with_file_name("compare.csv"));
    write_file(&out, &body)?;
    print!("{body}");
    Ok(0)
}

fn cmd_oracle(a: OracleArgs) -> lmt_core::Result<u8> {
    let mut bad = 0;
    for i in 0..a.instances {
        let seed = a.seed.wrapping_add(i);
        let (t, e, s) = random_instance(seed, lmt_core::trees::oracle::ORACLE_LIMIT);
        let c = check_instance(&t, &e, &s, lmt_core::trees::oracle::ORACLE_LIMIT)?;
        if !c.ok() {
            bad += 1;
            eprintln!("instance {seed}: {c:?}");
        }
    }
    println!("{} instances, {bad} failed", a.instances);
    Ok(if bad == 0 { 0 } else { EXIT_FAIL })
}

fn write_file(path: &Path, body: &str) -> lmt_core::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, body)?;
    Ok(())
}
