use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use swipt_core::experiment::{self, emit_csv, emit_summary, parse_schemes, summary_path};
use swipt_core::{
    brute_force_ppa, brute_force_pub, dbm_to_watts, generate, run_experiment, solve_fps, solve_iterative,
    solve_stepwise, solve_ub, CsiMode, Error, ExperimentConfig, GeometryParams, SolverConfig, Sweep, SystemParams,
};

#[derive(Parser)]
#[command(name = "swipt", version, about = "Secure SWIPT-OFDMA harvested-power experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Csi {
    Full,
    Stat,
}

impl From<Csi> for CsiMode {
    fn from(c: Csi) -> Self {
        match c {
            Csi::Full => CsiMode::Full,
            Csi::Stat => CsiMode::Statistical,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write per-trial results as CSV.
    Run {
        /// Flat key = value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV; a `_summary` file is written next to it. Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed; trial t uses seed + t.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated: ub, iterative, stepwise, fps, fsa.
        #[arg(long)]
        schemes: Option<String>,
        /// `secrecy_target=0.5,1,1.5` or `transmit_power=20,25,30`.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum)]
        csi: Option<Csi>,
    },
    /// Compare the solvers against exhaustive search on small instances.
    OracleCheck {
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Common secrecy target, bits per OFDM symbol.
        #[arg(long, default_value_t = 1.0)]
        target: f64,
    },
    /// Write one channel realization as CSV.
    DumpChannels {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn is_validation(e: &Error) -> bool {
    matches!(
        e,
        Error::Validation(_) | Error::Dimension { .. } | Error::Domain(_) | Error::Parse { .. }
    )
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig, Error> {
    match path {
        Some(p) => ExperimentConfig::from_file(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn open_out(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| Error::Io {
            path: p.clone(),
            source,
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    trials: Option<usize>,
    schemes: Option<String>,
    sweep: Option<String>,
    k: Option<usize>,
    n: Option<usize>,
    csi: Option<Csi>,
) -> Result<(), Error> {
    let mut cfg = load_config(config.as_ref())?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(s) = schemes {
        cfg.schemes = parse_schemes(&s)?;
    }
    if let Some(s) = sweep {
        let (var, values) = s
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("--sweep expects `variable=v1,v2,...`, got `{s}`")))?;
        cfg.sweep = Sweep::parse(var, values)?;
    }
    if let Some(k) = k {
        cfg.num_users = k;
    }
    if let Some(n) = n {
        cfg.num_subcarriers = n;
    }
    if let Some(c) = csi {
        cfg.csi_mode = c.into();
    }
    if out.is_some() {
        cfg.output = out;
    }
    cfg.validate()?;

    let table = run_experiment(&cfg)?;
    match &cfg.output {
        Some(path) => {
            emit_csv(&table, path)?;
            emit_summary(&table.summarize(), &summary_path(path))?;
        }
        None => experiment::write_results(&table, io::stdout().lock())?,
    }
    Ok(())
}

/// Returns the number of failed checks.
fn cmd_oracle_check(instances: usize, seed: u64, target: f64) -> Result<usize, Error> {
    let cfg = SolverConfig::default();
    let geom = GeometryParams::default();
    let params = SystemParams::uniform(2, 4, dbm_to_watts(30.0), dbm_to_watts(-30.0), 0.4, target, CsiMode::Full)?;
    let mut failures = 0;
    let mut feasible = 0;
    for i in 0..instances {
        let s = seed + i as u64;
        let ch = generate(&params, &geom, s)?;
        let pub_opt = match brute_force_pub(&params, &ch, &cfg) {
            Ok(sol) => sol,
            Err(e) if e.is_infeasible() => continue,
            Err(e) => return Err(e),
        };
        let ppa = brute_force_ppa(&params, &ch, &cfg).ok();
        feasible += 1;
        let mut problems = Vec::new();
        let ppa_e = ppa.as_ref().map_or(0.0, |s| s.harvested_total);
        if ppa_e > pub_opt.harvested_total * (1.0 + 1e-9) {
            problems.push("practical optimum exceeds relaxation".to_string());
        }
        let runs = [
            ("iterative", solve_iterative(&params, &ch, &cfg)),
            ("stepwise", solve_stepwise(&params, &ch, &cfg)),
            ("fps", solve_fps(&params, &ch, &cfg)),
        ];
        for (name, run) in runs {
            if let Ok(sol) = run {
                if sol.feasible && sol.harvested_total > ppa_e * (1.0 + 1e-9) {
                    problems.push(format!("{name} exceeds practical optimum"));
                }
            }
        }
        if let Ok(ub) = solve_ub(&params, &ch, &cfg) {
            let bound = ub.dual_bound.unwrap_or(f64::INFINITY);
            if pub_opt.harvested_total > bound * (1.0 + 1e-6) {
                problems.push("relaxation optimum exceeds dual bound".to_string());
            }
        }
        if problems.is_empty() {
            println!("seed {s}: ok");
        } else {
            failures += 1;
            println!("seed {s}: FAIL ({})", problems.join("; "));
        }
    }
    println!("{feasible} feasible of {instances} instances, {failures} failures");
    Ok(failures)
}

fn cmd_dump(
    config: Option<PathBuf>,
    seed: u64,
    k: Option<usize>,
    n: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), Error> {
    let mut cfg = load_config(config.as_ref())?;
    if let Some(k) = k {
        cfg.num_users = k;
    }
    if let Some(n) = n {
        cfg.num_subcarriers = n;
    }
    cfg.validate()?;
    let params = cfg.params_at(cfg.sweep.values()[0])?;
    let ch = generate(&params, &cfg.geometry, seed)?;
    let w = open_out(out.as_ref())?;
    ch.write_csv(w)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            trials,
            schemes,
            sweep,
            k,
            n,
            csi,
        } => cmd_run(config, out, seed, trials, schemes, sweep, k, n, csi),
        Command::OracleCheck {
            instances,
            seed,
            target,
        } => match cmd_oracle_check(instances, seed, target) {
            Ok(0) => Ok(()),
            Ok(_) => return ExitCode::from(2),
            Err(e) => Err(e),
        },
        Command::DumpChannels { config, seed, k, n, out } => cmd_dump(config, seed, k, n, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_validation(&e) { 1 } else { 2 })
        }
    }
}
