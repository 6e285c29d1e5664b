//! Monte-Carlo sweeps comparing the schemes, with CSV output.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::baselines::{solve_fps, solve_fsa};
use crate::channel::{generate, GeometryParams, Placement};
use crate::error::{Error, Result};
use crate::iterative::solve_iterative;
use crate::params::{dbm_to_watts, CsiMode, SolverConfig, SystemParams};
use crate::problem::Solution;
use crate::stepwise::{solve_stepwise, solve_stepwise_from};
use crate::upper_bound::solve_ub;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    UpperBound,
    Iterative,
    Stepwise,
    Fps,
    Fsa,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::UpperBound,
        Scheme::Iterative,
        Scheme::Stepwise,
        Scheme::Fps,
        Scheme::Fsa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::UpperBound => "UpperBound",
            Scheme::Iterative => "Iterative",
            Scheme::Stepwise => "Stepwise",
            Scheme::Fps => "FPS",
            Scheme::Fsa => "FSA",
        }
    }

    /// Case-insensitive; also accepts `ub`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        Some(match s.as_str() {
            "upperbound" | "ub" => Scheme::UpperBound,
            "iterative" => Scheme::Iterative,
            "stepwise" => Scheme::Stepwise,
            "fps" => Scheme::Fps,
            "fsa" => Scheme::Fsa,
            _ => return None,
        })
    }

    pub fn solve(self, params: &SystemParams, channels: &crate::ChannelRealization, seed: u64, config: &SolverConfig) -> Result<Solution> {
        match self {
            Scheme::UpperBound => solve_ub(params, channels, config),
            Scheme::Iterative => solve_iterative(params, channels, config),
            Scheme::Stepwise => solve_stepwise(params, channels, config),
            Scheme::Fps => solve_fps(params, channels, config),
            Scheme::Fsa => solve_fsa(params, channels, seed, config),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parses a comma-separated scheme list.
pub fn parse_schemes(s: &str) -> Result<Vec<Scheme>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let scheme = Scheme::parse(part).ok_or_else(|| Error::validation(format!("unknown scheme `{part}`")))?;
        if !out.contains(&scheme) {
            out.push(scheme);
        }
    }
    if out.is_empty() {
        return Err(Error::validation("scheme list is empty"));
    }
    Ok(out)
}

/// Quantity varied across sweep points.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Common secrecy target per user, bits per OFDM symbol.
    SecrecyTarget(Vec<f64>),
    /// Total transmit power, dBm.
    TransmitPower(Vec<f64>),
}

impl Sweep {
    pub fn var_name(&self) -> &'static str {
        match self {
            Sweep::SecrecyTarget(_) => "secrecy_target",
            Sweep::TransmitPower(_) => "transmit_power_dbm",
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Sweep::SecrecyTarget(v) | Sweep::TransmitPower(v) => v,
        }
    }

    /// Builds a sweep from its variable name and a comma-separated list.
    pub fn parse(var: &str, values: &str) -> Result<Self> {
        let vals = parse_list(values)?;
        match var.trim() {
            "secrecy_target" => Ok(Sweep::SecrecyTarget(vals)),
            "transmit_power" | "transmit_power_dbm" => Ok(Sweep::TransmitPower(vals)),
            other => Err(Error::validation(format!("unknown sweep variable `{other}`"))),
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::validation(format!("bad number `{p}`")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sweep: Sweep,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub base_seed: u64,
    pub num_users: usize,
    pub num_subcarriers: usize,
    pub noise_dbm: f64,
    pub zeta: f64,
    /// Used when the sweep is over the secrecy target.
    pub transmit_power_dbm: f64,
    /// Used when the sweep is over transmit power.
    pub secrecy_target: f64,
    pub csi_mode: CsiMode,
    pub geometry: GeometryParams,
    pub solver: SolverConfig,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sweep: Sweep::SecrecyTarget(vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0]),
            schemes: Scheme::ALL.to_vec(),
            trials: 10,
            base_seed: 1,
            num_users: 8,
            num_subcarriers: 128,
            noise_dbm: -30.0,
            zeta: 0.4,
            transmit_power_dbm: 30.0,
            secrecy_target: 1.0,
            csi_mode: CsiMode::Full,
            geometry: GeometryParams::default(),
            solver: SolverConfig::default(),
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweep.values().is_empty() {
            return Err(Error::validation("sweep list is empty"));
        }
        if self.trials == 0 {
            return Err(Error::validation("trials must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::validation("scheme list is empty"));
        }
        self.geometry.validate()?;
        self.solver.validate()?;
        for v in self.sweep.values() {
            self.params_at(*v)?;
        }
        Ok(())
    }

    /// System parameters at one sweep point.
    pub fn params_at(&self, sweep_value: f64) -> Result<SystemParams> {
        let (p_dbm, c) = match self.sweep {
            Sweep::SecrecyTarget(_) => (self.transmit_power_dbm, sweep_value),
            Sweep::TransmitPower(_) => (sweep_value, self.secrecy_target),
        };
        SystemParams::uniform(
            self.num_users,
            self.num_subcarriers,
            dbm_to_watts(p_dbm),
            dbm_to_watts(self.noise_dbm),
            self.zeta,
            c,
            self.csi_mode,
        )
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    /// Flat `key = value` lines; `#` starts a comment. Unset keys keep
    /// their defaults. `sweep` names the variable and `sweep_values` lists
    /// the points.
    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = HashSet::new();
        let mut sweep_var: Option<(usize, String)> = None;
        let mut sweep_values: Option<(usize, String)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::parse(line_no, format!("duplicate key `{key}`")));
            }
            let at = |e: Error| match e {
                Error::Validation(msg) => Error::parse(line_no, msg),
                other => other,
            };
            match key {
                "sweep" => sweep_var = Some((line_no, value.to_string())),
                "sweep_values" => sweep_values = Some((line_no, value.to_string())),
                "schemes" => cfg.schemes = parse_schemes(value).map_err(at)?,
                "trials" => cfg.trials = num(line_no, key, value)?,
                "base_seed" => cfg.base_seed = num(line_no, key, value)?,
                "num_users" => cfg.num_users = num(line_no, key, value)?,
                "num_subcarriers" => cfg.num_subcarriers = num(line_no, key, value)?,
                "noise_dbm" => cfg.noise_dbm = real(line_no, key, value)?,
                "zeta" => cfg.zeta = real(line_no, key, value)?,
                "transmit_power_dbm" => cfg.transmit_power_dbm = real(line_no, key, value)?,
                "secrecy_target" => cfg.secrecy_target = real(line_no, key, value)?,
                "csi" => {
                    cfg.csi_mode = CsiMode::parse(value)
                        .ok_or_else(|| Error::parse(line_no, format!("csi must be `full` or `stat`, got `{value}`")))?
                }
                "cell_radius" => cfg.geometry.cell_radius = real(line_no, key, value)?,
                "eve_distance" => cfg.geometry.eve_distance = real(line_no, key, value)?,
                "pathloss_exponent" => cfg.geometry.pathloss_exponent = real(line_no, key, value)?,
                "reference_loss_db" => cfg.geometry.reference_loss_db = real(line_no, key, value)?,
                "min_user_distance" => cfg.geometry.min_user_distance = real(line_no, key, value)?,
                "placement" => {
                    cfg.geometry.placement = Placement::parse(value)
                        .ok_or_else(|| Error::parse(line_no, format!("unknown placement `{value}`")))?
                }
                "bisect_tol" => cfg.solver.bisect_tol = real(line_no, key, value)?,
                "max_bisect_iters" => cfg.solver.max_bisect_iters = num(line_no, key, value)?,
                "dual_step" => cfg.solver.dual_step = real(line_no, key, value)?,
                "max_dual_iters" => cfg.solver.max_dual_iters = num(line_no, key, value)?,
                "dual_tol" => cfg.solver.dual_tol = real(line_no, key, value)?,
                "bcd_tol" => cfg.solver.bcd_tol = real(line_no, key, value)?,
                "max_bcd_iters" => cfg.solver.max_bcd_iters = num(line_no, key, value)?,
                "tol_feas" => cfg.solver.tol_feas = real(line_no, key, value)?,
                "output" => cfg.output = Some(PathBuf::from(value)),
                _ => return Err(Error::parse(line_no, format!("unknown key `{key}`"))),
            }
        }
        match (sweep_var, sweep_values) {
            (Some((line, var)), Some((_, values))) => {
                cfg.sweep = Sweep::parse(&var, &values).map_err(|e| Error::parse(line, e.to_string()))?
            }
            (None, Some((line, values))) => {
                cfg.sweep = Sweep::parse("secrecy_target", &values).map_err(|e| Error::parse(line, e.to_string()))?
            }
            (Some((line, var)), None) => {
                let defaults = match var.as_str() {
                    "secrecy_target" => ExperimentConfig::default().sweep,
                    "transmit_power" | "transmit_power_dbm" => {
                        Sweep::TransmitPower(vec![20.0, 22.5, 25.0, 27.5, 30.0, 32.5, 35.0, 37.5])
                    }
                    other => return Err(Error::parse(line, format!("unknown sweep variable `{other}`"))),
                };
                cfg.sweep = defaults;
            }
            (None, None) => {}
        }
        Ok(cfg)
    }
}

fn num<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(line, format!("`{key}` expects a non-negative integer, got `{value}`")))
}

fn real(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(line, format!("`{key}` expects a finite number, got `{value}`")))
}

/// One scheme on one realization at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub sweep_var: String,
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub trial: usize,
    pub seed: u64,
    pub feasible: bool,
    /// Total harvested power, watts.
    pub e_sum: f64,
    pub info_power: f64,
    /// `e_sum` relative to the upper bound on the same realization.
    pub delta: Option<f64>,
    /// `min_k (r_k - C_k)`; absent when the scheme returned no solution.
    pub min_slack: Option<f64>,
}

impl TrialRow {
    /// Harvested power counted towards averages: zero when infeasible.
    pub fn effective_e_sum(&self) -> f64 {
        if self.feasible {
            self.e_sum
        } else {
            0.0
        }
    }
}

/// Per-trial results sorted by sweep value, scheme, trial.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<TrialRow>,
}

impl ResultTable {
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.sweep_value
                .total_cmp(&b.sweep_value)
                .then(a.scheme.cmp(&b.scheme))
                .then(a.trial.cmp(&b.trial))
        });
    }

    pub fn summarize(&self) -> Vec<SummaryRow> {
        let mut groups: BTreeMap<(u64, Scheme), Vec<&TrialRow>> = BTreeMap::new();
        for r in &self.rows {
            groups.entry((ordered_key(r.sweep_value), r.scheme)).or_default().push(r);
        }
        groups
            .into_values()
            .map(|rows| {
                let n = rows.len() as f64;
                let feasible: Vec<&&TrialRow> = rows.iter().filter(|r| r.feasible).collect();
                let deltas: Vec<f64> = rows.iter().filter_map(|r| r.delta).collect();
                SummaryRow {
                    sweep_var: rows[0].sweep_var.clone(),
                    sweep_value: rows[0].sweep_value,
                    scheme: rows[0].scheme,
                    trials: rows.len(),
                    feasible_fraction: feasible.len() as f64 / n,
                    mean_e_sum: rows.iter().map(|r| r.effective_e_sum()).sum::<f64>() / n,
                    mean_e_sum_feasible: (!feasible.is_empty())
                        .then(|| feasible.iter().map(|r| r.e_sum).sum::<f64>() / feasible.len() as f64),
                    mean_info_power: (!feasible.is_empty())
                        .then(|| feasible.iter().map(|r| r.info_power).sum::<f64>() / feasible.len() as f64),
                    mean_delta: (!deltas.is_empty()).then(|| deltas.iter().sum::<f64>() / deltas.len() as f64),
                }
            })
            .collect()
    }
}

/// Total order on finite floats that matches numeric order.
fn ordered_key(v: f64) -> u64 {
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | 1 << 63
    }
}

/// Aggregate of one (sweep point, scheme) group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sweep_var: String,
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub trials: usize,
    pub feasible_fraction: f64,
    /// Infeasible trials count as zero.
    pub mean_e_sum: f64,
    pub mean_e_sum_feasible: Option<f64>,
    pub mean_info_power: Option<f64>,
    pub mean_delta: Option<f64>,
}

/// Runs every scheme on every (sweep point, trial) pair. Trial `t` uses the
/// channel realization seeded with `base_seed + t` at every sweep point and
/// for every scheme. A scheme that errors is recorded as an infeasible row.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let base = config.params_at(config.sweep.values()[0])?;
    let per_trial: Vec<Result<Vec<TrialRow>>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = config.base_seed.wrapping_add(trial as u64);
            let channels = generate(&base, &config.geometry, seed)?;
            let mut rows = Vec::new();
            for &value in config.sweep.values() {
                let params = config.params_at(value)?;
                let start = rows.len();
                let mut ub: Option<Result<Solution>> = None;
                for &scheme in &config.schemes {
                    let result = match scheme {
                        Scheme::UpperBound | Scheme::Stepwise => {
                            let ub = ub.get_or_insert_with(|| solve_ub(&params, &channels, &config.solver));
                            match (scheme, ub) {
                                (Scheme::UpperBound, Ok(sol)) => Some(sol.clone()),
                                (_, Ok(sol)) => solve_stepwise_from(&params, &channels, sol, &config.solver).ok(),
                                (_, Err(_)) => None,
                            }
                        }
                        _ => scheme.solve(&params, &channels, seed, &config.solver).ok(),
                    };
                    let row = match result {
                        Some(sol) => TrialRow {
                            sweep_var: config.sweep.var_name().to_string(),
                            sweep_value: value,
                            scheme,
                            trial,
                            seed,
                            feasible: sol.feasible,
                            e_sum: sol.harvested_total,
                            info_power: sol.info_power,
                            delta: None,
                            min_slack: Some(sol.min_slack(params.secrecy_targets())),
                        },
                        None => TrialRow {
                            sweep_var: config.sweep.var_name().to_string(),
                            sweep_value: value,
                            scheme,
                            trial,
                            seed,
                            feasible: false,
                            e_sum: 0.0,
                            info_power: 0.0,
                            delta: None,
                            min_slack: None,
                        },
                    };
                    rows.push(row);
                }
                let ub = rows[start..]
                    .iter()
                    .find(|r| r.scheme == Scheme::UpperBound)
                    .map(TrialRow::effective_e_sum);
                if let Some(ub) = ub.filter(|u| *u > 0.0) {
                    for r in &mut rows[start..] {
                        r.delta = Some(r.effective_e_sum() / ub);
                    }
                }
            }
            Ok(rows)
        })
        .collect();
    let mut table = ResultTable::default();
    for rows in per_trial {
        table.rows.extend(rows?);
    }
    table.sort();
    Ok(table)
}

pub const RESULT_HEADER: [&str; 10] = [
    "sweep_var",
    "sweep_value",
    "scheme",
    "trial",
    "seed",
    "feasible",
    "E_sum_W",
    "info_power_W",
    "delta",
    "min_slack_bits",
];

pub const SUMMARY_HEADER: [&str; 9] = [
    "sweep_var",
    "sweep_value",
    "scheme",
    "trials",
    "feasible_fraction",
    "mean_E_sum_W",
    "mean_E_sum_feasible_W",
    "mean_info_power_W",
    "mean_delta",
];

/// Ten significant digits.
fn fmt_f(v: f64) -> String {
    format!("{v:.9e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: PathBuf::new(),
            source,
        },
        other => Error::validation(format!("csv error: {other:?}")),
    }
}

/// Writes per-trial rows as CSV.
pub fn write_results<W: Write>(table: &ResultTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER).map_err(csv_err)?;
    for r in &table.rows {
        w.write_record([
            r.sweep_var.clone(),
            fmt_f(r.sweep_value),
            r.scheme.as_str().to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.feasible.to_string(),
            fmt_f(r.e_sum),
            fmt_f(r.info_power),
            fmt_opt(r.delta),
            fmt_opt(r.min_slack),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::new(),
        source,
    })
}

pub fn write_summary<W: Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for s in summary {
        w.write_record([
            s.sweep_var.clone(),
            fmt_f(s.sweep_value),
            s.scheme.as_str().to_string(),
            s.trials.to_string(),
            fmt_f(s.feasible_fraction),
            fmt_f(s.mean_e_sum),
            fmt_opt(s.mean_e_sum_feasible),
            fmt_opt(s.mean_info_power),
            fmt_opt(s.mean_delta),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::new(),
        source,
    })
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the per-trial table to `path`.
pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    write_results(table, create(path)?).map_err(|e| with_path(path, e))
}

/// `results.csv` becomes `results_summary.csv`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_summary.{}", ext.to_string_lossy()),
        None => format!("{stem}_summary"),
    };
    path.with_file_name(name)
}

pub fn emit_summary(summary: &[SummaryRow], path: &Path) -> Result<()> {
    write_summary(summary, create(path)?).map_err(|e| with_path(path, e))
}

/// Reads a per-trial table written by [`write_results`].
pub fn parse_results_csv<R: Read>(input: R) -> Result<ResultTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers().map_err(|e| Error::parse(1, e.to_string()))?;
    if header.iter().ne(RESULT_HEADER.iter().copied()) {
        return Err(Error::parse(1, format!("expected header `{}`", RESULT_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        let f = |idx: usize| -> Result<f64> {
            rec[idx]
                .parse::<f64>()
                .map_err(|_| Error::parse(line, format!("bad number `{}` in {}", &rec[idx], RESULT_HEADER[idx])))
        };
        let opt = |idx: usize| -> Result<Option<f64>> {
            if rec[idx].is_empty() {
                Ok(None)
            } else {
                f(idx).map(Some)
            }
        };
        let int = |idx: usize| -> Result<u64> {
            rec[idx]
                .parse::<u64>()
                .map_err(|_| Error::parse(line, format!("bad integer `{}` in {}", &rec[idx], RESULT_HEADER[idx])))
        };
        rows.push(TrialRow {
            sweep_var: rec[0].to_string(),
            sweep_value: f(1)?,
            scheme: Scheme::parse(&rec[2]).ok_or_else(|| Error::parse(line, format!("unknown scheme `{}`", &rec[2])))?,
            trial: usize::try_from(int(3)?).map_err(|_| Error::parse(line, "trial out of range"))?,
            seed: int(4)?,
            feasible: match &rec[5] {
                "true" => true,
                "false" => false,
                other => return Err(Error::parse(line, format!("bad flag `{other}`"))),
            },
            e_sum: f(6)?,
            info_power: f(7)?,
            delta: opt(8)?,
            min_slack: opt(9)?,
        });
    }
    Ok(ResultTable { rows })
}
