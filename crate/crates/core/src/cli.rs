//! Command-line front end.
//!
//! `run` never touches the process environment except through the
//! [`Environment`] it is handed, so it can be driven from tests.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::combinatorics::{
    count_condensed_sets, derangement_count, enumerate_condensed_sets, enumerate_derangements,
    format_condensed_sets, ordered_condensed_count, Permutation,
};
use crate::error::{Error, Result};
use crate::experiments::{
    generate_realization, run_baseline_comparison, run_fair_switching, run_lm_saturation,
    ExperimentConfig, SNR_DEFINITION,
};
use crate::numerics::RngStream;
use crate::relay::{random_phase_search, scalar_baseline};
use crate::scheduling::{link_rate_in_base, realize_demand_over, TrafficDemand};

pub const SEED_ENV: &str = "MIMOSWITCH_SEED";

#[derive(Debug, Parser)]
#[command(name = "mimoswitch", version, about = "Wireless MIMO switching simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the derangements of n stations.
    Derangements(EnumArgs),
    /// List the condensed derangement sets of n stations.
    CondensedSets(EnumArgs),
    /// Solve one beamformer on one channel realization.
    Solve(SolveArgs),
    /// Map a traffic demand file onto a condensed set.
    RealizeDemand(DemandArgs),
    /// Throughput of every selected condensed set over an SNR sweep.
    FairSwitching(ExperimentArgs),
    /// Throughput as a function of (L, M).
    LmSaturation(LmArgs),
    /// Diagonal amplification versus the scalar-weight baseline.
    BaselineCompare(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write results here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct EnumArgs {
    #[arg(long)]
    pub n: usize,
    /// Print only the number of items.
    #[arg(long)]
    pub count_only: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// SNR grid in dB, comma separated.
    #[arg(long)]
    pub snr: Option<String>,
    /// Random-phase trials per derangement.
    #[arg(short = 'L', long = "trials")]
    pub trials: Option<usize>,
    /// Phase bins.
    #[arg(short = 'M', long = "bins")]
    pub bins: Option<usize>,
    #[arg(long)]
    pub realizations: Option<usize>,
    /// `all` or comma-separated 1-based condensed-set indices.
    #[arg(long)]
    pub sets: Option<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LmArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// (L, M) points as `LxM`, comma separated.
    #[arg(long, default_value = "1x1,10x8,20x16")]
    pub grid: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Switch permutation as space- or comma-separated receive-from list
    /// (default: cyclic shift, station j receives from j+1).
    #[arg(long)]
    pub perm: Option<String>,
    /// Realization index to draw.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DemandArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub demand: PathBuf,
    /// 1-based condensed-set index.
    #[arg(long, default_value_t = 1)]
    pub set: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// What `run` may read from the outside world.
#[derive(Debug, Default, Clone)]
pub struct Environment {
    pub seed: Option<String>,
}

impl Environment {
    pub fn from_process() -> Self {
        Self {
            seed: std::env::var(SEED_ENV).ok(),
        }
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I, env: &Environment, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    match execute(cli.command, env, stderr) {
        Ok((text, out)) => {
            let written = match out {
                Some(path) => fs::write(&path, text.as_bytes())
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => 0,
                Err(msg) => {
                    let _ = writeln!(stderr, "error: {msg}");
                    1
                }
            }
        }
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(CliError::Runtime(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::Parse { .. } | Error::InvalidPermutation(_) | Error::TooLarge { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Runtime(other),
        }
    }
}

type Output = (String, Option<PathBuf>);

fn execute(command: Command, env: &Environment, stderr: &mut dyn Write) -> std::result::Result<Output, CliError> {
    match command {
        Command::Derangements(a) => {
            let fmt = a.output.format.unwrap_or(Format::Text);
            let text = if a.count_only {
                match fmt {
                    Format::Json => json(&serde_json::json!({ "n": a.n, "count": derangement_count(a.n).to_string() })),
                    _ => format!("{}\n", derangement_count(a.n)),
                }
            } else {
                let list = enumerate_derangements(a.n)?;
                match fmt {
                    Format::Json => {
                        let rows: Vec<Vec<usize>> =
                            list.iter().map(|d| d.recv_from().iter().map(|i| i + 1).collect()).collect();
                        json(&serde_json::json!({ "n": a.n, "count": list.len(), "derangements": rows }))
                    }
                    _ => list.iter().map(|d| format!("{d}\n")).collect(),
                }
            };
            Ok((text, a.output.out))
        }
        Command::CondensedSets(a) => {
            let fmt = a.output.format.unwrap_or(Format::Text);
            let text = if a.count_only {
                let unordered = count_condensed_sets(a.n)?;
                match fmt {
                    Format::Json => json(&serde_json::json!({
                        "n": a.n,
                        "unordered": unordered,
                        "ordered": ordered_condensed_count(unordered, a.n).to_string(),
                    })),
                    _ => format!("{unordered}\n"),
                }
            } else {
                let sets = enumerate_condensed_sets(a.n)?;
                match fmt {
                    Format::Json => {
                        let rows: Vec<Vec<Vec<usize>>> = sets
                            .iter()
                            .map(|s| {
                                s.derangements()
                                    .iter()
                                    .map(|d| d.recv_from().iter().map(|i| i + 1).collect())
                                    .collect()
                            })
                            .collect();
                        json(&serde_json::json!({
                            "n": a.n,
                            "unordered": sets.len(),
                            "ordered": ordered_condensed_count(sets.len() as u64, a.n).to_string(),
                            "sets": rows,
                        }))
                    }
                    _ => format_condensed_sets(&sets),
                }
            };
            Ok((text, a.output.out))
        }
        Command::Solve(a) => {
            let config = effective_config(&a.config, env)?;
            let text = solve(&config, a.perm.as_deref(), a.index, a.output.format.unwrap_or(Format::Text))?;
            Ok((text, a.output.out))
        }
        Command::RealizeDemand(a) => {
            let raw = fs::read_to_string(&a.demand)
                .map_err(|e| CliError::Usage(format!("--demand {}: {e}", a.demand.display())))?;
            let demand = TrafficDemand::parse(&raw)?;
            if let Some(n) = a.n {
                if n != demand.n() {
                    return Err(CliError::Usage(format!(
                        "--n {n} does not match the demand file's n={}",
                        demand.n()
                    )));
                }
            }
            let sets = enumerate_condensed_sets(demand.n())?;
            let set = sets.get(a.set.wrapping_sub(1)).ok_or_else(|| {
                CliError::Usage(format!("--set {} out of range 1..={}", a.set, sets.len()))
            })?;
            let assignment = realize_demand_over(&demand, set)?;
            let text = match a.output.format.unwrap_or(Format::Text) {
                Format::Json => {
                    let slots: Vec<_> = assignment
                        .slots
                        .iter()
                        .enumerate()
                        .map(|(k, s)| {
                            serde_json::json!({
                                "slot": k + 1,
                                "derangement": s.derangement.recv_from().iter().map(|i| i + 1).collect::<Vec<_>>(),
                                "tx": s.tx,
                            })
                        })
                        .collect();
                    json(&serde_json::json!({ "n": demand.n(), "set_index": a.set, "slots": slots }))
                }
                _ => assignment.to_string(),
            };
            Ok((text, a.output.out))
        }
        Command::FairSwitching(a) => {
            let config = effective_config(&a.config, env)?;
            let fmt = experiment_format(&a.output, &config, stderr);
            progress(stderr, "fair-switching", &config);
            let report = with_threads(a.config.threads, || run_fair_switching(&config))?;
            let text = match fmt {
                Format::Json => json(&report),
                _ => report.to_csv(),
            };
            Ok((text, a.output.out))
        }
        Command::LmSaturation(a) => {
            let config = effective_config(&a.config, env)?;
            let grid = parse_lm_grid(&a.grid).map_err(CliError::Usage)?;
            let fmt = experiment_format(&a.output, &config, stderr);
            progress(stderr, "lm-saturation", &config);
            let report = with_threads(a.config.threads, || run_lm_saturation(&config, &grid))?;
            let text = match fmt {
                Format::Json => json(&report),
                _ => report.to_csv(),
            };
            Ok((text, a.output.out))
        }
        Command::BaselineCompare(a) => {
            let config = effective_config(&a.config, env)?;
            let fmt = experiment_format(&a.output, &config, stderr);
            progress(stderr, "baseline-compare", &config);
            let report = with_threads(a.config.threads, || run_baseline_comparison(&config))?;
            let text = match fmt {
                Format::Json => json(&report),
                _ => report.to_csv(),
            };
            Ok((text, a.output.out))
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn progress(stderr: &mut dyn Write, what: &str, config: &ExperimentConfig) {
    let _ = writeln!(
        stderr,
        "{what}: n={} realizations={} snr points={} L={} M={} seed={}",
        config.n,
        config.realizations,
        config.snr_grid_db.len(),
        config.solver.trials,
        config.solver.phase_bins,
        config.master_seed
    );
}

/// CSV carries no metadata, so the effective configuration goes to stderr.
fn experiment_format(output: &OutputArgs, config: &ExperimentConfig, stderr: &mut dyn Write) -> Format {
    let fmt = match output.format {
        Some(Format::Json) => Format::Json,
        _ => Format::Csv,
    };
    if fmt == Format::Csv {
        let _ = writeln!(stderr, "# effective config ({SNR_DEFINITION})");
        for line in config.to_text().lines() {
            let _ = writeln!(stderr, "# {line}");
        }
    }
    fmt
}

/// Defaults, then `MIMOSWITCH_SEED`, then the config file, then flags.
pub fn effective_config(args: &ConfigArgs, env: &Environment) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    if let Some(seed) = &env.seed {
        config.master_seed = seed
            .trim()
            .parse()
            .map_err(|e| Error::InvalidConfig(format!("{SEED_ENV}={seed:?}: {e}")))?;
    }
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("--config {}: {e}", path.display())))?;
        config.apply_text(&text)?;
    }
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(snr) = &args.snr {
        config.set("snr_grid", snr).map_err(flag_error("--snr"))?;
    }
    if let Some(l) = args.trials {
        config.solver.trials = l;
    }
    if let Some(m) = args.bins {
        config.solver.phase_bins = m;
    }
    if let Some(r) = args.realizations {
        config.realizations = r;
    }
    if let Some(sets) = &args.sets {
        config.set("sets", sets).map_err(flag_error("--sets"))?;
    }
    if args.threads == Some(0) {
        return Err(Error::InvalidConfig("--threads must be >= 1".into()));
    }
    config.validate()?;
    Ok(config)
}

fn flag_error(flag: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::InvalidConfig(format!("{flag}: {e}"))
}

pub fn parse_lm_grid(text: &str) -> std::result::Result<Vec<(usize, usize)>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (l, m) = item
                .split_once(['x', 'X'])
                .ok_or_else(|| format!("--grid: expected LxM, found {item:?}"))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|e| format!("--grid: bad value in {item:?}: {e}"))
            };
            Ok((parse(l)?, parse(m)?))
        })
        .collect()
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("--threads {t}: {e}")))?
            .install(f),
        None => f(),
    }
}

#[derive(Serialize)]
struct SolveReport {
    n: usize,
    snr_db: f64,
    realization: usize,
    perm: Vec<usize>,
    sigma_e_sq: f64,
    rate: f64,
    relay_power: f64,
    channel_residual: f64,
    amp_magnitudes: Vec<f64>,
    amp_phases: Vec<f64>,
    scalar_alpha: f64,
    scalar_noise: Vec<f64>,
    scalar_rates: Vec<f64>,
    trials: usize,
    phase_bins: usize,
    seed: u64,
}

fn solve(config: &ExperimentConfig, perm: Option<&str>, index: usize, fmt: Format) -> Result<String> {
    let n = config.n;
    let perm: Permutation = match perm {
        Some(p) => p.parse()?,
        None => Permutation::new((0..n).map(|j| (j + 1) % n).collect())?,
    };
    if perm.n() != n {
        return Err(Error::InvalidConfig(format!(
            "--perm has {} entries but n = {n}",
            perm.n()
        )));
    }
    let snr_db = config.snr_grid_db[0];
    let (channel, _) = generate_realization(config, snr_db, index)?;
    let mut rng = RngStream::keyed(config.master_seed, &[0x501e, index as u64]);
    let bf = random_phase_search(&channel, &perm, &config.solver, &mut rng)?;
    let sb = scalar_baseline(&channel, &perm)?;
    let base = config.metric.log_base;
    let report = SolveReport {
        n,
        snr_db,
        realization: index,
        perm: perm.recv_from().iter().map(|i| i + 1).collect(),
        sigma_e_sq: bf.sigma_e_sq,
        rate: link_rate_in_base(bf.sigma_e_sq, base),
        relay_power: bf.relay_power_used,
        channel_residual: bf.channel_residual(&channel),
        amp_magnitudes: bf.amp_magnitudes.clone(),
        amp_phases: bf.amp_phases.clone(),
        scalar_alpha: sb.alpha,
        scalar_noise: sb.per_station_noise.clone(),
        scalar_rates: sb.per_station_noise.iter().map(|&v| link_rate_in_base(v, base)).collect(),
        trials: config.solver.trials,
        phase_bins: config.solver.phase_bins,
        seed: config.master_seed,
    };
    Ok(match fmt {
        Format::Json => json(&report),
        _ => {
            let list = |v: &[f64]| v.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(",");
            format!(
                "n={}\nsnr_db={}\nrealization={}\nperm={}\nsigma_e_sq={:.12e}\nrate={:.12e}\nrelay_power={:.12e}\nchannel_residual={:.3e}\namp_magnitudes={}\namp_phases={}\nscalar_alpha={:.12e}\nscalar_noise={}\nscalar_rates={}\n",
                report.n,
                report.snr_db,
                report.realization,
                perm,
                report.sigma_e_sq,
                report.rate,
                report.relay_power,
                report.channel_residual,
                list(&report.amp_magnitudes),
                list(&report.amp_phases),
                report.scalar_alpha,
                list(&report.scalar_noise),
                list(&report.scalar_rates),
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("mimoswitch").chain(args.iter().copied());
        let code = run(argv, &Environment::default(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn count_only() {
        assert_eq!(run_capture(&["derangements", "--n", "5", "--count-only"]).1, "44\n");
        assert_eq!(run_capture(&["condensed-sets", "--n", "5", "--count-only"]).1, "56\n");
    }

    #[test]
    fn usage_errors_exit_two() {
        let (code, _, err) = run_capture(&["derangements"]);
        assert_eq!(code, 2);
        assert!(err.contains("--n"), "{err}");
        let (code, _, err) = run_capture(&["fair-switching", "--snr", "a,b"]);
        assert_eq!(code, 2);
        assert!(err.contains("--snr"), "{err}");
        let (code, _, _) = run_capture(&["lm-saturation", "--grid", "10-8"]);
        assert_eq!(code, 2);
        let (code, _, _) = run_capture(&["condensed-sets", "--n", "9"]);
        assert_eq!(code, 2);
        let (code, _, _) = run_capture(&["bogus"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn lm_grid_parsing() {
        assert_eq!(parse_lm_grid("1x1, 10x8,20X16").unwrap(), vec![(1, 1), (10, 8), (20, 16)]);
        assert!(parse_lm_grid("10").is_err());
    }

    #[test]
    fn precedence_flag_over_config_over_env() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.txt");
        fs::write(&path, "seed = 7\nrealizations = 3\n").unwrap();
        let env = Environment { seed: Some("5".into()) };
        let mut args = ConfigArgs {
            config: None,
            n: None,
            seed: None,
            snr: None,
            trials: None,
            bins: None,
            realizations: None,
            sets: None,
            threads: None,
        };
        assert_eq!(effective_config(&args, &env).unwrap().master_seed, 5);
        args.config = Some(path);
        let cfg = effective_config(&args, &env).unwrap();
        assert_eq!((cfg.master_seed, cfg.realizations), (7, 3));
        args.seed = Some(9);
        assert_eq!(effective_config(&args, &env).unwrap().master_seed, 9);
        let bad = Environment { seed: Some("x".into()) };
        args.seed = None;
        assert!(effective_config(&args, &bad).is_err());
    }

    #[test]
    fn solve_text_output() {
        let (code, out, err) = run_capture(&["solve", "--n", "4", "--snr", "10", "--perm", "2 1 4 3"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("perm=2 1 4 3\n"));
        let power: f64 = out
            .lines()
            .find_map(|l| l.strip_prefix("relay_power="))
            .unwrap()
            .parse()
            .unwrap();
        assert!((power - 1.0).abs() < 1e-6);
        let (code, _, _) = run_capture(&["solve", "--n", "4", "--perm", "1 2 3"]);
        assert_eq!(code, 2);
    }
}
