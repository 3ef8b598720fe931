//! Monte Carlo harness: channel ensembles, SNR sweeps and paired comparisons.
//!
//! Every realization draws its channel from a stream keyed by
//! `(master_seed, realization index, attempt)` and its phase trials from
//! streams keyed by `(master_seed, realization, SNR point, derangement)`.
//! Work is spread over the current rayon pool; results are gathered by index
//! and reduced sequentially, so output does not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{enumerate_condensed_sets, enumerate_derangements, CondensedSet, Derangement};
use crate::error::{Error, Result};
use crate::numerics::{invert, sample_complex_gaussian, ComplexMatrix, RngStream};
use crate::relay::{best_phases, scalar_baseline, ChannelRealization, SolverConfig};
use crate::scheduling::{
    fair_throughput, link_rate_in_base, per_station_fair_throughput, shared_slot_fair_throughput,
};

const CHANNEL_TAG: u64 = 0xc4a7;
const PHASE_TAG: u64 = 0x9ba5;

/// Relay power budget used by every experiment.
pub const RELAY_POWER: f64 = 1.0;
/// Attempts at drawing an invertible channel before giving up.
pub const MAX_RESAMPLES: usize = 100;

pub const SNR_DEFINITION: &str =
    "snr_db = 10*log10(1/sigma^2) with unit station power; relay noise variance equals station noise variance; relay power p = 1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetSelection {
    All,
    /// 1-based indices into the canonical list of condensed sets.
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    /// i.i.d. CN(0, 1) entries.
    Rayleigh,
    /// Identity uplink and downlink for every realization.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    pub log_base: f64,
    /// Halve throughput for the two sub-slots of each slot.
    pub half_duplex: bool,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            log_base: 2.0,
            half_duplex: false,
        }
    }
}

impl MetricOptions {
    fn reported(&self, raw: f64) -> f64 {
        if self.half_duplex {
            raw * 0.5
        } else {
            raw
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub realizations: usize,
    pub snr_grid_db: Vec<f64>,
    pub solver: SolverConfig,
    pub master_seed: u64,
    pub set_selection: SetSelection,
    pub reciprocal: bool,
    pub channel_model: ChannelModel,
    pub metric: MetricOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 4,
            realizations: 10_000,
            snr_grid_db: default_snr_grid(),
            solver: SolverConfig::default(),
            master_seed: 1,
            set_selection: SetSelection::All,
            reciprocal: true,
            channel_model: ChannelModel::Rayleigh,
            metric: MetricOptions::default(),
        }
    }
}

/// 0 to 30 dB in 5 dB steps.
pub fn default_snr_grid() -> Vec<f64> {
    (0..=6).map(|k| 5.0 * k as f64).collect()
}

/// Noise variance for a given SNR in dB (unit signal power).
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig("n must be at least 2".into()));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidConfig("realizations must be >= 1".into()));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig("snr grid must be non-empty and finite".into()));
        }
        if !(self.metric.log_base > 1.0 && self.metric.log_base.is_finite()) {
            return Err(Error::InvalidConfig("log base must be > 1".into()));
        }
        if let SetSelection::Indices(idx) = &self.set_selection {
            if idx.is_empty() || idx.contains(&0) {
                return Err(Error::InvalidConfig(
                    "set indices are 1-based and the list must be non-empty".into(),
                ));
            }
        }
        self.solver.validate()
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("{key} = {value:?}: {e}")))
        }
        match key {
            "n" => self.n = parse(key, value)?,
            "realizations" => self.realizations = parse(key, value)?,
            "snr_grid" | "snr_grid_db" | "snr" => self.snr_grid_db = parse_list(key, value)?,
            "trials" | "L" => self.solver.trials = parse(key, value)?,
            "phase_bins" | "M" => self.solver.phase_bins = parse(key, value)?,
            "root_tolerance" => self.solver.root_tolerance = parse(key, value)?,
            "max_iterations" => self.solver.max_iterations = parse(key, value)?,
            "bracket_scan_factor" => self.solver.bracket_scan_factor = parse(key, value)?,
            "master_seed" | "seed" => self.master_seed = parse(key, value)?,
            "sets" | "condensed_set_selection" => {
                self.set_selection = if value.trim() == "all" {
                    SetSelection::All
                } else {
                    SetSelection::Indices(parse_list(key, value)?)
                }
            }
            "reciprocal" => self.reciprocal = parse(key, value)?,
            "channel_model" => {
                self.channel_model = match value.trim() {
                    "rayleigh" => ChannelModel::Rayleigh,
                    "identity" => ChannelModel::Identity,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "channel_model must be rayleigh or identity, got {other:?}"
                        )))
                    }
                }
            }
            "log_base" => self.metric.log_base = parse(key, value)?,
            "half_duplex" => self.metric.half_duplex = parse(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: format!("expected `key = value`, found {line:?}"),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Renders the configuration in the same flat format `apply_text` reads.
    pub fn to_text(&self) -> String {
        let sets = match &self.set_selection {
            SetSelection::All => "all".to_string(),
            SetSelection::Indices(v) => join(v),
        };
        let model = match self.channel_model {
            ChannelModel::Rayleigh => "rayleigh",
            ChannelModel::Identity => "identity",
        };
        format!(
            "n = {}\nrealizations = {}\nsnr_grid = {}\ntrials = {}\nphase_bins = {}\nroot_tolerance = {:e}\nmax_iterations = {}\nbracket_scan_factor = {}\nmaster_seed = {}\nsets = {}\nreciprocal = {}\nchannel_model = {}\nlog_base = {}\nhalf_duplex = {}\n",
            self.n,
            self.realizations,
            join(&self.snr_grid_db),
            self.solver.trials,
            self.solver.phase_bins,
            self.solver.root_tolerance,
            self.solver.max_iterations,
            self.solver.bracket_scan_factor,
            self.master_seed,
            sets,
            self.reciprocal,
            model,
            self.metric.log_base,
            self.metric.half_duplex,
        )
    }

    /// The selected condensed sets paired with their 1-based indices.
    pub fn selected_sets(&self) -> Result<Vec<(usize, CondensedSet)>> {
        let all = enumerate_condensed_sets(self.n)?;
        match &self.set_selection {
            SetSelection::All => Ok(all.into_iter().enumerate().map(|(k, s)| (k + 1, s)).collect()),
            SetSelection::Indices(idx) => idx
                .iter()
                .map(|&k| {
                    all.get(k.wrapping_sub(1)).cloned().map(|s| (k, s)).ok_or_else(|| {
                        Error::InvalidConfig(format!(
                            "set index {k} out of range 1..={} for n = {}",
                            all.len(),
                            self.n
                        ))
                    })
                })
                .collect(),
        }
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|e| Error::InvalidConfig(format!("{key}: bad entry {s:?}: {e}")))
        })
        .collect()
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Channel matrices of one realization, shared by all SNR points.
#[derive(Debug, Clone)]
pub struct ChannelDraw {
    pub h_up: ComplexMatrix,
    pub h_down: ComplexMatrix,
    /// Singular draws discarded before this one.
    pub resamples: usize,
}

/// Draws the uplink/downlink pair for realization `index`.
pub fn generate_channel(config: &ExperimentConfig, index: usize) -> Result<ChannelDraw> {
    let n = config.n;
    if config.channel_model == ChannelModel::Identity {
        return Ok(ChannelDraw {
            h_up: ComplexMatrix::identity(n),
            h_down: ComplexMatrix::identity(n),
            resamples: 0,
        });
    }
    for attempt in 0..MAX_RESAMPLES {
        let mut rng = RngStream::keyed(config.master_seed, &[CHANNEL_TAG, index as u64, attempt as u64]);
        let h_up = sample_complex_gaussian(n, &mut rng);
        let h_down = if config.reciprocal {
            h_up.transpose()
        } else {
            sample_complex_gaussian(n, &mut rng)
        };
        if invert(&h_up).is_ok() && invert(&h_down).is_ok() {
            return Ok(ChannelDraw {
                h_up,
                h_down,
                resamples: attempt,
            });
        }
    }
    Err(Error::Realization {
        index,
        stage: "channel generation",
        source: Box::new(Error::SingularMatrix {
            condition: f64::INFINITY,
        }),
    })
}

/// Realization `index` at the given SNR, with the number of resamples.
pub fn generate_realization(
    config: &ExperimentConfig,
    snr_db: f64,
    index: usize,
) -> Result<(ChannelRealization, usize)> {
    let draw = generate_channel(config, index)?;
    let noise = noise_variance(snr_db);
    let ch = ChannelRealization::new(draw.h_up, draw.h_down, noise, noise, RELAY_POWER).map_err(|e| {
        Error::Realization {
            index,
            stage: "channel setup",
            source: Box::new(e),
        }
    })?;
    Ok((ch, draw.resamples))
}

/// Per-realization minimum `σ_e²`, indexed `[snr point][derangement]`.
struct RealizationSigmas {
    sigmas: Vec<Vec<f64>>,
    resamples: usize,
}

fn diagonal_sigmas(
    config: &ExperimentConfig,
    solver: &SolverConfig,
    index: usize,
    derangements: &[(usize, Derangement)],
) -> Result<RealizationSigmas> {
    let draw = generate_channel(config, index)?;
    let mut sigmas = Vec::with_capacity(config.snr_grid_db.len());
    for (s, &snr) in config.snr_grid_db.iter().enumerate() {
        let noise = noise_variance(snr);
        let ch = ChannelRealization::new(draw.h_up.clone(), draw.h_down.clone(), noise, noise, RELAY_POWER)
            .map_err(|e| Error::Realization {
                index,
                stage: "channel setup",
                source: Box::new(e),
            })?;
        let row = derangements
            .iter()
            .map(|(key, d)| {
                let mut rng = RngStream::keyed(
                    config.master_seed,
                    &[PHASE_TAG, index as u64, s as u64, *key as u64],
                );
                best_phases(&ch, d, solver, &mut rng)
                    .map(|(sigma, _)| sigma)
                    .map_err(|e| Error::Realization {
                        index,
                        stage: "random-phase search",
                        source: Box::new(e),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        sigmas.push(row);
    }
    Ok(RealizationSigmas {
        sigmas,
        resamples: draw.resamples,
    })
}

fn ensemble_sigmas(
    config: &ExperimentConfig,
    solver: &SolverConfig,
    derangements: &[(usize, Derangement)],
) -> Result<Vec<RealizationSigmas>> {
    (0..config.realizations)
        .into_par_iter()
        .map(|index| diagonal_sigmas(config, solver, index, derangements))
        .collect()
}

/// Distinct derangements used by `sets`, keyed by their position in the
/// lexicographic enumeration, plus each set's member positions in that list.
fn used_derangements(n: usize, sets: &[(usize, CondensedSet)]) -> Result<(Vec<(usize, Derangement)>, Vec<Vec<usize>>)> {
    let all = enumerate_derangements(n)?;
    let mut used: Vec<usize> = sets
        .iter()
        .flat_map(|(_, s)| s.derangements().iter().map(|d| all.binary_search(d).expect("enumerated")))
        .collect();
    used.sort_unstable();
    used.dedup();
    let members = sets
        .iter()
        .map(|(_, s)| {
            s.derangements()
                .iter()
                .map(|d| used.binary_search(&all.binary_search(d).unwrap()).unwrap())
                .collect()
        })
        .collect();
    Ok((used.into_iter().map(|k| (k, all[k].clone())).collect(), members))
}

/// Running mean and standard error, accumulated in a fixed order.
#[derive(Debug, Default, Clone, Copy)]
struct Moments {
    count: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    fn std_err(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetPoint {
    /// 1-based index into the canonical condensed-set list.
    pub set_index: usize,
    pub snr_db: f64,
    /// Mean throughput with the configured half-duplex setting applied.
    pub mean_throughput: f64,
    pub std_err: f64,
    pub raw_mean_throughput: f64,
    pub half_duplex_mean_throughput: f64,
    /// Ensemble mean of `σ_e²` for each derangement in the set.
    pub mean_sigma_e_sq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadPoint {
    pub snr_db: f64,
    /// `max_m |E{T_m} − mean_m E{T_m}| / mean_m E{T_m}`.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub log_base: f64,
    pub half_duplex: bool,
    pub snr_definition: String,
    pub relay_power: f64,
    pub resampled_channels: usize,
    pub config: ExperimentConfig,
}

impl ReportMetadata {
    fn new(config: &ExperimentConfig, resampled_channels: usize) -> Self {
        Self {
            log_base: config.metric.log_base,
            half_duplex: config.metric.half_duplex,
            snr_definition: SNR_DEFINITION.to_string(),
            relay_power: RELAY_POWER,
            resampled_channels,
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub metadata: ReportMetadata,
    pub sets: Vec<SetPoint>,
    pub spread: Vec<SpreadPoint>,
}

impl ThroughputReport {
    pub fn max_spread_in(&self, lo_db: f64, hi_db: f64) -> f64 {
        self.spread
            .iter()
            .filter(|p| p.snr_db >= lo_db && p.snr_db <= hi_db)
            .map(|p| p.spread)
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let c = &self.metadata.config;
        let mut rows = CsvRows::new();
        for p in &self.sets {
            rows.push("diagonal", p.set_index, p.snr_db, p.mean_throughput, p.std_err, c);
        }
        rows.finish()
    }
}

/// Fair-switching throughput of every selected condensed set.
pub fn run_fair_switching(config: &ExperimentConfig) -> Result<ThroughputReport> {
    config.validate()?;
    let sets = config.selected_sets()?;
    let (derangements, members) = used_derangements(config.n, &sets)?;
    let ensemble = ensemble_sigmas(config, &config.solver, &derangements)?;
    let resampled = ensemble.iter().map(|r| r.resamples).sum();

    let mut points = Vec::new();
    let mut spread = Vec::new();
    for (s, &snr) in config.snr_grid_db.iter().enumerate() {
        let mut set_means = Vec::with_capacity(sets.len());
        for ((set_index, _), member) in sets.iter().zip(&members) {
            let mut moments = Moments::default();
            let mut sigma_sums = vec![0.0; member.len()];
            for real in &ensemble {
                let row = &real.sigmas[s];
                let rates: Vec<f64> = member
                    .iter()
                    .map(|&k| link_rate_in_base(row[k], config.metric.log_base))
                    .collect();
                moments.push(fair_throughput(&rates));
                for (acc, &k) in sigma_sums.iter_mut().zip(member) {
                    *acc += row[k];
                }
            }
            let raw = moments.mean();
            set_means.push(raw);
            points.push(SetPoint {
                set_index: *set_index,
                snr_db: snr,
                mean_throughput: config.metric.reported(raw),
                std_err: config.metric.reported(1.0) * moments.std_err(),
                raw_mean_throughput: raw,
                half_duplex_mean_throughput: raw * 0.5,
                mean_sigma_e_sq: sigma_sums.iter().map(|v| v / ensemble.len() as f64).collect(),
            });
        }
        spread.push(SpreadPoint {
            snr_db: snr,
            spread: relative_spread(&set_means),
        });
    }
    Ok(ThroughputReport {
        metadata: ReportMetadata::new(config, resampled),
        sets: points,
        spread,
    })
}

/// Largest relative deviation from the mean.
pub fn relative_spread(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values
        .iter()
        .map(|v| (v - mean).abs() / mean)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmPoint {
    pub trials: usize,
    pub phase_bins: usize,
    pub snr_db: f64,
    pub mean_throughput: f64,
    pub std_err: f64,
    /// Relative gain over the previous grid entry at the same SNR.
    pub gain_vs_previous: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmSaturationReport {
    pub metadata: ReportMetadata,
    /// 1-based index of the condensed set evaluated.
    pub set_index: usize,
    pub points: Vec<LmPoint>,
}

impl LmSaturationReport {
    pub fn gain(&self, from: (usize, usize), to: (usize, usize), snr_db: f64) -> Option<f64> {
        let find = |(l, m): (usize, usize)| {
            self.points
                .iter()
                .find(|p| p.trials == l && p.phase_bins == m && p.snr_db == snr_db)
                .map(|p| p.mean_throughput)
        };
        Some(find(to)? / find(from)? - 1.0)
    }

    pub fn to_csv(&self) -> String {
        let mut rows = CsvRows::new();
        for p in &self.points {
            let mut c = self.metadata.config.clone();
            c.solver.trials = p.trials;
            c.solver.phase_bins = p.phase_bins;
            rows.push("lm", self.set_index, p.snr_db, p.mean_throughput, p.std_err, &c);
        }
        rows.finish()
    }
}

/// Mean throughput of the first selected set for each `(L, M)`, all on the
/// same channels and phase streams.
pub fn run_lm_saturation(config: &ExperimentConfig, lm_grid: &[(usize, usize)]) -> Result<LmSaturationReport> {
    config.validate()?;
    if lm_grid.is_empty() {
        return Err(Error::InvalidConfig("(L, M) grid must be non-empty".into()));
    }
    let sets = config.selected_sets()?;
    let first = vec![sets[0].clone()];
    let (derangements, _) = used_derangements(config.n, &first)?;
    let mut resampled = 0;
    let mut curves: Vec<Vec<(f64, f64)>> = Vec::new();
    for &(trials, bins) in lm_grid {
        let solver = SolverConfig {
            trials,
            phase_bins: bins,
            ..config.solver
        };
        solver.validate()?;
        let ensemble = ensemble_sigmas(config, &solver, &derangements)?;
        resampled = ensemble.iter().map(|r| r.resamples).sum();
        let curve = (0..config.snr_grid_db.len())
            .map(|s| {
                let mut m = Moments::default();
                for real in &ensemble {
                    let rates: Vec<f64> = real.sigmas[s]
                        .iter()
                        .map(|&v| link_rate_in_base(v, config.metric.log_base))
                        .collect();
                    m.push(fair_throughput(&rates));
                }
                (config.metric.reported(m.mean()), config.metric.reported(1.0) * m.std_err())
            })
            .collect();
        curves.push(curve);
    }
    let mut points = Vec::new();
    for (g, &(trials, bins)) in lm_grid.iter().enumerate() {
        for (s, &snr) in config.snr_grid_db.iter().enumerate() {
            let (mean, se) = curves[g][s];
            points.push(LmPoint {
                trials,
                phase_bins: bins,
                snr_db: snr,
                mean_throughput: mean,
                std_err: se,
                gain_vs_previous: (g > 0).then(|| mean / curves[g - 1][s].0 - 1.0),
            });
        }
    }
    Ok(LmSaturationReport {
        metadata: ReportMetadata::new(config, resampled),
        set_index: sets[0].0,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub mean_throughput: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub throughput: f64,
    /// SNR the scalar scheme needs beyond the diagonal scheme.
    pub gap_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub metadata: ReportMetadata,
    pub set_index: usize,
    pub diagonal: Vec<CurvePoint>,
    /// Scalar scheme under shared fair-switching slots: each derangement is
    /// scheduled long enough for its slowest receiver.
    pub scalar: Vec<CurvePoint>,
    /// Scalar scheme scored by the mean over stations of each station's own
    /// fair throughput. Not achievable by one shared schedule; kept for
    /// comparison.
    pub scalar_per_station: Vec<CurvePoint>,
    /// Gaps to `scalar` at 25%, 50% and 75% of the diagonal curve's
    /// throughput range, where both curves reach that level inside the grid.
    pub gaps: Vec<GapPoint>,
    /// Gap to `scalar` at the middle of the diagonal curve's range.
    pub mid_curve_gap_db: Option<f64>,
    pub per_station_gaps: Vec<GapPoint>,
    pub per_station_mid_curve_gap_db: Option<f64>,
}

impl BaselineReport {
    pub fn to_csv(&self) -> String {
        let c = &self.metadata.config;
        let mut rows = CsvRows::new();
        for p in &self.diagonal {
            rows.push("diagonal", self.set_index, p.snr_db, p.mean_throughput, p.std_err, c);
        }
        for p in &self.scalar {
            rows.push("scalar", self.set_index, p.snr_db, p.mean_throughput, p.std_err, c);
        }
        for p in &self.scalar_per_station {
            rows.push("scalar_per_station", self.set_index, p.snr_db, p.mean_throughput, p.std_err, c);
        }
        rows.finish()
    }
}

/// Smallest SNR at which a curve reaches `level`, interpolating linearly
/// between grid points.
pub fn snr_at_throughput(curve: &[CurvePoint], level: f64) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        let (lo, hi) = (a.mean_throughput.min(b.mean_throughput), a.mean_throughput.max(b.mean_throughput));
        if level < lo || level > hi || hi == lo {
            return None;
        }
        let t = (level - a.mean_throughput) / (b.mean_throughput - a.mean_throughput);
        Some(a.snr_db + t * (b.snr_db - a.snr_db))
    })
}

/// Horizontal gap `snr_scalar − snr_diagonal` at a throughput level.
pub fn horizontal_gap(diagonal: &[CurvePoint], scalar: &[CurvePoint], level: f64) -> Option<f64> {
    Some(snr_at_throughput(scalar, level)? - snr_at_throughput(diagonal, level)?)
}

/// Diagonal amplification versus a single scalar weight on the same channels
/// and the first selected condensed set.
pub fn run_baseline_comparison(config: &ExperimentConfig) -> Result<BaselineReport> {
    config.validate()?;
    let sets = config.selected_sets()?;
    let (set_index, set) = sets[0].clone();
    let (derangements, _) = used_derangements(config.n, &[(set_index, set.clone())])?;
    let ensemble = ensemble_sigmas(config, &config.solver, &derangements)?;
    let resampled = ensemble.iter().map(|r| r.resamples).sum();
    let base = config.metric.log_base;

    // scalar[r][s] = (shared-slot fair throughput, mean per-station throughput).
    let scalar: Vec<Vec<(f64, f64)>> = (0..config.realizations)
        .into_par_iter()
        .map(|index| -> Result<Vec<(f64, f64)>> {
            let draw = generate_channel(config, index)?;
            config
                .snr_grid_db
                .iter()
                .map(|&snr| {
                    let noise = noise_variance(snr);
                    let ch = ChannelRealization::new(draw.h_up.clone(), draw.h_down.clone(), noise, noise, RELAY_POWER)?;
                    let mut per_station = vec![Vec::with_capacity(set.len()); config.n];
                    for d in set.derangements() {
                        let sb = scalar_baseline(&ch, d)?;
                        for (rates, &v) in per_station.iter_mut().zip(&sb.per_station_noise) {
                            rates.push(link_rate_in_base(v, base));
                        }
                    }
                    Ok((
                        shared_slot_fair_throughput(&per_station),
                        per_station_fair_throughput(&per_station).1,
                    ))
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Realization {
                    index,
                    stage: "scalar baseline",
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;

    let scale = config.metric.reported(1.0);
    let point = |snr_db: f64, m: &Moments| CurvePoint {
        snr_db,
        mean_throughput: scale * m.mean(),
        std_err: scale * m.std_err(),
    };
    let mut diagonal_curve = Vec::new();
    let mut scalar_curve = Vec::new();
    let mut per_station_curve = Vec::new();
    for (s, &snr) in config.snr_grid_db.iter().enumerate() {
        let mut d = Moments::default();
        let mut shared = Moments::default();
        let mut mean = Moments::default();
        for (real, sca) in ensemble.iter().zip(&scalar) {
            let rates: Vec<f64> = real.sigmas[s].iter().map(|&v| link_rate_in_base(v, base)).collect();
            d.push(fair_throughput(&rates));
            shared.push(sca[s].0);
            mean.push(sca[s].1);
        }
        diagonal_curve.push(point(snr, &d));
        scalar_curve.push(point(snr, &shared));
        per_station_curve.push(point(snr, &mean));
    }
    let (lo, hi) = diagonal_curve
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.mean_throughput), hi.max(p.mean_throughput))
        });
    let gaps_against = |other: &[CurvePoint]| -> Vec<GapPoint> {
        [0.25, 0.5, 0.75]
            .iter()
            .filter_map(|f| {
                let level = lo + f * (hi - lo);
                horizontal_gap(&diagonal_curve, other, level).map(|gap_db| GapPoint {
                    throughput: level,
                    gap_db,
                })
            })
            .collect()
    };
    let gaps = gaps_against(&scalar_curve);
    let per_station_gaps = gaps_against(&per_station_curve);
    let mid = 0.5 * (lo + hi);
    let mid_curve_gap_db = horizontal_gap(&diagonal_curve, &scalar_curve, mid);
    let per_station_mid_curve_gap_db = horizontal_gap(&diagonal_curve, &per_station_curve, mid);
    Ok(BaselineReport {
        metadata: ReportMetadata::new(config, resampled),
        set_index,
        diagonal: diagonal_curve,
        scalar: scalar_curve,
        scalar_per_station: per_station_curve,
        gaps,
        mid_curve_gap_db,
        per_station_gaps,
        per_station_mid_curve_gap_db,
    })
}

pub const CSV_HEADER: &str = "arm,set_index,snr_db,mean_throughput,std_err,realizations,L,M,seed";

struct CsvRows(String);

impl CsvRows {
    fn new() -> Self {
        Self(format!("{CSV_HEADER}\n"))
    }

    fn push(&mut self, arm: &str, set_index: usize, snr_db: f64, mean: f64, se: f64, c: &ExperimentConfig) {
        use std::fmt::Write;
        let _ = writeln!(
            self.0,
            "{arm},{set_index},{snr_db},{mean:.12},{se:.12},{},{},{},{}",
            c.realizations, c.solver.trials, c.solver.phase_bins, c.master_seed
        );
    }

    fn finish(self) -> String {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, realizations: usize) -> ExperimentConfig {
        ExperimentConfig {
            n,
            realizations,
            snr_grid_db: vec![0.0, 10.0, 20.0],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn reciprocal_channels_are_transposes() {
        let cfg = small(4, 3);
        let draw = generate_channel(&cfg, 2).unwrap();
        assert_eq!(draw.h_down, draw.h_up.transpose());
        let (ch, _) = generate_realization(&cfg, 10.0, 2).unwrap();
        assert_eq!(ch.h_up(), &draw.h_up);
        assert!((ch.station_noise_var() - 0.1).abs() < 1e-15);
        assert_eq!(ch.relay_noise_var(), ch.station_noise_var());
        assert_eq!(ch.relay_power(), 1.0);

        let mut nonrecip = cfg.clone();
        nonrecip.reciprocal = false;
        let d2 = generate_channel(&nonrecip, 2).unwrap();
        assert_ne!(d2.h_down, d2.h_up.transpose());
    }

    #[test]
    fn realizations_are_deterministic() {
        let cfg = small(5, 3);
        assert_eq!(generate_channel(&cfg, 1).unwrap().h_up, generate_channel(&cfg, 1).unwrap().h_up);
        assert_ne!(generate_channel(&cfg, 1).unwrap().h_up, generate_channel(&cfg, 2).unwrap().h_up);
    }

    #[test]
    fn config_text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text("n = 5 # five stations\nsnr_grid = 0, 10\nL = 3\nM=4\nsets = 2,7\nhalf_duplex = true\n")
            .unwrap();
        assert_eq!(cfg.n, 5);
        assert_eq!(cfg.snr_grid_db, vec![0.0, 10.0]);
        assert_eq!((cfg.solver.trials, cfg.solver.phase_bins), (3, 4));
        assert_eq!(cfg.set_selection, SetSelection::Indices(vec![2, 7]));
        let mut back = ExperimentConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.clone().apply_text("bogus = 1").is_err());
        assert!(cfg.clone().apply_text("n 4").is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = small(4, 0);
        assert!(run_fair_switching(&cfg).is_err());
        cfg.realizations = 1;
        cfg.snr_grid_db.clear();
        assert!(run_fair_switching(&cfg).is_err());
        let mut cfg = small(4, 1);
        cfg.set_selection = SetSelection::Indices(vec![5]);
        assert!(run_fair_switching(&cfg).is_err());
        assert!(run_lm_saturation(&small(4, 1), &[]).is_err());
    }

    #[test]
    fn identity_ensemble_is_flat() {
        let mut cfg = small(4, 2);
        cfg.channel_model = ChannelModel::Identity;
        let report = run_fair_switching(&cfg).unwrap();
        for p in &report.spread {
            assert!(p.spread < 1e-12);
        }
        let lm = run_lm_saturation(&cfg, &[(1, 1), (10, 8)]).unwrap();
        for p in lm.points.iter().filter_map(|p| p.gain_vs_previous) {
            assert!(p.abs() < 1e-12);
        }
        let base = run_baseline_comparison(&cfg).unwrap();
        for ((d, s), m) in base.diagonal.iter().zip(&base.scalar).zip(&base.scalar_per_station) {
            assert!((d.mean_throughput - s.mean_throughput).abs() < 1e-9 * d.mean_throughput);
            assert!((d.mean_throughput - m.mean_throughput).abs() < 1e-9 * d.mean_throughput);
        }
    }

    #[test]
    fn half_duplex_halves_reported_values() {
        let mut cfg = small(3, 4);
        let full = run_fair_switching(&cfg).unwrap();
        cfg.metric.half_duplex = true;
        let half = run_fair_switching(&cfg).unwrap();
        for (a, b) in full.sets.iter().zip(&half.sets) {
            assert_eq!(a.raw_mean_throughput, b.raw_mean_throughput);
            assert!((b.mean_throughput - 0.5 * a.mean_throughput).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_layout() {
        let report = run_fair_switching(&small(3, 2)).unwrap();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 9);
        assert_eq!(&first[..3], &["diagonal", "1", "0"]);
        assert_eq!(&first[5..], &["2", "10", "8", "1"]);
    }

    #[test]
    fn interpolated_gap() {
        let curve = |pts: &[(f64, f64)]| -> Vec<CurvePoint> {
            pts.iter()
                .map(|&(s, t)| CurvePoint { snr_db: s, mean_throughput: t, std_err: 0.0 })
                .collect()
        };
        let d = curve(&[(0.0, 1.0), (10.0, 3.0)]);
        let s = curve(&[(0.0, 0.8), (10.0, 2.8)]);
        assert!((snr_at_throughput(&d, 2.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((horizontal_gap(&d, &s, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(snr_at_throughput(&d, 5.0).is_none());
    }

    #[test]
    fn spread_statistic() {
        assert_eq!(relative_spread(&[1.0, 1.0]), 0.0);
        assert!((relative_spread(&[0.9, 1.0, 1.1]) - 0.1).abs() < 1e-12);
    }
}
