//! Zero-forcing amplify-and-forward beamformers that realize a permutation.
//!
//! The relay applies `G = H_d⁻¹ A P H_u⁻¹`, so the end-to-end channel is the
//! scaled switch matrix `A P`. The diagonal amplification `A` is chosen so
//! every station sees the same effective noise `σ_e²` while the relay spends
//! exactly its power budget `p`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::Permutation;
use crate::error::{Error, Result};
use crate::numerics::{invert, ComplexMatrix, RngStream, C64};

/// One slot's channel state: uplink/downlink gains, noise powers and the
/// relay power budget. Station transmit power is normalized to one.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    h_up: ComplexMatrix,
    h_down: ComplexMatrix,
    h_up_inv: ComplexMatrix,
    h_down_inv: ComplexMatrix,
    condition: f64,
    relay_noise_var: f64,
    station_noise_var: f64,
    relay_power: f64,
}

impl ChannelRealization {
    pub fn new(
        h_up: ComplexMatrix,
        h_down: ComplexMatrix,
        relay_noise_var: f64,
        station_noise_var: f64,
        relay_power: f64,
    ) -> Result<Self> {
        let n = h_up.rows();
        if !h_up.is_square() || h_down.rows() != n || h_down.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "uplink {}x{} and downlink {}x{} must both be square of the same size",
                h_up.rows(),
                h_up.cols(),
                h_down.rows(),
                h_down.cols()
            )));
        }
        if !(relay_noise_var >= 0.0 && relay_noise_var.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "relay noise variance must be finite and >= 0, got {relay_noise_var}"
            )));
        }
        if !(station_noise_var > 0.0 && station_noise_var.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "station noise variance must be finite and > 0, got {station_noise_var}"
            )));
        }
        if !(relay_power > 0.0 && relay_power.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "relay power must be finite and > 0, got {relay_power}"
            )));
        }
        let up = invert(&h_up)?;
        let down = invert(&h_down)?;
        Ok(Self {
            h_up,
            h_down,
            h_up_inv: up.matrix,
            h_down_inv: down.matrix,
            condition: up.condition.max(down.condition),
            relay_noise_var,
            station_noise_var,
            relay_power,
        })
    }

    /// Identity uplink and downlink; the closed-form test case.
    pub fn identity(
        n: usize,
        relay_noise_var: f64,
        station_noise_var: f64,
        relay_power: f64,
    ) -> Result<Self> {
        Self::new(
            ComplexMatrix::identity(n),
            ComplexMatrix::identity(n),
            relay_noise_var,
            station_noise_var,
            relay_power,
        )
    }

    pub fn n(&self) -> usize {
        self.h_up.rows()
    }

    pub fn h_up(&self) -> &ComplexMatrix {
        &self.h_up
    }

    pub fn h_down(&self) -> &ComplexMatrix {
        &self.h_down
    }

    pub fn h_up_inv(&self) -> &ComplexMatrix {
        &self.h_up_inv
    }

    pub fn h_down_inv(&self) -> &ComplexMatrix {
        &self.h_down_inv
    }

    /// Worse of the two 1-norm condition numbers.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn relay_noise_var(&self) -> f64 {
        self.relay_noise_var
    }

    pub fn station_noise_var(&self) -> f64 {
        self.station_noise_var
    }

    pub fn relay_power(&self) -> f64 {
        self.relay_power
    }

    /// Same matrices with different noise powers and budget.
    pub fn with_noise(&self, relay_noise_var: f64, station_noise_var: f64, relay_power: f64) -> Result<Self> {
        let mut out = self.clone();
        out.relay_noise_var = relay_noise_var;
        out.station_noise_var = station_noise_var;
        out.relay_power = relay_power;
        if !(relay_noise_var >= 0.0 && station_noise_var > 0.0 && relay_power > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "invalid noise/power triple ({relay_noise_var}, {station_noise_var}, {relay_power})"
            )));
        }
        Ok(out)
    }

    fn check_perm(&self, perm: &Permutation) -> Result<()> {
        if perm.n() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "permutation on {} stations for a {}-station channel",
                perm.n(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// Parameters of the random-phase search and its root finder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Number of random phase assignments tried (L).
    pub trials: usize,
    /// Number of equally spaced phase values in `[0, 2π)` (M).
    pub phase_bins: usize,
    /// Bisection stops once the bracket is this small relative to its
    /// distance from the noise floor.
    pub root_tolerance: f64,
    pub max_iterations: usize,
    /// Geometric growth of the bracket scan.
    pub bracket_scan_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            trials: 10,
            phase_bins: 8,
            root_tolerance: 1e-12,
            max_iterations: 200,
            bracket_scan_factor: 1.05,
        }
    }
}

impl SolverConfig {
    pub fn with_trials(trials: usize, phase_bins: usize) -> Self {
        Self {
            trials,
            phase_bins,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.phase_bins == 0 {
            return Err(Error::InvalidConfig(format!(
                "trials and phase bins must be >= 1 (got L={}, M={})",
                self.trials, self.phase_bins
            )));
        }
        if !(self.root_tolerance > 0.0) {
            return Err(Error::InvalidConfig("root tolerance must be > 0".into()));
        }
        if !(self.bracket_scan_factor > 1.0) {
            return Err(Error::InvalidConfig("bracket scan factor must be > 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Upper limit on geometric bracket-scan steps before giving up.
pub const MAX_SCAN_STEPS: usize = 1000;

/// Phase-independent quantities of the power equation for one
/// (channel, permutation) pair.
///
/// With `X = H_d⁻¹` and `Y = P H_u⁻¹` the relay power is
/// `Σ_j D_j |a_j|² + σ_r² ‖X diag(a) Y‖_F²`, where `D_j` is the squared norm of
/// column `j` of `X`, and the second term is the Hermitian form `aᴴ K a` with
/// `K_jl = (XᴴX)_jl (YYᴴ)_lj`.
#[derive(Debug, Clone)]
pub struct PowerEquation {
    n: usize,
    floors: Vec<f64>,
    column_norms: Vec<f64>,
    cross: Vec<C64>,
    relay_noise_var: f64,
    station_noise_var: f64,
    relay_power: f64,
}

impl PowerEquation {
    pub fn new(channel: &ChannelRealization, perm: &Permutation) -> Result<Self> {
        channel.check_perm(perm)?;
        let n = channel.n();
        let x = channel.h_down_inv();
        let y = channel.h_up_inv().select_rows(perm.recv_from());
        let xhx = &x.conj_transpose() * x;
        let yyh = &y * &y.conj_transpose();
        let sr = channel.relay_noise_var();
        let floors = (0..n)
            .map(|j| sr * y.row(j).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .collect();
        let column_norms = (0..n).map(|j| xhx[(j, j)].re).collect();
        let mut cross = Vec::with_capacity(n * n);
        for j in 0..n {
            for l in 0..n {
                cross.push(xhx[(j, l)] * yyh[(l, j)]);
            }
        }
        Ok(Self {
            n,
            floors,
            column_norms,
            cross,
            relay_noise_var: sr,
            station_noise_var: channel.station_noise_var(),
            relay_power: channel.relay_power(),
        })
    }

    /// Per-station relay-noise floors `σ_r² Σ_k |(P H_u⁻¹)_jk|²`.
    pub fn floors(&self) -> &[f64] {
        &self.floors
    }

    /// The pole of the power equation: `σ_e²` must exceed this.
    pub fn pole(&self) -> f64 {
        self.floors.iter().copied().fold(0.0, f64::max)
    }

    /// `|a_j|` from equalized effective noise.
    pub fn amplitudes(&self, sigma_e_sq: f64) -> Result<Vec<f64>> {
        self.floors
            .iter()
            .map(|&floor| {
                let gap = sigma_e_sq - floor;
                if gap > 0.0 && gap.is_finite() {
                    Ok((self.station_noise_var / gap).sqrt())
                } else {
                    Err(Error::InfeasibleNoiseTarget {
                        sigma_e_sq,
                        floor: self.pole(),
                    })
                }
            })
            .collect()
    }

    /// Relay power for an arbitrary amplification vector.
    pub fn power_for_amplification(&self, a: &[C64]) -> f64 {
        let n = self.n;
        let forward: f64 = (0..n).map(|j| self.column_norms[j] * a[j].norm_sqr()).sum();
        let mut form = C64::new(0.0, 0.0);
        for j in 0..n {
            let row = &self.cross[j * n..(j + 1) * n];
            let inner: C64 = row.iter().zip(a).map(|(k, al)| k * al).sum();
            form += a[j].conj() * inner;
        }
        forward + self.relay_noise_var * form.re
    }

    /// Real symmetric form for fixed phases: `Re(conj(e_j) e_l K_jl)`.
    fn phased_form(&self, phases: &[f64]) -> Vec<f64> {
        let n = self.n;
        let units: Vec<C64> = phases.iter().map(|&t| C64::from_polar(1.0, t)).collect();
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for l in 0..n {
                out.push((units[j].conj() * units[l] * self.cross[j * n + l]).re);
            }
        }
        out
    }

    /// `q` as a function of the offset `δ = σ_e² - pole`, for a precomputed
    /// phased form.
    fn power_at_offset(&self, form: &[f64], pole: f64, offset: f64, scratch: &mut [f64]) -> f64 {
        let n = self.n;
        let mut forward = 0.0;
        for j in 0..n {
            let gap = offset + (pole - self.floors[j]);
            let s = (self.station_noise_var / gap).sqrt();
            scratch[j] = s;
            forward += self.column_norms[j] * s * s;
        }
        let mut quad = 0.0;
        for j in 0..n {
            let row = &form[j * n..(j + 1) * n];
            let inner: f64 = row.iter().zip(scratch.iter()).map(|(k, s)| k * s).sum();
            quad += scratch[j] * inner;
        }
        forward + self.relay_noise_var * quad
    }

    /// Root of the forwarding-power term alone, as an offset above the pole.
    ///
    /// The relayed-noise term is non-negative, so `q > p` everywhere below
    /// this offset and the smallest root of `q = p` cannot lie there.
    fn forward_only_offset(&self, pole: f64) -> f64 {
        let p = self.relay_power;
        let s2 = self.station_noise_var;
        let forward = |offset: f64| -> f64 {
            (0..self.n)
                .map(|j| self.column_norms[j] * s2 / (offset + (pole - self.floors[j])))
                .sum()
        };
        let total: f64 = self.column_norms.iter().sum();
        let worst = self
            .floors
            .iter()
            .zip(&self.column_norms)
            .filter(|(f, _)| **f == pole)
            .map(|(_, d)| *d)
            .fold(0.0, f64::max);
        let mut hi = s2 * total / p;
        let mut lo = (s2 * worst / p).min(hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if forward(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Smallest `σ_e²` with `q(σ_e²) = p` for the given phases.
    pub fn solve(&self, phases: &[f64], config: &SolverConfig) -> Result<f64> {
        assert_eq!(phases.len(), self.n);
        let p = self.relay_power;
        let pole = self.pole();
        let form = self.phased_form(phases);
        let mut scratch = vec![0.0; self.n];
        let mut q = |offset: f64| self.power_at_offset(&form, pole, offset, &mut scratch);

        let start = self.forward_only_offset(pole).max(pole * 1e-12);
        let mut lo = start * 0.5;
        let mut hi = start;
        let mut steps = 0;
        while q(hi) > p {
            lo = hi;
            hi *= config.bracket_scan_factor;
            steps += 1;
            if steps > MAX_SCAN_STEPS || !hi.is_finite() {
                return Err(Error::NoRoot { steps });
            }
        }
        for _ in 0..config.max_iterations {
            if hi - lo <= config.root_tolerance * lo {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if q(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(pole + 0.5 * (lo + hi))
    }
}

/// `|a_j|` from `σ_e² = σ_r² Σ_k |h⁻¹_{u,(i_j,k)}|² + σ²/|a_j|²`.
pub fn amplitude_from_sigma_e(
    sigma_e_sq: f64,
    channel: &ChannelRealization,
    perm: &Permutation,
) -> Result<Vec<f64>> {
    PowerEquation::new(channel, perm)?.amplitudes(sigma_e_sq)
}

/// Relay power spent when every station's effective noise is `sigma_e_sq`
/// and the amplification phases are `phases`.
///
/// Evaluates the expanded expression term by term from the channel inverses;
/// [`PowerEquation`] is the faster equivalent used inside the solver.
pub fn relay_power(
    sigma_e_sq: f64,
    phases: &[f64],
    channel: &ChannelRealization,
    perm: &Permutation,
) -> Result<f64> {
    channel.check_perm(perm)?;
    let n = channel.n();
    if phases.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} phases for {n} stations",
            phases.len()
        )));
    }
    let hd = channel.h_down_inv();
    let hu = channel.h_up_inv();
    let sr = channel.relay_noise_var();
    let sigma = channel.station_noise_var().sqrt();
    let recv = perm.recv_from();
    let mut gaps = Vec::with_capacity(n);
    for &src in recv {
        let floor = sr * hu.row(src).iter().map(|z| z.norm_sqr()).sum::<f64>();
        let gap = sigma_e_sq - floor;
        if !(gap > 0.0) {
            return Err(Error::InfeasibleNoiseTarget {
                sigma_e_sq,
                floor,
            });
        }
        gaps.push(gap);
    }
    let mut forward = 0.0;
    for i in 0..n {
        for j in 0..n {
            forward += hd[(i, j)].norm_sqr() * sigma * sigma / gaps[j];
        }
    }
    let mut relayed = 0.0;
    for i in 0..n {
        for k in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += hd[(i, j)] * hu[(recv[j], k)] * C64::from_polar(sigma, phases[j])
                    / gaps[j].sqrt();
            }
            relayed += acc.norm_sqr();
        }
    }
    Ok(forward + sr * relayed)
}

/// Smallest `σ_e²` meeting the relay budget with equality, for fixed phases.
///
/// Scans upward from the pole in geometric steps until `q` drops to `p` and
/// bisects inside that first bracket.
pub fn solve_sigma_e(
    phases: &[f64],
    channel: &ChannelRealization,
    perm: &Permutation,
    config: &SolverConfig,
) -> Result<f64> {
    config.validate()?;
    if phases.len() != channel.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} phases for {} stations",
            phases.len(),
            channel.n()
        )));
    }
    PowerEquation::new(channel, perm)?.solve(phases, config)
}

/// A relay beamformer realizing `perm` with equalized effective noise.
#[derive(Debug, Clone)]
pub struct Beamformer {
    pub perm: Permutation,
    pub amp_magnitudes: Vec<f64>,
    pub amp_phases: Vec<f64>,
    pub g: ComplexMatrix,
    pub sigma_e_sq: f64,
    pub relay_power_used: f64,
}

impl Beamformer {
    /// Builds `G = H_d⁻¹ A P H_u⁻¹` for the given amplification.
    pub fn from_amplification(
        channel: &ChannelRealization,
        perm: &Permutation,
        magnitudes: Vec<f64>,
        phases: Vec<f64>,
        sigma_e_sq: f64,
    ) -> Self {
        let a: Vec<C64> = magnitudes
            .iter()
            .zip(&phases)
            .map(|(&m, &t)| C64::from_polar(m, t))
            .collect();
        let g = zero_forcing_matrix(channel, perm, &a);
        let relay_power_used = trace_power(&g, channel);
        Self {
            perm: perm.clone(),
            amp_magnitudes: magnitudes,
            amp_phases: phases,
            g,
            sigma_e_sq,
            relay_power_used,
        }
    }

    pub fn amplification(&self) -> Vec<C64> {
        self.amp_magnitudes
            .iter()
            .zip(&self.amp_phases)
            .map(|(&m, &t)| C64::from_polar(m, t))
            .collect()
    }

    /// `‖H_d G H_u − A P‖_F / ‖A P‖_F`.
    pub fn channel_residual(&self, channel: &ChannelRealization) -> f64 {
        channel_residual(&self.g, &self.amplification(), &self.perm, channel)
    }

    /// Effective noise at each station computed from `G` itself.
    pub fn per_station_noise(&self, channel: &ChannelRealization) -> Vec<f64> {
        noise_from_g(&self.g, &self.amplification(), channel)
    }
}

/// `G = H_d⁻¹ diag(a) P H_u⁻¹`.
pub fn zero_forcing_matrix(channel: &ChannelRealization, perm: &Permutation, a: &[C64]) -> ComplexMatrix {
    let y = channel.h_up_inv().select_rows(perm.recv_from()).scale_rows(a);
    channel.h_down_inv() * &y
}

/// Relay transmit power `Tr[H_uᴴ Gᴴ G H_u] + σ_r² Tr[Gᴴ G]`.
pub fn trace_power(g: &ComplexMatrix, channel: &ChannelRealization) -> f64 {
    let gh = g * channel.h_up();
    (&gh.conj_transpose() * &gh).trace().re
        + channel.relay_noise_var() * (&g.conj_transpose() * g).trace().re
}

fn channel_residual(g: &ComplexMatrix, a: &[C64], perm: &Permutation, channel: &ChannelRealization) -> f64 {
    let end_to_end = &(channel.h_down() * g) * channel.h_up();
    let target = perm.to_matrix().scale_rows(a);
    (&end_to_end - &target).frobenius_norm() / target.frobenius_norm()
}

fn noise_from_g(g: &ComplexMatrix, a: &[C64], channel: &ChannelRealization) -> Vec<f64> {
    let inv_a: Vec<C64> = a.iter().map(|z| z.inv()).collect();
    let t = (channel.h_down() * g).scale_rows(&inv_a);
    (0..channel.n())
        .map(|j| {
            channel.relay_noise_var() * t.row(j).iter().map(|z| z.norm_sqr()).sum::<f64>()
                + channel.station_noise_var() * inv_a[j].norm_sqr()
        })
        .collect()
}

/// Draws one phase vector from `{0, 2π/M, …, 2π(M−1)/M}`.
pub fn draw_phases(n: usize, bins: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..n)
        .map(|_| 2.0 * PI * rng.random_range(0..bins) as f64 / bins as f64)
        .collect()
}

/// Random-phase algorithm: `L` random quantized phase assignments, each
/// solved for its `σ_e²`, keeping the smallest.
pub fn random_phase_search(
    channel: &ChannelRealization,
    perm: &Permutation,
    config: &SolverConfig,
    rng: &mut RngStream,
) -> Result<Beamformer> {
    let (sigma_e_sq, phases) = best_phases(channel, perm, config, rng)?;
    let eq = PowerEquation::new(channel, perm)?;
    let magnitudes = eq.amplitudes(sigma_e_sq)?;
    Ok(Beamformer::from_amplification(
        channel, perm, magnitudes, phases, sigma_e_sq,
    ))
}

/// The search without building `G`: best `σ_e²` and its phases.
pub fn best_phases(
    channel: &ChannelRealization,
    perm: &Permutation,
    config: &SolverConfig,
    rng: &mut RngStream,
) -> Result<(f64, Vec<f64>)> {
    config.validate()?;
    let eq = PowerEquation::new(channel, perm)?;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..config.trials {
        let phases = draw_phases(channel.n(), config.phase_bins, rng);
        let s = eq.solve(&phases, config)?;
        if best.as_ref().is_none_or(|(b, _)| s < *b) {
            best = Some((s, phases));
        }
    }
    Ok(best.expect("at least one trial"))
}

/// Trace of the best-so-far `σ_e²` after each trial.
pub fn search_trace(
    channel: &ChannelRealization,
    perm: &Permutation,
    config: &SolverConfig,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    config.validate()?;
    let eq = PowerEquation::new(channel, perm)?;
    let mut best = f64::INFINITY;
    (0..config.trials)
        .map(|_| {
            let phases = draw_phases(channel.n(), config.phase_bins, rng);
            best = best.min(eq.solve(&phases, config)?);
            Ok(best)
        })
        .collect()
}

/// Zero-forcing relay with a single positive amplification `A = αI`.
#[derive(Debug, Clone)]
pub struct ScalarBeamformer {
    pub perm: Permutation,
    pub alpha: f64,
    pub g: ComplexMatrix,
    /// Effective noise per station; not equalized.
    pub per_station_noise: Vec<f64>,
    pub relay_power_used: f64,
}

impl ScalarBeamformer {
    pub fn channel_residual(&self, channel: &ChannelRealization) -> f64 {
        let a = vec![C64::new(self.alpha, 0.0); self.perm.n()];
        channel_residual(&self.g, &a, &self.perm, channel)
    }
}

/// Scalar-weight baseline: `α² = p / q(α = 1)` since relay power is
/// quadratic in a common amplification.
pub fn scalar_baseline(channel: &ChannelRealization, perm: &Permutation) -> Result<ScalarBeamformer> {
    let eq = PowerEquation::new(channel, perm)?;
    let n = channel.n();
    let unit = vec![C64::new(1.0, 0.0); n];
    let alpha = (channel.relay_power() / eq.power_for_amplification(&unit)).sqrt();
    let per_station_noise = eq
        .floors()
        .iter()
        .map(|f| f + channel.station_noise_var() / (alpha * alpha))
        .collect();
    let a = vec![C64::new(alpha, 0.0); n];
    let g = zero_forcing_matrix(channel, perm, &a);
    let relay_power_used = trace_power(&g, channel);
    Ok(ScalarBeamformer {
        perm: perm.clone(),
        alpha,
        g,
        per_station_noise,
        relay_power_used,
    })
}

/// Noise powers used when simulating a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseLevels {
    pub relay: f64,
    pub station: f64,
}

/// One slot through the relay with the channel's own noise powers.
///
/// Returns `r̂ = A⁻¹ (H_d G (H_u x + u) + w)`; entry `j` is an unbiased
/// estimate of `x[recv_from[j]]`.
pub fn simulate_slot(
    beamformer: &Beamformer,
    channel: &ChannelRealization,
    x: &[C64],
    rng: &mut RngStream,
) -> Vec<C64> {
    let noise = NoiseLevels {
        relay: channel.relay_noise_var(),
        station: channel.station_noise_var(),
    };
    simulate_slot_with_noise(beamformer, channel, x, noise, rng)
}

pub fn simulate_slot_with_noise(
    beamformer: &Beamformer,
    channel: &ChannelRealization,
    x: &[C64],
    noise: NoiseLevels,
    rng: &mut RngStream,
) -> Vec<C64> {
    let n = channel.n();
    assert_eq!(x.len(), n);
    let mut y = channel.h_up().mul_vec(x);
    if noise.relay > 0.0 {
        for v in y.iter_mut() {
            *v += rng.complex_gaussian(noise.relay);
        }
    }
    let forwarded = beamformer.g.mul_vec(&y);
    let mut r = channel.h_down().mul_vec(&forwarded);
    if noise.station > 0.0 {
        for v in r.iter_mut() {
            *v += rng.complex_gaussian(noise.station);
        }
    }
    r.iter()
        .zip(beamformer.amplification())
        .map(|(v, a)| v / a)
        .collect()
}
