//! Python bindings. Permutations are 0-based receive-from lists:
//! `perm[j]` is the station that station `j` hears.

use mimo_switch::combinatorics::{self, CondensedSet, Derangement, Permutation};
use mimo_switch::experiments::{self, ExperimentConfig};
use mimo_switch::numerics::{ComplexMatrix, RngStream};
use mimo_switch::relay::{self, SolverConfig};
use mimo_switch::scheduling::{self, TrafficDemand};
use mimo_switch::Error;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidPermutation(_)
        | Error::Parse { .. }
        | Error::TooLarge { .. }
        | Error::DimensionMismatch(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn perm(v: Vec<usize>) -> PyResult<Permutation> {
    Permutation::new(v).map_err(py_err)
}

fn matrix(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    ComplexMatrix::from_row_major(n, n, rows.into_iter().flatten().collect()).map_err(py_err)
}

fn to_rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

#[pyfunction]
fn derangement_count(n: usize) -> u128 {
    combinatorics::derangement_count(n)
}

#[pyfunction]
fn enumerate_derangements(n: usize) -> PyResult<Vec<Vec<usize>>> {
    Ok(combinatorics::enumerate_derangements(n)
        .map_err(py_err)?
        .iter()
        .map(|d| d.recv_from().to_vec())
        .collect())
}

#[pyfunction]
fn enumerate_condensed_sets(n: usize) -> PyResult<Vec<Vec<Vec<usize>>>> {
    Ok(combinatorics::enumerate_condensed_sets(n)
        .map_err(py_err)?
        .iter()
        .map(|s| s.derangements().iter().map(|d| d.recv_from().to_vec()).collect())
        .collect())
}

#[pyfunction]
fn count_condensed_sets(n: usize) -> PyResult<u64> {
    combinatorics::count_condensed_sets(n).map_err(py_err)
}

#[pyfunction]
fn is_condensed(set: Vec<Vec<usize>>) -> bool {
    let parsed: Option<Vec<Derangement>> = set.into_iter().map(|v| Derangement::new(v).ok()).collect();
    parsed.is_some_and(|s| combinatorics::is_condensed(&s))
}

#[pyfunction]
fn link_rate(sigma_e_sq: f64) -> f64 {
    scheduling::link_rate(sigma_e_sq)
}

#[pyfunction]
fn fair_throughput(rates: Vec<f64>) -> f64 {
    scheduling::fair_throughput(&rates)
}

#[pyfunction]
#[pyo3(signature = (rates, c = 1.0))]
fn slot_weights(rates: Vec<f64>, c: f64) -> Vec<f64> {
    scheduling::slot_weights(&rates, c)
}

/// Transmissions per slot for a demand file's text over condensed set
/// `set_index` (1-based).
#[pyfunction]
#[pyo3(signature = (demand, set_index = 1))]
fn realize_demand(demand: &str, set_index: usize) -> PyResult<Vec<(Vec<usize>, Vec<String>)>> {
    let demand = TrafficDemand::parse(demand).map_err(py_err)?;
    let sets = combinatorics::enumerate_condensed_sets(demand.n()).map_err(py_err)?;
    let set: &CondensedSet = sets
        .get(set_index.wrapping_sub(1))
        .ok_or_else(|| PyValueError::new_err(format!("set_index must be in 1..={}", sets.len())))?;
    let assignment = scheduling::realize_demand_over(&demand, set).map_err(py_err)?;
    Ok(assignment
        .slots
        .into_iter()
        .map(|s| (s.derangement.recv_from().to_vec(), s.tx))
        .collect())
}

#[pyclass(module = "mimoswitch", frozen)]
struct Channel {
    inner: relay::ChannelRealization,
}

#[pymethods]
impl Channel {
    #[new]
    #[pyo3(signature = (h_up, h_down, relay_noise_var, station_noise_var, relay_power = 1.0))]
    fn new(
        h_up: Vec<Vec<Complex64>>,
        h_down: Vec<Vec<Complex64>>,
        relay_noise_var: f64,
        station_noise_var: f64,
        relay_power: f64,
    ) -> PyResult<Self> {
        let inner = relay::ChannelRealization::new(
            matrix(h_up)?,
            matrix(h_down)?,
            relay_noise_var,
            station_noise_var,
            relay_power,
        )
        .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n, relay_noise_var, station_noise_var, relay_power = 1.0))]
    fn identity(n: usize, relay_noise_var: f64, station_noise_var: f64, relay_power: f64) -> PyResult<Self> {
        let inner = relay::ChannelRealization::identity(n, relay_noise_var, station_noise_var, relay_power)
            .map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Realization `index` of the experiment ensemble at `snr_db`.
    #[staticmethod]
    #[pyo3(signature = (n, snr_db, seed = 1, index = 0))]
    fn rayleigh(n: usize, snr_db: f64, seed: u64, index: usize) -> PyResult<Self> {
        let config = ExperimentConfig {
            n,
            master_seed: seed,
            ..ExperimentConfig::default()
        };
        let (inner, _) = experiments::generate_realization(&config, snr_db, index).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn h_up(&self) -> Vec<Vec<Complex64>> {
        to_rows(self.inner.h_up())
    }

    #[getter]
    fn h_down(&self) -> Vec<Vec<Complex64>> {
        to_rows(self.inner.h_down())
    }

    #[getter]
    fn condition(&self) -> f64 {
        self.inner.condition()
    }
}

#[pyclass(module = "mimoswitch", frozen)]
struct Beamformer {
    inner: relay::Beamformer,
}

#[pymethods]
impl Beamformer {
    #[getter]
    fn perm(&self) -> Vec<usize> {
        self.inner.perm.recv_from().to_vec()
    }

    #[getter]
    fn sigma_e_sq(&self) -> f64 {
        self.inner.sigma_e_sq
    }

    #[getter]
    fn amp_magnitudes(&self) -> Vec<f64> {
        self.inner.amp_magnitudes.clone()
    }

    #[getter]
    fn amp_phases(&self) -> Vec<f64> {
        self.inner.amp_phases.clone()
    }

    #[getter]
    fn relay_power(&self) -> f64 {
        self.inner.relay_power_used
    }

    #[getter]
    fn g(&self) -> Vec<Vec<Complex64>> {
        to_rows(&self.inner.g)
    }

    fn channel_residual(&self, channel: &Channel) -> f64 {
        self.inner.channel_residual(&channel.inner)
    }

    fn per_station_noise(&self, channel: &Channel) -> Vec<f64> {
        self.inner.per_station_noise(&channel.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Beamformer(perm={:?}, sigma_e_sq={:.6e}, relay_power={:.6e})",
            self.inner.perm.recv_from(),
            self.inner.sigma_e_sq,
            self.inner.relay_power_used
        )
    }
}

#[pyfunction]
#[pyo3(signature = (channel, perm, phases))]
fn solve_sigma_e(channel: &Channel, perm: Vec<usize>, phases: Vec<f64>) -> PyResult<f64> {
    relay::solve_sigma_e(&phases, &channel.inner, &self::perm(perm)?, &SolverConfig::default()).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (channel, perm, trials = 10, phase_bins = 8, seed = 0, stream = 0))]
fn random_phase_search(
    channel: &Channel,
    perm: Vec<usize>,
    trials: usize,
    phase_bins: usize,
    seed: u64,
    stream: u64,
) -> PyResult<Beamformer> {
    let mut rng = RngStream::new(seed, stream);
    let inner = relay::random_phase_search(
        &channel.inner,
        &self::perm(perm)?,
        &SolverConfig::with_trials(trials, phase_bins),
        &mut rng,
    )
    .map_err(py_err)?;
    Ok(Beamformer { inner })
}

/// Scalar-weight baseline: `(alpha, per_station_noise)`.
#[pyfunction]
fn scalar_baseline(channel: &Channel, perm: Vec<usize>) -> PyResult<(f64, Vec<f64>)> {
    let sb = relay::scalar_baseline(&channel.inner, &self::perm(perm)?).map_err(py_err)?;
    Ok((sb.alpha, sb.per_station_noise))
}

fn config_from(text: &str) -> PyResult<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    config.apply_text(text).map_err(py_err)?;
    config.validate().map_err(py_err)?;
    Ok(config)
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("report serializes")
}

/// Fair-switching throughput report as JSON. `config` uses the flat
/// `key = value` format of the command-line tool.
#[pyfunction]
#[pyo3(signature = (config = ""))]
fn fair_switching(py: Python<'_>, config: &str) -> PyResult<String> {
    let config = config_from(config)?;
    let report = py.detach(|| experiments::run_fair_switching(&config)).map_err(py_err)?;
    Ok(to_json(&report))
}

#[pyfunction]
#[pyo3(signature = (config = "", grid = vec![(1, 1), (10, 8), (20, 16)]))]
fn lm_saturation(py: Python<'_>, config: &str, grid: Vec<(usize, usize)>) -> PyResult<String> {
    let config = config_from(config)?;
    let report = py.detach(|| experiments::run_lm_saturation(&config, &grid)).map_err(py_err)?;
    Ok(to_json(&report))
}

#[pyfunction]
#[pyo3(signature = (config = ""))]
fn baseline_compare(py: Python<'_>, config: &str) -> PyResult<String> {
    let config = config_from(config)?;
    let report = py.detach(|| experiments::run_baseline_comparison(&config)).map_err(py_err)?;
    Ok(to_json(&report))
}

#[pymodule]
fn mimoswitch(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Channel>()?;
    m.add_class::<Beamformer>()?;
    m.add_function(wrap_pyfunction!(derangement_count, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_derangements, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_condensed_sets, m)?)?;
    m.add_function(wrap_pyfunction!(count_condensed_sets, m)?)?;
    m.add_function(wrap_pyfunction!(is_condensed, m)?)?;
    m.add_function(wrap_pyfunction!(link_rate, m)?)?;
    m.add_function(wrap_pyfunction!(fair_throughput, m)?)?;
    m.add_function(wrap_pyfunction!(slot_weights, m)?)?;
    m.add_function(wrap_pyfunction!(realize_demand, m)?)?;
    m.add_function(wrap_pyfunction!(solve_sigma_e, m)?)?;
    m.add_function(wrap_pyfunction!(random_phase_search, m)?)?;
    m.add_function(wrap_pyfunction!(scalar_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(fair_switching, m)?)?;
    m.add_function(wrap_pyfunction!(lm_saturation, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_compare, m)?)?;
    Ok(())
}
