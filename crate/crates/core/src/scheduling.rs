//! Link rates, fair-switching slot weights and traffic-demand realization.

use std::collections::BTreeMap;
use std::fmt;

use crate::combinatorics::{CondensedSet, Derangement};
use crate::error::{Error, Result};

/// Shannon rate in bits per channel use: `log₂(1 + 1/σ_e²)`.
pub fn link_rate(sigma_e_sq: f64) -> f64 {
    (1.0 / sigma_e_sq).ln_1p() / std::f64::consts::LN_2
}

/// Shannon rate with an arbitrary logarithm base.
pub fn link_rate_in_base(sigma_e_sq: f64, base: f64) -> f64 {
    (1.0 / sigma_e_sq).ln_1p() / base.ln()
}

/// Per-station throughput when every ordered pair gets equal traffic:
/// `(N−1) / Σ_n 1/r_n` over the `N−1` derangements of a condensed set.
pub fn fair_throughput(rates: &[f64]) -> f64 {
    let inv: f64 = rates.iter().map(|r| 1.0 / r).sum();
    rates.len() as f64 / inv
}

/// Slots per derangement so that each delivers `c` units: `k_n = c / r_n`.
pub fn slot_weights(rates: &[f64], c: f64) -> Vec<f64> {
    rates.iter().map(|r| c / r).collect()
}

/// Smallest integer slot counts proportional to `1/r_n`.
///
/// Searches multipliers `t = 1..=max_round` for the first one that brings
/// every scaled weight within `tolerance` (relative) of an integer. Returns
/// `None` when the weights are not rational enough for `max_round`.
pub fn integer_slot_weights(rates: &[f64], tolerance: f64, max_round: u64) -> Option<Vec<u64>> {
    let inv: Vec<f64> = rates.iter().map(|r| 1.0 / r).collect();
    let smallest = inv.iter().copied().fold(f64::INFINITY, f64::min);
    let base: Vec<f64> = inv.iter().map(|w| w / smallest).collect();
    (1..=max_round).find_map(|t| {
        let scaled: Vec<f64> = base.iter().map(|w| w * t as f64).collect();
        scaled
            .iter()
            .all(|w| (w - w.round()).abs() <= tolerance * w)
            .then(|| scaled.iter().map(|w| w.round() as u64).collect())
    })
}

/// Per-station fair throughput for a scheme whose rates differ by station.
///
/// `per_station_rates[j][n]` is station j's rate under derangement n.
/// Returns each station's `(N−1)/Σ_n 1/r_{j,n}` and their mean.
pub fn per_station_fair_throughput(per_station_rates: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let each: Vec<f64> = per_station_rates.iter().map(|r| fair_throughput(r)).collect();
    let mean = each.iter().sum::<f64>() / each.len() as f64;
    (each, mean)
}

/// Fair throughput when stations share slots but their rates differ.
///
/// Every link active under derangement n must carry `c` units, so that
/// derangement needs `c / min_j r_{j,n}` slots; the result is
/// `(N−1) / Σ_n 1/min_j r_{j,n}`. Layout as in [`per_station_fair_throughput`].
pub fn shared_slot_fair_throughput(per_station_rates: &[Vec<f64>]) -> f64 {
    let slots = per_station_rates.first().map_or(0, Vec::len);
    let bottlenecks: Vec<f64> = (0..slots)
        .map(|n| {
            per_station_rates
                .iter()
                .map(|r| r[n])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    fair_throughput(&bottlenecks)
}

/// Rates achieved on each derangement of a condensed set.
#[derive(Debug, Clone)]
pub struct RateProfile {
    pub set: CondensedSet,
    pub rates: Vec<f64>,
    /// Station-by-derangement rates when stations are not equalized.
    pub per_station_rates: Option<Vec<Vec<f64>>>,
}

impl RateProfile {
    pub fn new(set: CondensedSet, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != set.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rates for a set of {} derangements",
                rates.len(),
                set.len()
            )));
        }
        if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidConfig(format!("rate {r} is not positive and finite")));
        }
        Ok(Self {
            set,
            rates,
            per_station_rates: None,
        })
    }

    pub fn fair_throughput(&self) -> f64 {
        fair_throughput(&self.rates)
    }

    pub fn schedule(&self, traffic_per_pair: f64) -> Schedule {
        Schedule {
            weights: slot_weights(&self.rates, traffic_per_pair),
            traffic_per_pair,
        }
    }
}

/// Weighted round-robin over a condensed set.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub weights: Vec<f64>,
    pub traffic_per_pair: f64,
}

impl Schedule {
    pub fn round_length(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Traffic each station sends per slot, `(N−1) c / Σ k_n`.
    pub fn throughput(&self) -> f64 {
        self.weights.len() as f64 * self.traffic_per_pair / self.round_length()
    }
}

/// Which stream each ordered (source, destination) pair carries.
///
/// Repeating a label across destinations of one source expresses multicast
/// or broadcast.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficDemand {
    n: usize,
    streams: BTreeMap<(usize, usize), String>,
}

impl TrafficDemand {
    /// `streams` is keyed by 0-indexed `(source, destination)`.
    pub fn new(n: usize, streams: BTreeMap<(usize, usize), String>) -> Result<Self> {
        for &(i, j) in streams.keys() {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidConfig(format!(
                    "pair ({}, {}) is not an ordered pair of distinct stations in 1..={n}",
                    i + 1,
                    j + 1
                )));
            }
        }
        let expected = n * n.saturating_sub(1);
        if streams.len() != expected {
            let missing = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .find(|&(i, j)| i != j && !streams.contains_key(&(i, j)));
            if let Some((i, j)) = missing {
                return Err(Error::InvalidConfig(format!(
                    "pair ({}, {}) has no stream label",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(Self { n, streams })
    }

    /// Every source sends a distinct stream to every destination.
    pub fn unicast(n: usize) -> Self {
        let streams = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| ((i, j), format!("s{}d{}", i + 1, j + 1))))
            .collect();
        Self { n, streams }
    }

    /// Every source broadcasts a single stream.
    pub fn broadcast(n: usize) -> Self {
        let streams = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| ((i, j), format!("b{}", i + 1))))
            .collect();
        Self { n, streams }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self, source: usize, destination: usize) -> &str {
        &self.streams[&(source, destination)]
    }

    /// Number of distinct streams station `source` originates.
    pub fn distinct_streams(&self, source: usize) -> usize {
        let mut labels: Vec<&str> = (0..self.n)
            .filter(|&j| j != source)
            .map(|j| self.label(source, j))
            .collect();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    }

    /// Parses `n=<N>` followed by `i j label` lines (1-indexed). Lines
    /// starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut n = None;
        let mut streams = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if n.is_none() {
                let value = line
                    .strip_prefix("n=")
                    .ok_or_else(|| err(format!("expected header `n=<N>`, found {line:?}")))?;
                n = Some(
                    value
                        .trim()
                        .parse::<usize>()
                        .map_err(|e| err(format!("bad station count: {e}")))?,
                );
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [i, j, label] = fields[..] else {
                return Err(err(format!("expected `i j label`, found {line:?}")));
            };
            let parse_station = |s: &str| -> Result<usize> {
                match s.parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v - 1),
                    _ => Err(err(format!("bad station {s:?}"))),
                }
            };
            let key = (parse_station(i)?, parse_station(j)?);
            if streams.insert(key, label.to_string()).is_some() {
                return Err(err(format!("pair ({i}, {j}) listed twice")));
            }
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            message: "missing `n=<N>` header".into(),
        })?;
        Self::new(n, streams)
    }
}

impl fmt::Display for TrafficDemand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n={}", self.n)?;
        for (&(i, j), label) in &self.streams {
            writeln!(f, "{} {} {}", i + 1, j + 1, label)?;
        }
        Ok(())
    }
}

/// One slot of a realized demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub derangement: Derangement,
    /// `tx[i]` is the stream station `i` transmits in this slot.
    pub tx: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotAssignment {
    pub slots: Vec<Slot>,
}

impl SlotAssignment {
    /// How many times each ordered pair `(source, destination)` is served.
    pub fn pair_service_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut counts = BTreeMap::new();
        for slot in &self.slots {
            for (j, &i) in slot.derangement.recv_from().iter().enumerate() {
                *counts.entry((i, j)).or_insert(0) += 1;
            }
        }
        counts
    }
}

impl fmt::Display for SlotAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, slot) in self.slots.iter().enumerate() {
            writeln!(
                f,
                "slot={} derangement={} tx={}",
                k + 1,
                slot.derangement,
                slot.tx.join(",")
            )?;
        }
        Ok(())
    }
}

/// One slot per derangement; in each, station `i` sends the stream it owes
/// the station the derangement connects it to.
pub fn realize_demand(demand: &TrafficDemand, set: &[Derangement]) -> Result<SlotAssignment> {
    if let Some(d) = set.iter().find(|d| d.n() != demand.n()) {
        return Err(Error::DimensionMismatch(format!(
            "demand has {} stations but derangement {d} has {}",
            demand.n(),
            d.n()
        )));
    }
    let slots = set
        .iter()
        .map(|d| {
            let dest = d.destinations();
            Slot {
                derangement: d.clone(),
                tx: (0..demand.n())
                    .map(|i| demand.label(i, dest[i]).to_string())
                    .collect(),
            }
        })
        .collect();
    Ok(SlotAssignment { slots })
}

/// [`realize_demand`] over a validated condensed set.
pub fn realize_demand_over(demand: &TrafficDemand, set: &CondensedSet) -> Result<SlotAssignment> {
    realize_demand(demand, set.derangements())
}
