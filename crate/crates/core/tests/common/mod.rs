#![allow(dead_code)]

use mimo_switch::numerics::{ComplexMatrix, RngStream, C64};
use mimo_switch::relay::ChannelRealization;

pub fn gaussian_matrix(n: usize, rng: &mut RngStream) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| rng.complex_gaussian(1.0))
}

/// Reciprocal Rayleigh channel redrawn until both directions are
/// comfortably invertible.
pub fn reciprocal_channel(n: usize, seed: u64, noise: f64, relay_noise: f64, power: f64) -> ChannelRealization {
    let mut rng = RngStream::keyed(seed, &[0x7e57, n as u64]);
    loop {
        let hu = gaussian_matrix(n, &mut rng);
        let hd = hu.transpose();
        if let Ok(ch) = ChannelRealization::new(hu, hd, relay_noise, noise, power) {
            if ch.condition() < 1e3 {
                return ch;
            }
        }
    }
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum::<C64>()
    })
}

pub fn frob_sq(m: &ComplexMatrix) -> f64 {
    m.as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// Relay output power `E‖G y‖²` with `y = H_u x + u`, unit-power `x`.
pub fn oracle_relay_power(g: &ComplexMatrix, h_up: &ComplexMatrix, relay_noise: f64) -> f64 {
    frob_sq(&matmul(g, h_up)) + relay_noise * frob_sq(g)
}

/// Effective noise at station `j` after dividing by `a_j`.
pub fn oracle_station_noise(
    g: &ComplexMatrix,
    h_down: &ComplexMatrix,
    a: &[C64],
    relay_noise: f64,
    station_noise: f64,
) -> Vec<f64> {
    let t = matmul(h_down, g);
    (0..a.len())
        .map(|j| {
            let row: f64 = (0..t.cols()).map(|k| t[(j, k)].norm_sqr()).sum();
            (relay_noise * row + station_noise) / a[j].norm_sqr()
        })
        .collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// All permutations of `0..n` by recursive insertion.
pub fn brute_permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in brute_permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}
