//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{oracle_relay_power, oracle_station_noise, rel, reciprocal_channel};
use mimo_switch::combinatorics::*;
use mimo_switch::experiments::*;
use mimo_switch::numerics::RngStream;
use mimo_switch::relay::*;
use mimo_switch::scheduling::{realize_demand_over, TrafficDemand};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn c1_counts() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for n in 1..=8 {
        let brute: BTreeSet<Vec<usize>> = common::brute_permutations(n)
            .into_iter()
            .filter(|p| p.iter().enumerate().all(|(j, &i)| i != j))
            .collect();
        let fast: BTreeSet<Vec<usize>> = enumerate_derangements(n)
            .unwrap()
            .iter()
            .map(|d| d.recv_from().to_vec())
            .collect();
        if fast != brute || derangement_count(n) != brute.len() as u128 {
            failures.push(format!("n={n}"));
        }
    }
    if derangement_count(4) != 9 || derangement_count(5) != 44 {
        failures.push("d4/d5".into());
    }
    let p = |s: &str| s.parse::<Derangement>().unwrap();
    let listed: BTreeSet<CondensedSet> = [
        ["4 3 2 1", "3 4 1 2", "2 1 4 3"],
        ["4 3 2 1", "3 1 4 2", "2 4 1 3"],
        ["4 3 1 2", "3 4 2 1", "2 1 4 3"],
        ["4 1 2 3", "3 4 1 2", "2 3 4 1"],
    ]
    .iter()
    .map(|s| CondensedSet::new(s.iter().map(|x| p(x)).collect()).unwrap())
    .collect();
    let n4: BTreeSet<CondensedSet> = enumerate_condensed_sets(4).unwrap().into_iter().collect();
    if n4 != listed {
        failures.push("N=4 sets".into());
    }
    let n5 = enumerate_condensed_sets(5).unwrap().len();
    if n5 != 56 {
        failures.push(format!("N=5 has {n5} sets"));
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(10) {
        failures.push(format!("runtime {elapsed:?}"));
    }
    check(
        failures.is_empty(),
        format!("d4=9 d5=44, N<=8 brute force, 4 listed N=4 sets, {n5} N=5 sets, {elapsed:.2?} {failures:?}"),
    )
}

fn c2_beamformers() -> Outcome {
    let start = Instant::now();
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut errors = 0;
    for k in 0..1000u64 {
        let n = if k % 2 == 0 { 4 } else { 5 };
        let mut rng = RngStream::new(2024, k);
        let snr = rng.random_range(0.0..30.0);
        let noise = 10f64.powf(-snr / 10.0);
        let ch = reciprocal_channel(n, 10_000 + k, noise, noise, 1.0);
        let ders = enumerate_derangements(n).unwrap();
        let perm = ders[rng.random_range(0..ders.len())].as_permutation().clone();
        let bf = match random_phase_search(&ch, &perm, &SolverConfig::default(), &mut rng) {
            Ok(bf) => bf,
            Err(_) => {
                errors += 1;
                continue;
            }
        };
        let power = oracle_relay_power(&bf.g, ch.h_up(), ch.relay_noise_var());
        let noise = oracle_station_noise(&bf.g, ch.h_down(), &bf.amplification(), ch.relay_noise_var(), ch.station_noise_var());
        let eq = noise.iter().map(|v| rel(*v, bf.sigma_e_sq)).fold(0.0, f64::max);
        worst.0 = worst.0.max(bf.channel_residual(&ch));
        worst.1 = worst.1.max(rel(power, 1.0));
        worst.2 = worst.2.max(eq);
    }
    let elapsed = start.elapsed();
    check(
        errors == 0 && worst.0 <= 1e-8 && worst.1 <= 1e-6 && worst.2 <= 1e-8 && elapsed < Duration::from_secs(60),
        format!(
            "1000 channels: max residual {:.1e}, max power error {:.1e}, max equalization error {:.1e}, {errors} solver errors, {elapsed:.2?}",
            worst.0, worst.1, worst.2
        ),
    )
}

fn c3_closed_form() -> Outcome {
    let mut worst_diag = 0.0f64;
    let mut worst_scalar = 0.0f64;
    let mut rng = RngStream::new(3, 3);
    for n in 2..=6 {
        for &s in &[1e-3, 0.1, 1.0, 10.0] {
            for &sr in &[0.0, 1e-2, 1.0, 5.0] {
                for &p in &[0.1, 1.0, 10.0] {
                    let expected = sr + n as f64 * s * (1.0 + sr) / p;
                    let ch = ChannelRealization::identity(n, sr, s, p).unwrap();
                    let perm = Permutation::new((0..n).map(|j| (j + n - 1) % n).collect()).unwrap();
                    let phases = draw_phases(n, 8, &mut rng);
                    let got = solve_sigma_e(&phases, &ch, &perm, &SolverConfig::default()).unwrap();
                    worst_diag = worst_diag.max(rel(got, expected));
                    let bf = random_phase_search(&ch, &perm, &SolverConfig::default(), &mut rng).unwrap();
                    let sb = scalar_baseline(&ch, &perm).unwrap();
                    for v in &sb.per_station_noise {
                        worst_scalar = worst_scalar.max(rel(*v, bf.sigma_e_sq));
                    }
                }
            }
        }
    }
    check(
        worst_diag <= 1e-9 && worst_scalar <= 1e-9,
        format!("240 grid points: closed-form error {worst_diag:.1e}, scalar vs diagonal {worst_scalar:.1e}"),
    )
}

fn c4_noise() -> Outcome {
    let draws = 100_000;
    let mut worst = 0.0f64;
    for k in 0..10u64 {
        let ch = reciprocal_channel(4, 500 + k, 0.1, 0.1, 1.0);
        let perm = enumerate_derangements(4).unwrap()[k as usize % 9].as_permutation().clone();
        let mut rng = RngStream::new(4, k);
        let bf = random_phase_search(&ch, &perm, &SolverConfig::default(), &mut rng).unwrap();
        let mut acc = [0.0; 4];
        for _ in 0..draws {
            let x = rng.complex_gaussian_vec(4, 1.0);
            let r = simulate_slot(&bf, &ch, &x, &mut rng);
            for j in 0..4 {
                acc[j] += (r[j] - x[perm.recv_from()[j]]).norm_sqr();
            }
        }
        for a in acc {
            worst = worst.max(rel(a / draws as f64, bf.sigma_e_sq));
        }
    }
    check(worst <= 0.02, format!("10 channels x 1e5 draws: worst relative variance error {:.2}%", worst * 100.0))
}

fn spreads(report: &ThroughputReport) -> String {
    report
        .spread
        .iter()
        .map(|p| format!("{}dB:{:.2}%", p.snr_db, p.spread * 100.0))
        .collect::<Vec<_>>()
        .join(" ")
}

fn c5_equivalence() -> Outcome {
    let start = Instant::now();
    let n4 = run_fair_switching(&ExperimentConfig::default()).unwrap();
    let low = n4.max_spread_in(0.0, 5.0);
    let high = n4.max_spread_in(10.0, 30.0);
    let n5_config = ExperimentConfig {
        n: 5,
        realizations: 2000,
        ..ExperimentConfig::default()
    };
    let n5 = run_fair_switching(&n5_config).unwrap();
    let n5_max = n5.max_spread_in(f64::NEG_INFINITY, f64::INFINITY);
    check(
        low <= 0.02 && high <= 0.01 && n5_max <= 0.015,
        format!(
            "N=4 x10000 [{}]; N=5 all 56 sets x2000 [{}]; {:.0?}",
            spreads(&n4),
            spreads(&n5),
            start.elapsed()
        ),
    )
}

fn c6_saturation() -> Outcome {
    let grid = [(1, 1), (10, 8), (20, 16)];
    let report = run_lm_saturation(&ExperimentConfig::default(), &grid).unwrap();
    let snrs = default_snr_grid();
    let mut pass = true;
    let mut parts = Vec::new();
    for &snr in &snrs {
        let late = report.gain((10, 8), (20, 16), snr).unwrap();
        let early = report.gain((1, 1), (10, 8), snr).unwrap();
        pass &= late < 0.01 && early > 0.0;
        parts.push(format!("{snr}dB:{:+.2}%/{:+.2}%", early * 100.0, late * 100.0));
    }
    check(pass, format!("N=4 x10000, gain 1x1->10x8 / 10x8->20x16: {}", parts.join(" ")))
}

fn c7_baseline() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, realizations) in [(4, 10_000), (5, 10_000)] {
        let config = ExperimentConfig {
            n,
            realizations,
            ..ExperimentConfig::default()
        };
        let report = run_baseline_comparison(&config).unwrap();
        let above = report
            .diagonal
            .iter()
            .zip(&report.scalar)
            .all(|(d, s)| d.mean_throughput >= s.mean_throughput);
        let gap = report.mid_curve_gap_db;
        pass &= above && gap.is_some_and(|g| (0.2..=2.0).contains(&g));
        parts.push(format!(
            "N={n}: diagonal>=scalar {above}, mid-curve gap {:.2} dB (per-station scoring {:.2} dB)",
            gap.unwrap_or(f64::NAN),
            report.per_station_mid_curve_gap_db.unwrap_or(f64::NAN)
        ));
    }
    check(pass, parts.join("; "))
}

fn c8_demand() -> Outcome {
    let demand = TrafficDemand::parse("n=3\n1 2 a\n1 3 a\n2 1 b\n2 3 c\n3 1 d\n3 2 e\n").unwrap();
    let d1 = Derangement::try_from(Permutation::from_destinations(&[2, 0, 1]).unwrap()).unwrap();
    let d2 = Derangement::try_from(Permutation::from_destinations(&[1, 2, 0]).unwrap()).unwrap();
    let sets = enumerate_condensed_sets(3).unwrap();
    let set = CondensedSet::new(vec![d1.clone(), d2.clone()]).unwrap();
    let assignment = realize_demand_over(&demand, &set).unwrap();
    let tx: Vec<Vec<&str>> = assignment.slots.iter().map(|s| s.tx.iter().map(String::as_str).collect()).collect();
    let counts = assignment.pair_service_counts();
    let pass = sets == vec![set]
        && assignment.slots[0].derangement == d1
        && tx == vec![vec!["a", "b", "e"], vec!["a", "c", "d"]]
        && counts.len() == 6
        && counts.values().all(|&c| c == 1);
    check(pass, format!("slots {tx:?}, pairs served {:?}", counts.values().collect::<Vec<_>>()))
}

fn c9_determinism() -> Outcome {
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_mimoswitch"))
            .args(args)
            .env_remove("MIMOSWITCH_SEED")
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let mut pass = true;
    let mut compared = 0;
    let experiments: [&[&str]; 3] = [
        &["fair-switching", "--realizations", "300"],
        &["lm-saturation", "--realizations", "200"],
        &["baseline-compare", "--n", "5", "--realizations", "200"],
    ];
    for exp in experiments {
        for format in ["csv", "json"] {
            let mut outputs = Vec::new();
            for threads in ["1", "1", "2", "4"] {
                let mut args = exp.to_vec();
                args.extend(["--format", format, "--threads", threads]);
                outputs.push(run(&args));
            }
            pass &= outputs.windows(2).all(|w| w[0] == w[1]);
            compared += outputs.len();
        }
    }
    check(pass, format!("{compared} runs over 3 experiments x 2 formats x threads 1,1,2,4 byte-identical: {pass}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("combinatorial counts", c1_counts),
        ("beamformer correctness", c2_beamformers),
        ("closed-form oracle", c3_closed_form),
        ("end-to-end noise", c4_noise),
        ("condensed-set equivalence", c5_equivalence),
        ("L/M saturation", c6_saturation),
        ("baseline comparison", c7_baseline),
        ("demand realization", c8_demand),
        ("determinism", c9_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = format!("C{}", k + 1);
        if !filter.is_empty() && !filter.iter().any(|x| x.eq_ignore_ascii_case(&id)) {
            continue;
        }
        let outcome = f();
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "{} {id} {name}: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
