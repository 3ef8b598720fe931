use std::collections::BTreeMap;

use mimo_switch::combinatorics::{enumerate_condensed_sets, Derangement, Permutation};
use mimo_switch::scheduling::*;
use proptest::prelude::*;

fn rates(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3f64..20.0, 1..=max_len)
}

/// Runs the weighted round slot by slot and counts delivered units.
fn simulate_round(rates: &[f64], c: f64) -> (f64, Vec<f64>) {
    let weights = slot_weights(rates, c);
    let time: f64 = weights.iter().sum();
    let delivered: Vec<f64> = weights.iter().zip(rates).map(|(k, r)| k * r).collect();
    let per_station = delivered.iter().sum::<f64>() / time;
    (per_station, delivered)
}

proptest! {
    #[test]
    fn throughput_is_a_harmonic_mean(r in rates(8)) {
        let t = fair_throughput(&r);
        let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = r.iter().copied().fold(0.0, f64::max);
        prop_assert!(t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12));
        let arith = r.iter().sum::<f64>() / r.len() as f64;
        prop_assert!(t <= arith * (1.0 + 1e-12));
    }

    #[test]
    fn schedule_delivers_equal_traffic(r in rates(8), c in 0.1f64..10.0) {
        let (oracle, delivered) = simulate_round(&r, c);
        for d in delivered {
            prop_assert!((d - c).abs() <= 1e-12 * c);
        }
        let t = fair_throughput(&r);
        prop_assert!((t - oracle).abs() <= 1e-12 * t);
        if r.len() <= 4 {
            let sets = enumerate_condensed_sets(r.len() + 1).unwrap();
            let profile = RateProfile::new(sets[0].clone(), r.clone()).unwrap();
            let s = profile.schedule(c);
            prop_assert!((s.throughput() - t).abs() <= 1e-12 * t);
            prop_assert!((profile.fair_throughput() - t).abs() <= 1e-12 * t);
        }
    }

    #[test]
    fn scaling_rates_scales_throughput(r in rates(6), s in 0.1f64..10.0) {
        let scaled: Vec<f64> = r.iter().map(|x| x * s).collect();
        let (a, b) = (fair_throughput(&r) * s, fair_throughput(&scaled));
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn shared_slot_is_below_per_station(m in prop::collection::vec(prop::collection::vec(0.01f64..10.0, 3), 4)) {
        let (_, mean) = per_station_fair_throughput(&m);
        prop_assert!(shared_slot_fair_throughput(&m) <= mean * (1.0 + 1e-12));
    }

    #[test]
    fn demand_realization_is_relabeling_equivariant(
        set_idx in 0usize..56,
        sigma in Just((0..5).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let sigma = Permutation::new(sigma).unwrap();
        let to = sigma.destinations();
        let demand = TrafficDemand::unicast(5);
        let mut streams = BTreeMap::new();
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    streams.insert((to[i], to[j]), demand.label(i, j).to_string());
                }
            }
        }
        let renamed = TrafficDemand::new(5, streams).unwrap();
        let set = &enumerate_condensed_sets(5).unwrap()[set_idx];
        let moved: Vec<Derangement> = set.derangements().iter().map(|d| d.relabel(&sigma)).collect();
        let before = realize_demand_over(&demand, set).unwrap();
        let after = realize_demand(&renamed, &moved).unwrap();
        for (b, a) in before.slots.iter().zip(&after.slots) {
            for i in 0..5 {
                prop_assert_eq!(&a.tx[to[i]], &b.tx[i]);
            }
        }
    }
}

#[test]
fn every_pair_served_once_for_all_n5_sets() {
    let demand = TrafficDemand::unicast(5);
    for set in enumerate_condensed_sets(5).unwrap() {
        let counts = realize_demand_over(&demand, &set).unwrap().pair_service_counts();
        assert_eq!(counts.len(), 20);
        assert!(counts.values().all(|&c| c == 1));
    }
}

#[test]
fn integer_weights_recover_rational_ratios() {
    assert_eq!(integer_slot_weights(&[1.0, 0.5, 2.0 / 3.0], 1e-9, 100).unwrap(), vec![2, 4, 3]);
}
