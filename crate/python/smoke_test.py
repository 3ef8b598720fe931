"""Smoke test for the mimoswitch Python extension.

Build and install first:
    pip install --no-build-isolation ./crates/python
"""

import json

import mimoswitch as ms


def main():
    assert ms.derangement_count(4) == 9
    assert ms.derangement_count(5) == 44
    assert len(ms.enumerate_derangements(5)) == 44
    sets4 = ms.enumerate_condensed_sets(4)
    assert len(sets4) == 4
    assert all(ms.is_condensed(s) for s in sets4)
    assert not ms.is_condensed([[1, 0, 3, 2], [1, 0, 3, 2], [2, 3, 0, 1]])
    assert ms.count_condensed_sets(5) == 56

    assert ms.link_rate(1.0) == 1.0
    assert abs(ms.fair_throughput([1.0, 2.0, 4.0]) - 3 / 1.75) < 1e-12
    assert ms.slot_weights([1.0, 2.0], 2.0) == [2.0, 1.0]

    slots = ms.realize_demand("n=3\n1 2 a\n1 3 a\n2 1 b\n2 3 c\n3 1 d\n3 2 e\n")
    assert [tx for _, tx in slots] == [["a", "b", "e"], ["a", "c", "d"]], slots

    ident = ms.Channel.identity(4, 1.0, 0.1, 1.0)
    perm = [1, 2, 3, 0]
    expected = 1.0 + 4 * 0.1 * 2.0
    assert abs(ms.solve_sigma_e(ident, perm, [0.0] * 4) / expected - 1) < 1e-9
    alpha, noise = ms.scalar_baseline(ident, perm)
    assert all(abs(v / expected - 1) < 1e-9 for v in noise)

    ch = ms.Channel.rayleigh(4, snr_db=10.0, seed=7)
    bf = ms.random_phase_search(ch, [1, 0, 3, 2], trials=10, phase_bins=8, seed=3)
    assert abs(bf.relay_power - 1.0) < 1e-6
    assert bf.channel_residual(ch) < 1e-8
    assert all(abs(v / bf.sigma_e_sq - 1) < 1e-8 for v in bf.per_station_noise(ch))
    assert all(isinstance(z, complex) for z in bf.g[0])

    try:
        ms.random_phase_search(ch, [0, 0, 1, 2])
    except ValueError:
        pass
    else:
        raise AssertionError("invalid permutation accepted")

    small = "realizations = 20\nsnr_grid = 0,10,20\n"
    fs = json.loads(ms.fair_switching(small))
    assert len(fs["sets"]) == 4 * 3
    assert fs["metadata"]["config"]["realizations"] == 20
    lm = json.loads(ms.lm_saturation(small, [(1, 1), (10, 8)]))
    assert len(lm["points"]) == 2 * 3
    bc = json.loads(ms.baseline_compare(small))
    assert all(d["mean_throughput"] >= s["mean_throughput"] for d, s in zip(bc["diagonal"], bc["scalar"]))
    assert ms.fair_switching(small) == ms.fair_switching(small)

    print("python smoke test ok:", bf)


if __name__ == "__main__":
    main()
