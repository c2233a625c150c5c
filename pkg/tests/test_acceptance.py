"""Acceptance gate: one test per release criterion, one PASS/FAIL line
each, with the stated tolerances and runtime budgets."""

import itertools
import json
import time
from importlib import resources

import numpy as np
import pytest

from sbmix.cli import main
from sbmix.evaluation import Scenario, adjusted_rand_index, run_experiment, simulate
from sbmix.graphon import graphon_distance, match_blocks
from sbmix.graphs import NetworkCollection
from sbmix.initializer import InitConfig, init_collection
from sbmix.mixture import (ClusteringState, FitOptions, fit, merge_clusters,
                           merge_gain, refresh_delta_table)
from sbmix.sbm import (Hyperparams, SbmParams, SbmState, count_stats,
                       icl_penalty, icl_sbm, sample_network, swap_delta)

import oracles


def report(name, ok, detail):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{name}: {detail}"


def builtin(name) -> Scenario:
    path = resources.files("sbmix") / "scenarios" / f"{name}.json"
    return Scenario.from_json(path.read_text(encoding="utf-8"))


def random_small_collection(rng, m_hi=6, n_lo=4, n_hi=10):
    m = int(rng.integers(2, m_hi + 1))
    nets = []
    for _ in range(m):
        n = int(rng.integers(n_lo, n_hi + 1))
        p = float(rng.uniform(0.2, 0.8))
        nets.append(sample_network(SbmParams([1.0], [[p]]), n, rng)[0])
    return NetworkCollection(nets)


def random_labels(rng, collection, k_hi=3):
    out = []
    for net in collection.networks:
        k = int(rng.integers(1, k_hi + 1))
        z = rng.integers(0, k, net.n)
        z[: min(k, net.n)] = np.arange(min(k, net.n))
        out.append(z)
    return out


def test_criterion_icl_quadrature_oracle():
    # 50 instances, total vertices <= 8, K <= 2, |icl - log quad| <= 1e-6
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    hyper = Hyperparams()
    worst = 0.0
    for _ in range(50):
        m = int(rng.integers(1, 3))
        total = int(rng.integers(max(2, m), 9))
        cuts = sorted(rng.choice(range(1, total), m - 1, replace=False)) \
            if m > 1 else []
        sizes = np.diff([0, *cuts, total]).astype(int)
        k = int(rng.integers(1, 3))
        nets, zs = [], []
        for n in sizes:
            n = max(int(n), 1)
            p = float(rng.uniform(0.1, 0.9))
            net, _ = sample_network(SbmParams([1.0], [[p]]), n, rng)
            nets.append(net)
            zs.append(rng.integers(0, k, n))
        stats = count_stats(nets, zs, k)
        exact = icl_sbm(stats, hyper)
        quad = oracles.quad_log_marginal(stats, hyper)
        worst = max(worst, abs(exact - quad))
    elapsed = time.perf_counter() - t0
    report("icl-quadrature-oracle",
           worst <= 1e-6 and elapsed < 60,
           f"50 instances, max |error| {worst:.2e}, {elapsed:.1f}s")


def test_criterion_delta_coherence():
    # 100 random states (M <= 6, n <= 10): swap_delta and merge_gain match
    # from-scratch differences at 1e-9; post-merge table entries too
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    hyper = Hyperparams()
    worst_swap = worst_gain = worst_table = 0.0
    for _ in range(100):
        coll = random_small_collection(rng)
        state = ClusteringState(coll, hyper, random_labels(rng, coll),
                                FitOptions(seed=int(rng.integers(2**31))))
        refresh_delta_table(state, None)

        live = sorted(state.clusters)
        for a, b in itertools.combinations(live, 2):
            d, p1, p2 = merge_gain(state, a, b)
            brute = oracles.brute_merge_delta(state, a, b, p1, p2)
            worst_gain = max(worst_gain, abs(d - brute))

        # node moves on a pooled sub-cluster of the same collection
        take = max(2, len(live) // 2)
        members = sorted(int(x) for x in rng.choice(live, take, replace=False))
        zs = [np.asarray(state.clusters[mm].labels[0]) for mm in members]
        k = max(int(z.max()) + 1 for z in zs)
        subnets = [coll.networks[mm] for mm in members]
        sstate = SbmState(subnets, zs, k)
        base = icl_sbm(sstate.stats(), hyper)
        s_before = sstate.stats().s.copy()
        for m_idx, net in enumerate(subnets):
            for i in range(net.n):
                g_old = int(zs[m_idx][i])
                for h in range(k):
                    d = swap_delta(sstate, hyper, m_idx, i, h)
                    z2 = [z.copy() for z in zs]
                    z2[m_idx][i] = h
                    after = icl_sbm(count_stats(subnets, z2, k), hyper)
                    pen = 0.0
                    if h != g_old and s_before[g_old] == 1:
                        pen = icl_penalty(k, sstate.n_total, hyper)
                    worst_swap = max(worst_swap,
                                     abs(d - (after - base - pen)))

        # one merge, then every refreshed entry vs a from-scratch recompute
        if len(live) >= 3:
            i, j = sorted(int(x) for x in rng.choice(live, 2, replace=False))
            merge_clusters(state, i, j)
            refresh_delta_table(state, i)
            for a, b in itertools.combinations(sorted(state.clusters), 2):
                d, p1, p2 = merge_gain(state, a, b)
                brute = oracles.brute_merge_delta(state, a, b, p1, p2)
                worst_table = max(worst_table, abs(state.delta[a, b] - d),
                                  abs(d - brute))
    elapsed = time.perf_counter() - t0
    ok = max(worst_swap, worst_gain, worst_table) <= 1e-9 and elapsed < 120
    report("delta-coherence", ok,
           f"100 states, max |error|: swap {worst_swap:.2e}, "
           f"merge {worst_gain:.2e}, table {worst_table:.2e}, {elapsed:.1f}s")


def test_criterion_graphon_distance_oracle():
    # closed form vs 2000x2000 grid quadrature at 1e-3; pseudometric at 1e-12
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    worst_grid = 0.0
    worst_pseudo = 0.0
    prev = None
    for _ in range(100):
        p = oracles.random_params(rng, int(rng.integers(1, 5)))
        q = oracles.random_params(rng, int(rng.integers(1, 5)))
        d = graphon_distance(p, q)
        grid = oracles.grid_graphon_distance(p, q, n=2000)
        worst_grid = max(worst_grid, abs(d - grid))
        worst_pseudo = max(worst_pseudo,
                           abs(graphon_distance(q, p) - d),
                           graphon_distance(p, p),
                           max(0.0, -d))
        if prev is not None:
            tri = graphon_distance(prev, q) - (graphon_distance(prev, p) + d)
            worst_pseudo = max(worst_pseudo, tri)
        prev = p
    elapsed = time.perf_counter() - t0
    ok = worst_grid <= 1e-3 and worst_pseudo <= 1e-12 and elapsed < 120
    report("graphon-distance-oracle", ok,
           f"100 pairs, grid max |error| {worst_grid:.2e}, "
           f"pseudometric slack {worst_pseudo:.2e}, {elapsed:.1f}s")


def test_criterion_match_blocks_recovery():
    # match_blocks on (p, sigma(p)) returns distance exactly 0
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    failures = 0
    for _ in range(100):
        k = int(rng.integers(1, 5))
        p = oracles.random_params(rng, k)
        sigma = list(rng.permutation(k))
        _, _, d = match_blocks(p, p.permuted(sigma))
        if d != 0.0:
            failures += 1
    elapsed = time.perf_counter() - t0
    report("match-blocks-recovery", failures == 0 and elapsed < 60,
           f"100 trials, {failures} nonzero distances, {elapsed:.1f}s")


def test_criterion_directional_recovery_single_component():
    # K=3 recovery rate non-decreasing in M, >= 0.9 at M=500; mean matched
    # graphon distance to truth strictly decreasing over the M grid
    t0 = time.perf_counter()
    scen = builtin("single-component")
    rates, dists = [], []
    for m in (50, 200, 500):
        rows = run_experiment(scen.with_m(m), "hier-force-merge-all", 20)
        rates.append(float(np.mean([r["k_hat"] == 3 for r in rows])))
        dists.append(float(np.mean([r["mean_graphon_dist"] for r in rows])))
    elapsed = time.perf_counter() - t0
    ok = (rates[0] <= rates[1] <= rates[2] and rates[2] >= 0.9
          and dists[0] > dists[1] > dists[2] and elapsed < 900)
    report("directional-recovery-single-component", ok,
           f"rates {rates}, mean distances "
           f"{[round(d, 4) for d in dists]}, {elapsed:.0f}s")


def test_criterion_directional_clustering_four_component():
    # C=4 with ARI >= 0.95 in >= 18/20 replicates; mean ARI strictly
    # above the spectral baseline given the true cluster count
    t0 = time.perf_counter()
    scen = builtin("four-component")
    h = run_experiment(scen, "hier", 20)
    g = run_experiment(scen, "gsc", 20, c_target=4)
    good = sum(1 for r in h if r["C_hat"] == 4 and r["ari_clusters"] >= 0.95)
    mean_h = float(np.mean([r["ari_clusters"] for r in h]))
    mean_g = float(np.mean([r["ari_clusters"] for r in g]))
    elapsed = time.perf_counter() - t0
    ok = good >= 18 and mean_h > mean_g and elapsed < 1200
    report("directional-clustering-four-component", ok,
           f"good {good}/20, mean ARI {mean_h:.3f} vs spectral "
           f"{mean_g:.3f}, {elapsed:.0f}s")


def test_criterion_monotone_merge_path():
    # recorded ICL strictly increases per accepted merge; at the stop the
    # best remaining merge gain is <= 0
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    worst_final = -np.inf
    for _ in range(100):
        coll = random_small_collection(rng, m_hi=8)
        state, dendro = fit(coll, Hyperparams(), random_labels(rng, coll),
                            FitOptions(seed=int(rng.integers(2**31))))
        icl = dendro.initial_icl
        for e in dendro.events:
            assert e.delta > 0.0
            assert e.icl_after > icl
            icl = e.icl_after
        best = max((merge_gain(state, a, b)[0] for a, b in
                    itertools.combinations(sorted(state.clusters), 2)),
                   default=-np.inf)
        worst_final = max(worst_final, best)
    elapsed = time.perf_counter() - t0
    ok = worst_final <= 1e-12 and elapsed < 300
    report("monotone-merge-path", ok,
           f"100 collections, max residual gain {worst_final:.2e}, "
           f"{elapsed:.0f}s")


def test_criterion_cmd_fit_determinism(tmp_path):
    # byte-identical outputs across two runs and across threads {1, 4}
    t0 = time.perf_counter()
    sim_dir = tmp_path / "sim"
    assert main(["simulate", "single-component", "--m", "8",
                 "--out-dir", str(sim_dir)]) == 0
    coll = sim_dir / "collection.ndjson"
    outs = []
    for tag, threads in (("r1", "1"), ("r2", "1"), ("t4", "4")):
        out = tmp_path / tag
        assert main(["fit", str(coll), "--out-dir", str(out),
                     "--seed", "7", "--threads", threads]) == 0
        outs.append(out)
    files = ("clustering.json", "dendrogram.json", "dendrogram.nwk",
             "merges.tsv")
    same = all(
        (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
        and (outs[0] / f).read_bytes() == (outs[2] / f).read_bytes()
        for f in files)
    elapsed = time.perf_counter() - t0
    report("cmd-fit-determinism", same,
           f"2 runs x threads {{1,4}}, 4 files byte-compared, "
           f"{elapsed:.1f}s")


def test_criterion_dominant_cluster_purity():
    # outlier-heavy mixture: the recovered dominant cluster is >= 90% pure
    t0 = time.perf_counter()
    scen = builtin("outliers")
    ss = np.random.SeedSequence([scen.seed & 0xFFFFFFFF, 0])
    sim_seed, aux_seed = (int(x) for x in ss.generate_state(2))
    sim = simulate(scen, seed=sim_seed)
    hyper = Hyperparams()
    inits = init_collection(sim.collection, hyper, InitConfig(seed=aux_seed))
    state, _ = fit(sim.collection, hyper, [r.labels for r in inits],
                   FitOptions(seed=aux_seed))
    dominant = set(np.flatnonzero(sim.u == 0))
    best = max(state.clusters.values(),
               key=lambda cl: len(dominant & set(cl.members)))
    purity = len(dominant & set(best.members)) / best.m_count
    elapsed = time.perf_counter() - t0
    report("dominant-cluster-purity", purity >= 0.9 and elapsed < 600,
           f"dominant cluster {best.m_count} networks, purity "
           f"{purity:.3f}, C_hat {state.C}, {elapsed:.0f}s")
