"""Quantiles, exponent fits, recursion, dominance, scans and the baseline."""

import math

import numpy as np
import pytest

import lrpnet.experiments as ex
from lrpnet import (InsufficientData, InvalidArgument, LrpParams,
                    quantile_from_samples, sample_window, spawn_rng)
from lrpnet.errors import DependencyError
from lrpnet.model import INF


def test_quantile_order_statistic():
    vals = [3.0, 1.0, 2.0, 5.0, 4.0]
    assert quantile_from_samples(vals, 0.5) == 3.0       # median
    assert quantile_from_samples([7.0] * 40, 0.5) == 7.0
    # infinities rank above all finite values
    vals = [1.0, 2.0, INF, INF]
    assert quantile_from_samples(vals, 0.5) == 2.0
    assert quantile_from_samples(vals, 0.25) == INF
    # monotone in alpha: smaller alpha -> higher order statistic
    rng = np.random.default_rng(0)
    v = rng.exponential(1.0, 501)
    qs = [quantile_from_samples(v, a) for a in (0.5, 0.25, 0.1)]
    assert qs[0] <= qs[1] <= qs[2]


def test_quantile_ci_degenerate():
    lo, hi = ex.bootstrap_quantile_ci([7.0] * 50, 0.5)
    assert lo == hi == 7.0


def test_fit_exponent_synthetic():
    data = {n: 2.0 * math.exp(0.3 * n) for n in range(4, 12)}
    fit = ex.fit_exponent(data)
    assert abs(fit.delta - 0.3) < 1e-9
    assert abs(fit.c - 2.0) < 1e-9
    flat = ex.fit_exponent({n: 5.0 for n in range(4, 10)})
    assert abs(flat.delta) < 1e-12
    with pytest.raises(InsufficientData):
        ex.fit_exponent({4: 1.0, 5: 2.0, 6: math.inf, 7: math.inf})


def test_recursion_synthetic_exponential():
    # a_j = e^(delta j) reproduces the band arithmetic exactly
    delta, M, L = 0.25, 2.5, 2.2
    table = ex.QuantileTable(
        alpha=0.5, beta=1.0,
        entries={j: ex.QuantileEntry(math.exp(delta * j), 0, 0, 1000, 0)
                 for j in range(1, 26)})
    rep = ex.recursion_check(table, M, L, n_values=range(12, 26))
    from lrpnet.multiscale import scale_sequences
    for e in rep.entries:
        b, d, K = scale_sequences(e.n, M, L)
        expect = 0.0
        for k in range(2, K + 1):
            js = [j for j in range(1, e.n + 1) if b[k] < j <= b[k - 1]]
            expect += math.exp(delta * min(js)) / d[k]
        assert abs(e.S_n - expect) < 1e-9
        # the implication arithmetic: S_n <= a_n * sum e^(-delta d_k) / d_k
        bound = e.a_n * sum(math.exp(-delta * d[k]) / d[k] for k in range(2, K + 1))
        assert e.S_n <= bound * math.exp(delta) + 1e-9
    assert rep.min_ratio > 0


def test_recursion_single_band_and_missing_scale():
    table = ex.QuantileTable(
        alpha=0.5, beta=1.0,
        entries={j: ex.QuantileEntry(1.0, 0, 0, 100, 0) for j in range(1, 11)})
    rep = ex.recursion_check(table, 2.1, 2.1, n_values=[10])
    assert len(rep.entries) == 1
    assert rep.entries[0].K_n == 2           # exactly one complete band sum term
    assert len(rep.entries[0].bands) == 1
    sparse = ex.QuantileTable(
        alpha=0.5, beta=1.0,
        entries={j: ex.QuantileEntry(1.0, 0, 0, 100, 0) for j in (9, 10)})
    with pytest.raises(DependencyError):
        ex.recursion_check(sparse, 2.1, 2.1, n_values=[10])
    empty_range = ex.QuantileTable(alpha=0.5, beta=1.0,
                                   entries={j: ex.QuantileEntry(1.0, 0, 0, 100, 0)
                                            for j in range(1, 9)})
    with pytest.raises(InsufficientData):
        ex.recursion_check(empty_range, 2.1, 2.1, n_values=[8])  # K_8 < 2


def test_stochastic_order_test_orientation():
    rng = np.random.default_rng(1)
    a = rng.exponential(1.0, 1500)
    b = rng.exponential(1.0, 1500)
    assert ex.stochastic_order_pvalue(a, b) > 0.01       # identical: no reject
    assert ex.stochastic_order_pvalue(a + 0.5, b) > 0.5  # truly larger
    assert ex.stochastic_order_pvalue(a - 0.5, b) < 1e-4  # violated ordering
    # infinities are handled as maximal values
    aa = np.array([1.0, INF, 2.0, INF])
    bb = np.array([0.5, 1.5, 1.0, 2.0])
    assert ex.stochastic_order_pvalue(aa, bb) > 0.01


def test_dominance_small_run():
    rep = ex.dominance_check(1.0, 6, 500, seed=70)
    assert rep.coupled_violations == 0
    assert not rep.rejected
    assert 0.0 < rep.tilde_inf_fraction < 1.0
    with pytest.raises(InvalidArgument):
        ex.dominance_check(1.0, 6, 100, seed=70)


def test_point_nearest_boundary_parallel_bound():
    # R(0, Z \ {0}) <= 1/2: the two forced unit edges sit in parallel, and any
    # sampled extras only lower it; at n = 1 the two 3-edge arms give <= 3/2
    from lrpnet import Complement, Vertices, condense, effective_resistance
    p = LrpParams(beta=1.0, seed=71)
    for r in range(40):
        w = sample_window(p, -1, 1, rng=spawn_rng(71, 2, r))
        net = condense(w, source=Vertices(frozenset({0})), sink=Complement(0, 0))
        val = effective_resistance(net, want_flow=False).value
        assert val <= 0.5 + 1e-9
    for r in range(40):
        res, stats, _ = ex.sample_point(p, 1, spawn_rng(71, 1, r))
        assert res.value <= 1.5 + 1e-9


def test_box_conditioning_holds():
    p = LrpParams(beta=2.0, seed=72)
    n = 4
    N = 2 ** n
    excl = (((-N, N), (-INF, -2 * N - 1)), ((-N, N), (2 * N + 1, INF)))
    for r in range(40):
        w = sample_window(p, -2 * N, 2 * N, excluded=excl, rng=spawn_rng(72, 3, r))
        eu, ev = w.edge_arrays
        inside = (eu >= -N) & (eu <= N)
        assert not np.any(inside & (ev > 2 * N))
        assert not np.any((ev >= -N) & (ev <= N) & (eu < -2 * N))
        for v in range(-N, N + 1):
            assert w.bdy_left.get(v, 0) == 0
            assert w.bdy_right.get(v, 0) == 0


def test_cut_edge_probability_vs_mc():
    beta, n = 0.5, 5
    N = 2 ** n
    p = LrpParams(beta=beta, seed=73)
    reps = 1500
    freq = np.zeros(2 * N)
    for r in range(reps):
        w = sample_window(p, -N, N, rng=spawn_rng(73, 4, r))
        st = ex.cut_edge_stats(w, N)
        freq += st.unspanned
    for pos, i in enumerate(range(-N, N)):
        q = ex.cut_edge_probability(beta, N, i)
        z = (freq[pos] - reps * q) / math.sqrt(reps * q * (1 - q))
        assert abs(z) < 4.5


def test_baseline_center_edge_vs_heuristic():
    # the heuristic (2N)^-beta sits within a constant band of the exact
    # center-edge cut probability (and of its Monte Carlo frequency)
    rep = ex.cutedge_baseline(0.5, range(5, 9), 200, seed=79)
    emp, heur = rep.heuristic_center()
    assert heur / 2.0 ** 1.0 <= emp <= heur * 2.0 ** 1.0
    assert abs(rep.slope - 0.5) < 0.2


def test_quantiles_all_infinite_entry_flagged():
    # the detour statistic at tiny beta is always infinite; the entry is
    # flagged rather than raising
    table = ex.estimate_quantiles(1e-5, 0.5, [3], 100, seed=80, kind="tilde")
    e = table.entries[3]
    assert e.all_infinite and e.value == INF


def test_cut_count_beta_to_zero():
    p = LrpParams(beta=1e-9, seed=74)
    N = 16
    w = sample_window(p, -N, N, rng=spawn_rng(74, 5, 0))
    st = ex.cut_edge_stats(w, N)
    assert st.window_count == 2 * N
    assert st.series_bound <= N / 2 + 1


def test_point_respects_series_bound():
    p = LrpParams(beta=1.0, seed=75)
    for r in range(60):
        res, stats, _ = ex.sample_point(p, 4, spawn_rng(75, 6, r))
        assert res.value >= stats.series_bound - 1e-9


def test_domain_monotonicity_same_sample():
    # R(0, [-N,N]^c) <= R(0, [-2N,2N]^c) on one sampled environment
    from lrpnet import Complement, Vertices, condense, effective_resistance
    p = LrpParams(beta=1.0, seed=76)
    n = 4
    N = 2 ** n
    for r in range(30):
        w = sample_window(p, -2 * N, 2 * N, rng=spawn_rng(76, 7, r))
        inner = effective_resistance(
            condense(w, source=Vertices(frozenset({0})), sink=Complement(-N, N)),
            want_flow=False).value
        outer = effective_resistance(
            condense(w, source=Vertices(frozenset({0})),
                     sink=Complement(-2 * N, 2 * N)),
            want_flow=False).value
        assert inner <= outer + 1e-9


def test_sample_store_merge_and_csv(tmp_path):
    s1 = ex.SampleStore()
    s1.add_rows([{"beta": 1.0, "n": 5, "kind": "point", "value": 2.0,
                  "seed": 1, "replica_id": 0}])
    s2 = ex.SampleStore()
    s2.add_rows([{"beta": 1.0, "n": 5, "kind": "point", "value": 3.0,
                  "seed": 1, "replica_id": 1},
                 {"beta": 1.0, "n": 5, "kind": "point", "value": INF,
                  "seed": 1, "replica_id": 2}])
    merged = s1.merge(s2)
    vals = merged.values("point", 1.0, 5)
    assert sorted(vals.tolist()) == [2.0, 3.0, INF]
    # merging then estimating equals estimating on the union
    assert quantile_from_samples(vals, 0.5) == quantile_from_samples(
        np.concatenate([s1.values("point", 1.0, 5), s2.values("point", 1.0, 5)]),
        0.5)
    path = tmp_path / "rows.csv"
    merged.to_csv(path, manifest="abc123")
    text = path.read_text()
    assert text.startswith("# manifest=abc123\n")
    assert "inf" in text
    merged.to_csv(tmp_path / "rows2.csv", manifest="abc123")
    assert (tmp_path / "rows2.csv").read_text() == text


def test_estimate_quantiles_and_growth():
    table = ex.estimate_quantiles(1.0, 0.5, range(4, 9), 120, seed=77)
    vals = [table.entries[n].value for n in range(4, 9)]
    assert all(math.isfinite(v) for v in vals)
    # medians grow with n up to CI overlap
    for a in range(1, len(vals)):
        if vals[a] < vals[a - 1]:
            assert table.entries[4 + a].ci_hi >= table.entries[3 + a].ci_lo
    obj = table.to_json_obj()
    back = ex.QuantileTable.from_json_obj(obj)
    assert back.entries[5].value == table.entries[5].value
    with pytest.raises(InvalidArgument):
        ex.estimate_quantiles(1.0, 0.5, [4], 50)


def test_scan_result_shape():
    res = ex.point_scan(1.0, range(4, 8), 60, seed=78, threads=1)
    assert res.fit is not None
    assert len(res.medians) == 4
    assert res.monotone_up_to_ci() in (True, False)
    rows = res.rows
    assert all(r["value"] >= r["cut_bound"] - 1e-9 for r in rows)
