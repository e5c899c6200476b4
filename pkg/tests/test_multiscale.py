"""Good pairs, very-good pairs, scale sequences, and the events E and F."""

import math

import numpy as np
import pytest

import lrpnet.multiscale as ms
from lrpnet import (DependencyError, GoodPairQuery, InvalidArgument, LrpParams,
                    LrpWindow, is_good_pair, sample_window, spawn_rng)
from lrpnet.model import INF


def _window(lo, hi, beta=1.0, edges=(), bdy_left=None, bdy_right=None):
    return LrpWindow(lo=lo, hi=hi, long_edges=frozenset(edges),
                     bdy_left=bdy_left or {}, bdy_right=bdy_right or {},
                     excluded=(), params=LrpParams(beta=beta))


def test_good_pair_trivial_and_violations():
    w = _window(-64, 64)
    assert is_good_pair(w, GoodPairQuery(z=0, i=3))
    # single edge from z to z + 2^(i+1) + 1 violates condition (1)
    w2 = _window(-64, 64, edges={(0, 17)})
    assert not is_good_pair(w2, GoodPairQuery(z=0, i=3))
    # an edge deep inside the left shortcut rectangle violates condition (2)
    w3 = _window(-64, 64, edges={(-20, 5)})
    assert not is_good_pair(w3, GoodPairQuery(z=0, i=3))


def test_goodness_decreasing_under_edge_insertion():
    # adding any long edge never turns a non-good pair good
    p = LrpParams(beta=1.0, seed=40)
    rng = spawn_rng(40, 1)
    for r in range(200):
        w = sample_window(p, -32, 32, rng=rng)
        q = GoodPairQuery(z=0, i=2)
        before = is_good_pair(w, q)
        u = int(rng.integers(-32, 31))
        v = int(rng.integers(-32, 31))
        if abs(u - v) < 2:
            continue
        w2 = LrpWindow(lo=w.lo, hi=w.hi,
                       long_edges=w.long_edges | {(min(u, v), max(u, v))},
                       bdy_left=w.bdy_left, bdy_right=w.bdy_right,
                       excluded=(), params=p)
        after = is_good_pair(w2, q)
        assert before or not after


def test_good_pair_probability_vs_mc():
    beta, i = 1.0, 2
    p = LrpParams(beta=beta, seed=41)
    exact = ms.good_pair_probability(p, i)
    R = 2 ** (i + 2)
    reps = 4000
    hits = sum(
        is_good_pair(sample_window(p, -R, R, rng=spawn_rng(41, 2, r)),
                     GoodPairQuery(z=0, i=i))
        for r in range(reps))
    z = (hits - reps * exact) / math.sqrt(reps * exact * (1 - exact))
    assert abs(z) < 3.5


def test_xi_vector_matches_window_goodness():
    # the Poisson-union sampler and the window pipeline agree in distribution
    beta, i = 1.0, 3
    p = LrpParams(beta=beta, seed=42)
    exact = ms.good_pair_probability(p, i)
    reps = 5000
    rng = spawn_rng(42, 3)
    hits = sum(int(ms.xi_vector(p, [i], rng=rng)[0]) for r in range(reps))
    z = (hits - reps * exact) / math.sqrt(reps * exact * (1 - exact))
    assert abs(z) < 3.5


def test_xi_sum_tail_trivial_and_decay():
    p = LrpParams(beta=0.15, seed=43)
    res = ms.xi_sum_tail(p, [8, 12, 16, 20], 300, t_grid=(0.5, 1.0))
    assert np.all(res.tail[:, 1] == 1.0)          # t = 1 is certain
    slope, lo, hi = res.slopes[0.5]
    assert slope < 0 and hi < 0                   # decay, CI excludes 0
    with pytest.raises(InvalidArgument):
        ms.xi_sum_tail(p, [8], 50)


def test_joint_zero_rate_geometric_decay():
    p = LrpParams(beta=1.0, seed=44)
    w = {r: ms.joint_zero_rate(p, range(1, r + 1), 1500, seed_key=r)
         for r in (2, 4, 6, 8)}
    rs = np.array(sorted(w))
    slope = np.polyfit(rs, np.log([w[r] for r in rs]), 1)[0]
    kappa = math.exp(slope)
    assert kappa < 1.0
    assert all(w[r] > 0 for r in rs)


def test_scale_sequences():
    b, d, K = ms.scale_sequences(13, 4.0, 3.0)
    assert d[0] == 0.0
    assert abs(d[1] - (4 + 3 * math.log(4))) < 1e-12
    assert np.all(np.diff(b) < 0) and b[K] >= 0
    # base-2 option
    b2, d2, _ = ms.scale_sequences(13, 4.0, 3.0, log_base=2.0)
    assert abs(d2[1] - (4 + 3 * math.log2(4))) < 1e-12
    with pytest.raises(InvalidArgument):
        ms.scale_sequences(13, 1.5, 3.0)


def test_d_sequence_two_sided_bounds():
    M, L = 3.0, 2.5
    d = ms.d_sequence(M, L, 100)
    lo_sum = 0.0
    hi_sum = 0.0
    for k in range(1, 101):
        lo_sum += math.log(k)
        hi_sum += math.log(L * M * k)
        assert k * M + L * lo_sum <= d[k] <= k * M + 2 * L * hi_sum


def test_c_prime_and_k_zero():
    assert abs(ms.c_prime(1.0, 0.5) - 0.875) < 1e-12
    # gamma up -> more failure allowance -> smaller confinement constant
    cs = [ms.c_prime(1.0, g) for g in (0.1, 0.3, 0.5, 0.9)]
    assert all(a > b for a, b in zip(cs, cs[1:]))
    k0 = ms.k_zero(1.0, 0.5, 4.0, 3.0)
    assert k0 >= 1
    with pytest.raises(InvalidArgument):
        ms.c_prime(1.0, 1.5)


def test_inflow_points_and_layers():
    p = LrpParams(beta=1.0)
    w = _window(-16, 16, edges={(-3, 5), (0, 9), (2, 7)}, bdy_left={12: 1})
    zs = ms.inflow_points(w, 4)
    assert zs == [1, 5, 9, 12]     # 1 forced; (2,7) does not cross 0
    eta = ms.layer_counts(zs, 4)
    assert eta[1:].tolist() == [0, 0, 1, 2]


def test_very_good_zero_threshold_reduces_to_condition_one():
    p = LrpParams(beta=1.0, seed=45)
    table = {j: 0.0 for j in range(0, 12)}
    for r in range(100):
        w = sample_window(p, -128, 3 * 64, rng=spawn_rng(45, 4, r))
        z, j = 9, 3
        vg = ms.very_good_pair(w, z, j, table, 0.5)
        r_, R_ = 2 ** j, 2 ** (j + 1)
        c1a = not w.exists_between((max(z - R_, 0), z + r_), (z + R_ + 1, INF))
        c1b = True
        if max(z - R_, 0) - 1 >= 1:
            c1b = not w.exists_between((1, max(z - R_, 0) - 1), (z - r_, z + R_))
        assert vg == (c1a and c1b)


def test_very_good_conditions_read_disjoint_edges():
    # adding an edge far on the other side never changes condition (2)
    from lrpnet.network import HatInterval, hat_resistance
    p = LrpParams(beta=1.0, seed=46)
    z, j = 20, 3
    r_, R_ = 2 ** j, 2 ** (j + 1)
    for rr in range(40):
        w = sample_window(p, -128, 192, rng=spawn_rng(46, 5, rr))
        spec = HatInterval((z - R_, z + r_), (z + R_ + 1, INF))
        v1 = hat_resistance(w, spec).value
        extra = (z - R_ - 20, z - R_ - 2)   # edge left of I1, outside the middle
        w2 = LrpWindow(lo=w.lo, hi=w.hi, long_edges=w.long_edges | {extra},
                       bdy_left=w.bdy_left, bdy_right=w.bdy_right,
                       excluded=(), params=p)
        v2 = hat_resistance(w2, spec).value
        assert v1 == v2


def test_very_good_threshold_self_consistency():
    # P[condition (2) resistance >= median threshold] is near 1 - alpha = 1/2
    import lrpnet.experiments as ex
    from lrpnet.network import HatInterval, hat_resistance
    beta, j, alpha = 1.0, 3, 0.5
    table = ex.estimate_quantiles(beta, alpha, [j], 300, seed=47)
    thresh = table.require(j)
    p = LrpParams(beta=beta, seed=48)
    z = 40
    r_, R_ = 2 ** j, 2 ** (j + 1)
    reps = 400
    ok = 0
    for r in range(reps):
        w = sample_window(p, 1, 128, rng=spawn_rng(48, 6, r))
        val = hat_resistance(w, HatInterval((z - R_, z + r_), (z + R_ + 1, INF))).value
        ok += val >= thresh
    frac = ok / reps
    sigma = math.sqrt(0.25 / reps)
    assert frac >= (1 - alpha) - 4 * sigma


def test_missing_quantile_raises_dependency_error():
    p = LrpParams(beta=1.0, seed=49)
    w = sample_window(p, -64, 96, rng=spawn_rng(49, 7, 0))
    import lrpnet.experiments as ex
    empty = ex.QuantileTable(alpha=0.5, beta=1.0, entries={})
    with pytest.raises(DependencyError):
        ms.very_good_pair(w, 9, 3, empty, 0.5)


def test_ledger_vacuous_event_E():
    # Z = {1} and no long edges: coverage condition is vacuous, counts hold
    p = LrpParams(beta=1.0)
    n = 6
    w = _window(-2 ** (n + 1), 3 * 2 ** n, beta=1.0, bdy_left={})
    table = {j: 0.0 for j in range(0, n + 1)}
    led = ms.build_scale_ledger(w, n, 2.1, 2.1, 0.5, table)
    assert led.Z == [1]
    assert led.eta_bar == 0
    res = ms.check_event_E(led, 1.0)
    assert res.holds and res.count_ok and res.coverage_ok


def test_event_E_high_probability_above_threshold_M():
    # the event probability reaches 1 - eps once M clears a fitted threshold
    # (the per-step trend in M is not monotone at desk scale: widening bands
    # also lowers b_1 and demands coverage at more inflow points)
    beta, n = 0.2, 9
    p = LrpParams(beta=beta, seed=50)
    table = {j: 0.0 for j in range(0, n + 1)}   # condition (1) only
    freqs = []
    for M in (2.1, 4.0, 8.0):
        holds = 0
        reps = 60
        for r in range(reps):
            w = sample_window(p, -2 ** (n + 1), 3 * 2 ** n,
                              rng=spawn_rng(50, 8, r))
            led = ms.build_scale_ledger(w, n, M, 2.1, 0.5, table)
            holds += ms.check_event_E(led, beta).holds
        freqs.append(holds / reps)
    assert freqs[-1] >= 0.95
    assert freqs[-1] >= max(freqs) - 1e-9


def test_per_band_failure_decays_with_width():
    # per-(step, point) miss rate drops as the band widens
    beta, n = 0.2, 9
    p = LrpParams(beta=beta, seed=51)
    table = {j: 0.0 for j in range(0, n + 1)}
    rates = []
    for M in (2.1, 6.0):
        miss = tot = 0
        for r in range(80):
            w = sample_window(p, -2 ** (n + 1), 3 * 2 ** n,
                              rng=spawn_rng(51, 9, r))
            led = ms.build_scale_ledger(w, n, M, 2.1, 0.5, table)
            for key, j in led.vg_found.items():
                tot += 1
                miss += j is None
        rates.append(miss / max(tot, 1))
    assert rates[1] <= rates[0] + 0.05


def test_ledger_csv_row_schema():
    p = LrpParams(beta=1.0)
    n = 6
    w = _window(-2 ** (n + 1), 3 * 2 ** n, beta=1.0)
    table = {j: 0.0 for j in range(0, n + 1)}
    led = ms.build_scale_ledger(w, n, 2.1, 2.1, 0.5, table)
    e = ms.check_event_E(led, 1.0)
    f = ms.check_event_F(w, n, 0.5)
    row = led.csv_row(e_holds=e.holds, f_holds=f.holds)
    for key in ("n", "M", "L", "alpha", "K_n", "k0", "eta_bar",
                "E_holds", "F_holds"):
        assert key in row
    assert all(f"vg_band_{k}" in row for k in range(1, led.K_n + 1))


def test_event_F_exact_probability():
    beta, n, gamma = 1.0, 7, 0.5
    p = LrpParams(beta=beta, seed=52)
    exact = ms.event_F_probability(p, n, gamma)
    reps = 2000
    holds = 0
    for r in range(reps):
        w = sample_window(p, -2 ** (n + 1), 3 * 2 ** n, rng=spawn_rng(52, 10, r))
        holds += ms.check_event_F(w, n, gamma).holds
    z = (holds - reps * exact) / math.sqrt(reps * exact * (1 - exact))
    assert abs(z) < 3.5
    # P[F] >= 1 - gamma/2 is the asymptotic target for this constant
    assert exact > 0.5


def test_cut_interval_semantics_by_graph_search():
    # on a good pair, any path from z out of [z-2^(i+1), z+2^(i+1)] meets a flank
    p = LrpParams(beta=1.0, seed=53)
    i = 3
    r_, R_ = 2 ** i, 2 ** (i + 1)
    lo, hi = -64, 64
    checked = 0
    for rr in range(300):
        w = sample_window(p, lo, hi, rng=spawn_rng(53, 11, rr))
        if not is_good_pair(w, GoodPairQuery(z=0, i=i)):
            continue
        checked += 1
        # BFS from 0 avoiding both flanks; must stay inside [-R, R] and
        # never touch a tail edge from strictly inside the core
        flank = set(range(-R_, -r_)) | set(range(r_ + 1, R_ + 1))
        adj = {}
        eu, ev = w.edge_arrays
        for u, v in zip(eu.tolist(), ev.tolist()):
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        for x in range(lo, hi):
            adj.setdefault(x, []).append(x + 1)
            adj.setdefault(x + 1, []).append(x)
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            assert -R_ <= x <= R_, "escaped the core without crossing a flank"
            assert not (w.bdy_left.get(x) or w.bdy_right.get(x)) or abs(x) > r_
            for y in adj.get(x, ()):
                if y in seen or y in flank:
                    continue
                seen.add(y)
                stack.append(y)
    assert checked >= 5


def test_eta_independence_and_means():
    # layer counts are independent across layers with the closed-form means
    import scipy.stats
    beta, n = 1.0, 6
    p = LrpParams(beta=beta, seed=54)
    reps = 1500
    counts = np.zeros((reps, n + 1), dtype=int)
    for r in range(reps):
        w = sample_window(p, -2 ** (n + 1), 2 ** n, rng=spawn_rng(54, 12, r))
        zs = ms.inflow_points(w, n)
        counts[r] = ms.layer_counts(zs, n)
    for l in range(1, n + 1):
        mu = ms.mu_layer(beta, l)
        z = (counts[:, l].mean() - mu) / (counts[:, l].std(ddof=1) / math.sqrt(reps))
        assert abs(z) < 4.0
    # chi-square independence for one pair of layers
    a = np.minimum(counts[:, 3], 2)
    b = np.minimum(counts[:, 5], 2)
    tbl = np.zeros((3, 3))
    for x, y in zip(a, b):
        tbl[x, y] += 1
    tbl = tbl[tbl.sum(axis=1) > 0][:, tbl.sum(axis=0) > 0]
    _, pval, _, _ = scipy.stats.chi2_contingency(tbl)
    assert pval > 0.005
