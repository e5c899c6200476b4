"""Monte Carlo campaigns: quantile tables, exponent fits, scans and checks.

Sampling conventions
--------------------
Every replica derives its generator from (root seed, kind code, beta bits,
n, replica id), so results are reproducible and independent of execution
order or worker count.  Resistances that can be infinite (the detour
variant) keep math.inf; quantile order statistics rank infinities above all
finite values, and a quantile is reported infinite when the order statistic
lands in the infinite mass.

Window geometry per statistic
-----------------------------
* through-resistance at scale n: window [1, 2^n]; the two tail regions are
  exactly the source (-inf, 0] and sink (2^n, +inf) half-lines.
* point / detour / dominance at scale n: window [-2^n, 2^n].
* conditioned box at scale n: window [-2^(n+1), 2^(n+1)] sampled under the
  exclusion rectangles [-N, N] x ([-2N, 2N]^c).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from .errors import (DependencyError, InsufficientData, InvalidArgument)
from .model import (INF, LrpParams, LrpWindow, float_key, sample_window,
                    spawn_rng, edge_probability, _tail_distances)
from .multiscale import scale_sequences
from .network import (Complement, HatInterval, HatN, TildeN, Vertices,
                      condense, effective_resistance, hat_resistance)

# stream-kind codes
_K_POINT = 11
_K_BOX = 12
_K_HATN = 13
_K_TILDE = 14
_K_HATGEN = 15
_K_TRIPLE = 16
_K_BASELINE = 17


# ---------------------------------------------------------------------------
# per-replica samplers
# ---------------------------------------------------------------------------

def _params(beta, seed, eps):
    return LrpParams(beta=beta, seed=seed, truncation_eps=eps)


def sample_point(params: LrpParams, n: int, rng, want_flow=False):
    """R(0, [-N, N]^c) plus the replica's cut-edge statistics."""
    N = 2 ** n
    w = sample_window(params, -N, N, rng=rng)
    net = condense(w, source=Vertices(frozenset({0})), sink=Complement(-N, N))
    res = effective_resistance(net, want_flow=want_flow)
    stats = cut_edge_stats(w, N)
    return res, stats, w


def sample_box(params: LrpParams, n: int, rng) -> float:
    """R([-N, N], [-2N, 2N]^c) under exact no-crossing conditioning."""
    N = 2 ** n
    excl = (((-N, N), (-INF, -2 * N - 1)), ((-N, N), (2 * N + 1, INF)))
    w = sample_window(params, -2 * N, 2 * N, excluded=excl, rng=rng)
    net = condense(w, source=(-N, N), sink=Complement(-2 * N, 2 * N))
    return effective_resistance(net, want_flow=False).value


def sample_hat_n(params: LrpParams, n: int, rng) -> float:
    """Through-resistance: flows (-inf,0] -> (2^n, inf) confined to (0, 2^n]."""
    w = sample_window(params, 1, 2 ** n, rng=rng)
    return hat_resistance(w, HatN(n)).value


def sample_tilde(params: LrpParams, n: int, rng) -> float:
    N = 2 ** n
    w = sample_window(params, -N, N, rng=rng)
    return hat_resistance(w, TildeN(n)).value


def sample_hat_general(params: LrpParams, n: int, rng) -> float:
    N = 2 ** n
    w = sample_window(params, -N, N, rng=rng)
    return hat_resistance(w, HatInterval((-N, 0), (N + 1, INF))).value


def sample_dominance_triple(params: LrpParams, n: int, rng):
    """Coupled (detour, confined-source, through) resistances on one sample.

    The detour's sink edges (0,N] -> (-inf,-N) are coupled pair-by-pair with
    their mirror images (0,N] -> (N,inf): the mirror is closer so its edge
    probability dominates, and one uniform per pair realizes detour-edge =>
    mirror-edge.  Both marginals stay exact, and Rayleigh monotonicity makes
    the detour resistance >= the confined-source one replica by replica; the
    through variant only adds source attachments, so it sits below both.
    """
    N = 2 ** n
    base = sample_window(params, -N, N, rng=rng)
    bdy_left = {v: c for v, c in base.bdy_left.items() if v <= 0}
    bdy_right = {v: c for v, c in base.bdy_right.items() if v <= 0}
    beta, eps = params.beta, params.truncation_eps
    for v in range(1, N + 1):
        hat = 0
        til = 0
        dmin = N + 1 - v
        if dmin == 1:
            hat += 1
            if rng.random() < edge_probability(params, 2 * N + 1):
                til += 1
        for t in _tail_distances(beta, max(2, dmin), rng, eps):
            hat += 1
            u = v + t
            ratio = edge_probability(params, u + v) / edge_probability(params, u - v)
            if rng.random() < ratio:
                til += 1
        if hat:
            bdy_right[v] = hat
        if til:
            bdy_left[v] = til
    w = LrpWindow(lo=-N, hi=N, long_edges=base.long_edges,
                  bdy_left=bdy_left, bdy_right=bdy_right,
                  excluded=base.excluded, params=params,
                  replica_id=base.replica_id)
    r_tilde = hat_resistance(w, TildeN(n)).value
    r_gen = hat_resistance(w, HatInterval((-N, 0), (N + 1, INF))).value
    r_hat = hat_resistance(w, HatN(n)).value
    return r_tilde, r_gen, r_hat


# ---------------------------------------------------------------------------
# cut-edge statistics
# ---------------------------------------------------------------------------

def cut_edge_probability(beta: float, N: int, i: int) -> float:
    """Exact P[no window long edge spans (i, i+1)] inside [-N, N].

    Tiling the integer rectangle [-N, i] x [i+1, N] minus its corner cell
    gives mass log(2 (N - i) (N + i + 1) / (2N + 1)).
    """
    if not (-N <= i < N):
        raise InvalidArgument("edge index out of window")
    m = math.log(2.0 * (N - i) * (N + i + 1.0) / (2.0 * N + 1.0))
    return math.exp(-beta * m)


@dataclass
class CutStats:
    window_count: int        # edges (i,i+1) spanned by no window long edge
    series_bound: float      # rigorous per-replica lower bound on R(0, [-N,N]^c)
    unspanned: np.ndarray    # indicator per i in [-N, N-1] (window long edges)


def cut_edge_stats(window: LrpWindow, N: int) -> CutStats:
    """Spanning tallies for every backbone edge (i, i+1), i in [-N, N-1].

    series_bound counts index pairs {(i,i+1), (-i-1,-i)} spanned by nothing
    at all (window long edges or tail edges): each such pair is a genuine
    2-edge cut set for 0 -> [-N,N]^c and contributes energy >= 1/2 to any
    unit flow, and distinct pairs are edge-disjoint.
    """
    idx0 = N  # array position of edge index -N
    marks_w = np.zeros(2 * N + 1)
    eu, ev = window.edge_arrays
    if eu.size:
        lo = np.maximum(eu, -N) + idx0
        hi = np.minimum(ev - 1, N - 1) + idx0
        ok = lo <= hi
        np.add.at(marks_w, lo[ok], 1.0)
        np.add.at(marks_w, hi[ok] + 1, -1.0)
    spanned_w = np.cumsum(marks_w)[:-1] > 0
    window_count = int(2 * N - spanned_w.sum())

    marks_t = marks_w.copy()
    for u, c in window.bdy_right.items():
        if c > 0 and u <= N - 1:   # edge u -> >= N+1 spans [u, N-1]
            marks_t[max(u, -N) + idx0] += 1
            marks_t[N + idx0] -= 1
    for v, c in window.bdy_left.items():
        if c > 0 and v - 1 >= -N:  # edge v -> <= -N-1 spans [-N, v-1]
            marks_t[-N + idx0] += 1
            marks_t[v + idx0] -= 1
    spanned_t = np.cumsum(marks_t)[:-1] > 0
    right = spanned_t[idx0: idx0 + N]
    left = spanned_t[idx0 - 1:: -1][:N] if idx0 >= 1 else spanned_t[:0]
    pairs = int(np.sum(~right & ~left))
    return CutStats(window_count=window_count, series_bound=0.5 * pairs,
                    unspanned=~spanned_w)


# ---------------------------------------------------------------------------
# quantiles
# ---------------------------------------------------------------------------

def quantile_from_samples(values, alpha: float) -> float:
    """Order statistic at index ceil((1-alpha) m), ascending, infinities last."""
    v = np.sort(np.asarray(values, dtype=float))
    m = v.size
    if m == 0:
        raise InvalidArgument("empty sample")
    idx = min(max(int(math.ceil((1.0 - alpha) * m)), 1), m)
    return float(v[idx - 1])


def bootstrap_quantile_ci(values, alpha, nboot=400, seed=4242):
    v = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    qs = np.empty(nboot)
    for b in range(nboot):
        qs[b] = quantile_from_samples(rng.choice(v, size=v.size, replace=True), alpha)
    # order statistics, no interpolation: infinities stay exact
    return (float(np.quantile(qs, 0.025, method="lower")),
            float(np.quantile(qs, 0.975, method="higher")))


@dataclass
class QuantileEntry:
    value: float
    ci_lo: float
    ci_hi: float
    count: int
    n_infinite: int

    @property
    def all_infinite(self) -> bool:
        return self.n_infinite == self.count


@dataclass
class QuantileTable:
    """Empirical quantile thresholds per scale, with provenance."""

    alpha: float
    beta: float
    entries: dict                      # n -> QuantileEntry
    provenance: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)   # n -> np.ndarray (optional)

    def require(self, n: int) -> float:
        if n not in self.entries:
            raise DependencyError(f"no quantile entry for scale {n}")
        return self.entries[n].value

    def __getitem__(self, n: int) -> float:
        return self.require(n)

    def scales(self):
        return sorted(self.entries)

    def to_json_obj(self):
        return {
            "alpha": self.alpha, "beta": self.beta,
            "entries": {str(n): [e.value if math.isfinite(e.value) else "inf",
                                 e.ci_lo, e.ci_hi, e.count, e.n_infinite]
                        for n, e in sorted(self.entries.items())},
            "provenance": self.provenance,
        }

    @classmethod
    def from_json_obj(cls, o):
        ent = {}
        for k, (v, lo, hi, cnt, ninf) in o["entries"].items():
            val = INF if v == "inf" else float(v)
            ent[int(k)] = QuantileEntry(val, lo, hi, cnt, ninf)
        return cls(alpha=o["alpha"], beta=o["beta"], entries=ent,
                   provenance=o.get("provenance", {}))


def estimate_quantiles(beta: float, alpha: float, n_range, replicas: int,
                       seed: int = 0, eps: float = 1e-12, threads: int = 1,
                       kind: str = "hat_n") -> QuantileTable:
    """Empirical (1-alpha)-order-statistic table for the chosen statistic."""
    if replicas < 100:
        raise InvalidArgument("need at least 100 replicas per scale")
    entries = {}
    samples = {}
    for n in n_range:
        rows = _run_cells(kind, beta, [n], replicas, seed, eps, threads)
        vals = np.array([r["value"] for r in rows])
        samples[n] = vals
        q = quantile_from_samples(vals, alpha)
        lo, hi = bootstrap_quantile_ci(vals, alpha)
        lo, hi = min(lo, q), max(hi, q)   # CI always brackets the estimate
        entries[int(n)] = QuantileEntry(
            value=q, ci_lo=lo, ci_hi=hi, count=vals.size,
            n_infinite=int(np.isinf(vals).sum()))
    return QuantileTable(alpha=alpha, beta=beta, entries=entries,
                         provenance={"seed": seed, "beta": beta, "kind": kind,
                                     "replicas": replicas},
                         samples=samples)


# ---------------------------------------------------------------------------
# exponent fit
# ---------------------------------------------------------------------------

@dataclass
class ExponentFit:
    delta: float             # slope per unit n (statistic ~ c * e^(delta n))
    c: float
    ci: tuple                # 95% CI for delta
    n_used: tuple

    @property
    def delta_per_log_N(self) -> float:
        return self.delta / math.log(2.0)


def fit_exponent(data, nboot: int = 400, seed: int = 515) -> ExponentFit:
    """Least squares of log(value) against n.

    data: {n: value} mapping, or a QuantileTable (whose retained samples then
    drive a bootstrap CI; otherwise the CI is the OLS normal interval).
    """
    samples = None
    if isinstance(data, QuantileTable):
        pairs = {n: e.value for n, e in data.entries.items()}
        alpha = data.alpha
        samples = data.samples or None
    else:
        pairs = dict(data)
        alpha = None
    ns = np.array(sorted(n for n, v in pairs.items()
                         if math.isfinite(v) and v > 0), dtype=float)
    if ns.size < 4:
        raise InsufficientData("need at least 4 finite positive entries")
    ys = np.log([pairs[int(n)] for n in ns])
    A = np.vstack([ns, np.ones_like(ns)]).T
    sol, res, _, _ = np.linalg.lstsq(A, ys, rcond=None)
    delta, logc = float(sol[0]), float(sol[1])
    if samples:
        rng = np.random.default_rng(seed)
        boots = []
        for _ in range(nboot):
            vals = {}
            for n in ns:
                s = samples[int(n)]
                q = quantile_from_samples(rng.choice(s, size=s.size, replace=True), alpha)
                vals[int(n)] = q
            yb = np.array([vals[int(n)] for n in ns])
            good = np.isfinite(yb) & (yb > 0)
            if good.sum() >= 2:
                b = np.linalg.lstsq(A[good], np.log(yb[good]), rcond=None)[0]
                boots.append(b[0])
        lo, hi = np.quantile(boots, [0.025, 0.975])
    else:
        dof = max(ns.size - 2, 1)
        resid = ys - A @ sol
        s2 = float(resid @ resid) / dof
        sxx = float(np.sum((ns - ns.mean()) ** 2))
        se = math.sqrt(s2 / sxx) if sxx > 0 else 0.0
        lo, hi = delta - 1.96 * se, delta + 1.96 * se
    return ExponentFit(delta=delta, c=math.exp(logc), ci=(float(lo), float(hi)),
                       n_used=tuple(int(n) for n in ns))


# ---------------------------------------------------------------------------
# recursion check
# ---------------------------------------------------------------------------

@dataclass
class RecursionEntry:
    n: int
    K_n: int
    S_n: float
    a_n: float
    ratio: float
    bands: list               # per k >= 2: (scales, min quantile, d_k)


@dataclass
class RecursionReport:
    alpha: float
    M: float
    L: float
    entries: list
    min_ratio: float
    trend_slope: float
    trend_ci: tuple

    def passed(self) -> bool:
        return (self.min_ratio > 0
                and math.isfinite(self.min_ratio)
                and self.trend_ci[1] >= 0)


def recursion_check(table: QuantileTable, M: float, L: float,
                    n_values=None, log_base: float = math.e) -> RecursionReport:
    """Ratio of each scale's quantile to its band-sum S_n.

    S_n = sum over steps k = 2..K_n of min{quantile at scales in (b_k,
    b_{k-1}]} / d_k.  Scales whose K_n < 2 carry no complete band and are
    skipped (the smallest admissible M, L > 2 put the second step deeper
    than n = 9).  Passing means a positive minimum ratio whose trend in n is
    not systematically downward.
    """
    if n_values is None:
        n_values = table.scales()
    entries = []
    for n in sorted(int(n) for n in n_values):
        b, d, K_n = scale_sequences(n, M, L, log_base)
        if K_n < 2:
            continue
        s_n = 0.0
        bands = []
        for k in range(2, K_n + 1):
            scales = [j for j in range(1, n + 1) if b[k] < j <= b[k - 1]]
            if not scales:
                raise DependencyError(f"empty band at n={n}, k={k}")
            try:
                mn = min(table.require(j) for j in scales)
            except DependencyError as e:
                raise DependencyError(f"band for n={n}, k={k}: {e}") from e
            s_n += mn / d[k]
            bands.append((scales, mn, float(d[k])))
        a_n = table.require(n)
        ratio = a_n / s_n if s_n > 0 else INF
        entries.append(RecursionEntry(n=n, K_n=K_n, S_n=s_n, a_n=a_n,
                                      ratio=ratio, bands=bands))
    if not entries:
        raise InsufficientData("no scale in range has a complete band (K_n >= 2)")
    ratios = np.array([e.ratio for e in entries])
    ns = np.array([e.n for e in entries], dtype=float)
    fin = np.isfinite(ratios)
    min_ratio = float(ratios[fin].min()) if fin.any() else INF
    if fin.sum() >= 3:
        A = np.vstack([ns[fin], np.ones(fin.sum())]).T
        sol, *_ = np.linalg.lstsq(A, ratios[fin], rcond=None)
        resid = ratios[fin] - A @ sol
        dof = max(fin.sum() - 2, 1)
        sxx = float(np.sum((ns[fin] - ns[fin].mean()) ** 2))
        se = math.sqrt(float(resid @ resid) / dof / sxx) if sxx > 0 else 0.0
        slope, ci = float(sol[0]), (float(sol[0] - 1.96 * se), float(sol[0] + 1.96 * se))
    else:
        slope, ci = 0.0, (-INF, INF)
    return RecursionReport(alpha=table.alpha, M=M, L=L, entries=entries,
                           min_ratio=min_ratio, trend_slope=slope, trend_ci=ci)


# ---------------------------------------------------------------------------
# dominance check
# ---------------------------------------------------------------------------

def _cap_inf(*arrays):
    finite_max = 0.0
    for a in arrays:
        fin = a[np.isfinite(a)]
        if fin.size:
            finite_max = max(finite_max, float(fin.max()))
    cap = finite_max * 2.0 + 1.0
    return [np.where(np.isinf(a), cap, a) for a in arrays]


def stochastic_order_pvalue(larger, smaller) -> float:
    """One-sided two-sample test of H0: `larger` >= `smaller` stochastically.

    Small p-values are evidence against the ordering.  Infinities are mapped
    to a common finite cap (rank-preserving).
    """
    a, b = _cap_inf(np.asarray(larger, float), np.asarray(smaller, float))
    return float(scipy.stats.ks_2samp(a, b, alternative="greater").pvalue)


@dataclass
class DominanceReport:
    beta: float
    n: int
    replicas: int
    coupled_violations: int
    p_tilde_vs_gen: float
    p_gen_vs_hat: float
    p_tilde_vs_hat: float
    tilde_inf_fraction: float
    rejected: bool

    def passed(self) -> bool:
        return self.coupled_violations == 0 and not self.rejected


def dominance_check(beta: float, n: int, replicas: int, seed: int = 0,
                    eps: float = 1e-12, significance: float = 0.01,
                    threads: int = 1) -> DominanceReport:
    """Coupled replica-wise ordering plus independent-sample ECDF tests."""
    if replicas < 500:
        raise InvalidArgument("need at least 500 replicas")
    rows = _run_cells("triple", beta, [n], replicas, seed, eps, threads)
    tol = 1e-7
    viol = 0
    for r in rows:
        t, g, h = r["tilde"], r["gen"], r["hat"]
        scale = 1.0 + abs(h if math.isfinite(h) else 0.0)
        if (math.isfinite(g) and (t < g - tol * scale)) or h > g + tol * scale:
            viol += 1
    tilde_i = np.array([r["value"] for r in _run_cells(
        "tilde", beta, [n], replicas, seed + 1, eps, threads)])
    gen_i = np.array([r["value"] for r in _run_cells(
        "hat_general", beta, [n], replicas, seed + 2, eps, threads)])
    hat_i = np.array([r["value"] for r in _run_cells(
        "hat_n", beta, [n], replicas, seed + 3, eps, threads)])
    p1 = stochastic_order_pvalue(tilde_i, gen_i)
    p2 = stochastic_order_pvalue(gen_i, hat_i)
    p3 = stochastic_order_pvalue(tilde_i, hat_i)
    rejected = min(p1, p2, p3) < significance
    return DominanceReport(
        beta=beta, n=n, replicas=replicas, coupled_violations=viol,
        p_tilde_vs_gen=p1, p_gen_vs_hat=p2, p_tilde_vs_hat=p3,
        tilde_inf_fraction=float(np.isinf(tilde_i).mean()),
        rejected=rejected)


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------

@dataclass
class ScanResult:
    beta: float
    kind: str                  # "point" or "box"
    n_values: tuple
    medians: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    median_ci: list            # per n: (lo, hi) bootstrap
    fit: ExponentFit | None
    rows: list
    runtime_s: float

    def monotone_up_to_ci(self) -> bool:
        """Medians non-decreasing allowing overlap of adjacent bootstrap CIs."""
        for a in range(1, len(self.n_values)):
            if self.medians[a] < self.medians[a - 1] and \
                    self.median_ci[a][1] < self.median_ci[a - 1][0]:
                return False
        return True


def _scan(kind, beta, n_range, replicas, seed, eps, threads, nboot=400):
    t0 = time.time()
    n_values = tuple(int(n) for n in n_range)
    rows = _run_cells(kind, beta, n_values, replicas, seed, eps, threads)
    by_n = {n: np.array([r["value"] for r in rows if r["n"] == n])
            for n in n_values}
    medians = np.array([np.median(by_n[n]) for n in n_values])
    q25 = np.array([np.quantile(by_n[n], 0.25) for n in n_values])
    q75 = np.array([np.quantile(by_n[n], 0.75) for n in n_values])
    rng = np.random.default_rng(seed + 99)
    cis = []
    boot_meds = {n: np.array([
        np.median(rng.choice(by_n[n], size=by_n[n].size, replace=True))
        for _ in range(nboot)]) for n in n_values}
    for n in n_values:
        cis.append((float(np.quantile(boot_meds[n], 0.025)),
                    float(np.quantile(boot_meds[n], 0.975))))
    fit = None
    if len(n_values) >= 4:
        fit = fit_exponent({n: float(m) for n, m in zip(n_values, medians)})
        boots = []
        for b in range(nboot):
            vals = {n: float(boot_meds[n][b]) for n in n_values}
            try:
                boots.append(fit_exponent(vals).delta)
            except InsufficientData:
                pass
        if boots:
            fit = ExponentFit(delta=fit.delta, c=fit.c,
                              ci=(float(np.quantile(boots, 0.025)),
                                  float(np.quantile(boots, 0.975))),
                              n_used=fit.n_used)
    return ScanResult(beta=beta, kind=kind, n_values=n_values, medians=medians,
                      q25=q25, q75=q75, median_ci=cis, fit=fit, rows=rows,
                      runtime_s=time.time() - t0)


def point_scan(beta, n_range, replicas, seed=0, eps=1e-12, threads=1) -> ScanResult:
    """Medians and exponent fit for R(0, [-N, N]^c), N = 2^n."""
    return _scan("point", beta, n_range, replicas, seed, eps, threads)


def box_scan(beta, n_range, replicas, seed=0, eps=1e-12, threads=1) -> ScanResult:
    """Same for R([-N, N], [-2N, 2N]^c) under exact conditioning."""
    return _scan("box", beta, n_range, replicas, seed, eps, threads)


# ---------------------------------------------------------------------------
# cut-edge baseline
# ---------------------------------------------------------------------------

@dataclass
class BaselineReport:
    beta: float
    n_values: tuple
    mean_counts: np.ndarray
    exact_counts: np.ndarray
    slope: float               # log mean count vs log N
    slope_ci: tuple
    edge_freq_n: int
    edge_freqs: dict           # i -> empirical cut frequency at edge_freq_n
    replicas: int

    def passed_slope(self, expect: float, tol: float) -> bool:
        return abs(self.slope - expect) <= tol

    def heuristic_center(self) -> tuple:
        """(empirical P[cut] at the center edge, the (2N)^-beta heuristic)."""
        n0 = self.edge_freq_n
        return self.edge_freqs[0], (2.0 * 2 ** n0) ** (-self.beta)


def expected_cut_count(beta: float, N: int) -> float:
    return sum(cut_edge_probability(beta, N, i) for i in range(-N, N))


def cutedge_baseline(beta, n_range, replicas, seed=0, eps=1e-12,
                     threads=1) -> BaselineReport:
    """Cut-edge counts within the window versus the closed-form expectation."""
    n_values = tuple(int(n) for n in n_range)
    rows = _run_cells("baseline", beta, n_values, replicas, seed, eps, threads)
    means = []
    for n in n_values:
        cnts = [r["value"] for r in rows if r["n"] == n]
        means.append(float(np.mean(cnts)))
    means = np.array(means)
    exact = np.array([expected_cut_count(beta, 2 ** n) for n in n_values])
    logN = np.log([2.0 ** n for n in n_values])
    A = np.vstack([logN, np.ones_like(logN)]).T
    sol, *_ = np.linalg.lstsq(A, np.log(means), rcond=None)
    resid = np.log(means) - A @ sol
    dof = max(len(n_values) - 2, 1)
    sxx = float(np.sum((logN - logN.mean()) ** 2))
    se = math.sqrt(float(resid @ resid) / dof / sxx) if sxx > 0 else 0.0
    n0 = n_values[0]
    N0 = 2 ** n0
    freq = {}
    per_edge = [r["unspanned"] for r in rows if r["n"] == n0]
    arr = np.array(per_edge)
    for pos, i in enumerate(range(-N0, N0)):
        freq[i] = float(arr[:, pos].mean())
    return BaselineReport(beta=beta, n_values=n_values, mean_counts=means,
                          exact_counts=exact, slope=float(sol[0]),
                          slope_ci=(float(sol[0] - 1.96 * se),
                                    float(sol[0] + 1.96 * se)),
                          edge_freq_n=n0, edge_freqs=freq, replicas=replicas)


# ---------------------------------------------------------------------------
# replica execution
# ---------------------------------------------------------------------------

def _one_replica(kind, beta, n, seed, eps, rep):
    params = _params(beta, seed, eps)
    rng = spawn_rng(seed, {"point": _K_POINT, "box": _K_BOX, "hat_n": _K_HATN,
                           "tilde": _K_TILDE, "hat_general": _K_HATGEN,
                           "triple": _K_TRIPLE, "baseline": _K_BASELINE}[kind],
                    float_key(beta), n, rep)
    base = {"beta": beta, "n": n, "kind": kind, "seed": seed, "replica_id": rep}
    if kind == "point":
        res, stats, _ = sample_point(params, n, rng)
        base.update(value=res.value, cut_count=stats.window_count,
                    cut_bound=stats.series_bound)
    elif kind == "box":
        base.update(value=sample_box(params, n, rng))
    elif kind == "hat_n":
        base.update(value=sample_hat_n(params, n, rng))
    elif kind == "tilde":
        base.update(value=sample_tilde(params, n, rng))
    elif kind == "hat_general":
        base.update(value=sample_hat_general(params, n, rng))
    elif kind == "triple":
        t, g, h = sample_dominance_triple(params, n, rng)
        base.update(value=t, tilde=t, gen=g, hat=h)
    elif kind == "baseline":
        N = 2 ** n
        w = sample_window(params, -N, N, rng=rng)
        st = cut_edge_stats(w, N)
        base.update(value=float(st.window_count), cut_bound=st.series_bound,
                    unspanned=st.unspanned.astype(np.int8))
    else:
        raise InvalidArgument(f"unknown kind {kind}")
    return base


def _chunk_worker(args):
    kind, beta, n, seed, eps, lo, hi = args
    return [_one_replica(kind, beta, n, seed, eps, rep) for rep in range(lo, hi)]


def _run_cells(kind, beta, n_values, replicas, seed, eps, threads):
    tasks = []
    chunk = max(8, replicas // max(1, threads * 4)) if threads > 1 else replicas
    for n in n_values:
        for lo in range(0, replicas, chunk):
            tasks.append((kind, beta, int(n), seed, eps,
                          lo, min(lo + chunk, replicas)))
    if threads <= 1:
        results = [_chunk_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_chunk_worker, tasks))
    rows = [r for chunk_rows in results for r in chunk_rows]
    rows.sort(key=lambda r: (r["n"], r["replica_id"]))
    return rows


# ---------------------------------------------------------------------------
# the append-only sample store
# ---------------------------------------------------------------------------

CSV_FIELDS = ("beta", "n", "kind", "value_or_inf", "seed", "replica_id")


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return repr(x)
    return str(x)


@dataclass
class SampleStore:
    """Append-only replica log; merging then estimating equals estimating the union."""

    rows: list = field(default_factory=list)

    def add_rows(self, rows):
        for r in rows:
            self.rows.append({k: r[k] for k in ("beta", "n", "kind", "value",
                                                "seed", "replica_id")})

    def merge(self, other: "SampleStore") -> "SampleStore":
        out = SampleStore(rows=list(self.rows) + list(other.rows))
        out.rows.sort(key=lambda r: (r["kind"], repr(r["beta"]), r["n"],
                                     r["seed"], r["replica_id"]))
        return out

    def values(self, kind, beta, n) -> np.ndarray:
        return np.array([r["value"] for r in self.rows
                         if r["kind"] == kind and r["beta"] == beta and r["n"] == n])

    def to_csv(self, path, manifest: str = ""):
        lines = []
        if manifest:
            lines.append(f"# manifest={manifest}")
        lines.append(",".join(CSV_FIELDS))
        ordered = sorted(self.rows, key=lambda r: (r["kind"], repr(r["beta"]),
                                                   r["n"], r["seed"], r["replica_id"]))
        for r in ordered:
            lines.append(",".join([
                _fmt(float(r["beta"])), str(r["n"]), r["kind"],
                _fmt(float(r["value"])), str(r["seed"]), str(r["replica_id"])]))
        with open(path, "w", newline="\n") as f:
            f.write("\n".join(lines) + "\n")
