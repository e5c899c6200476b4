"""Multi-scale machinery: good / very-good interval pairs, scale sequences,
inflow points, and the per-sample events they define.

A pair of dyadic flanks around a center z at scale i,

    I_i^-(z) = [z - 2^(i+1), z - 2^i)   and   I_i^+(z) = (z + 2^i, z + 2^(i+1)],

is *good* when no long edge shortcuts past either flank; every path from z to
the complement of [z - 2^(i+1), z + 2^(i+1)] must then traverse one of them,
so a good pair acts as a cut-interval for flows leaving z.  The *very good*
refinement additionally asks the two directed constrained resistances across
the flanks to clear a quantile threshold for their scale.

Scale bookkeeping: b_0 = n and b_k = b_{k-1} - M - L*log(n + M - b_{k-1}),
d_k = n - b_k, K_n = sup{k : b_k >= 0}.  The log base is natural by default
and configurable.  Layer-band membership of an integer scale j in step k is
the real comparison b_k < j <= b_{k-1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .model import (INF, LrpParams, LrpWindow, integer_interval_mass,
                    rectangle_mass, spawn_rng)
from .network import HatInterval, hat_resistance


# ---------------------------------------------------------------------------
# good pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GoodPairQuery:
    """Center z and scale exponent i for the flank pair (I_i^-, I_i^+)."""
    z: int
    i: int

    def __post_init__(self):
        if self.i < 0:
            raise InvalidArgument("scale exponent must be >= 0")


def is_good_pair(window: LrpWindow, q: GoodPairQuery) -> bool:
    """True iff no long edge joins either shortcut rectangle of the pair.

    Condition (1): [z - 2^(i+1), z + 2^i]  x  (z + 2^(i+1), +inf) is empty.
    Condition (2): (-inf, z - 2^(i+1))  x  [z - 2^i, z + 2^(i+1)] is empty.
    """
    z, i = q.z, q.i
    r, R = 2 ** i, 2 ** (i + 1)
    if window.exists_between((z - R, z + r), (z + R + 1, INF)):
        return False
    if window.exists_between((-INF, z - R - 1), (z - r, z + R)):
        return False
    return True


def good_pair_probability(params: LrpParams, i: int) -> float:
    """Closed-form P[(I_i^-, I_i^+) is good] (center-free by translation invariance)."""
    r, R = 2 ** i, 2 ** (i + 1)
    m1 = integer_interval_mass(-R, r, R + 1, INF)
    m2 = integer_interval_mass(-INF, -R - 1, -r, R)
    return math.exp(-params.beta * (m1 + m2))


# ---------------------------------------------------------------------------
# Poisson-union sampler for the goodness indicators xi_1..xi_n
# ---------------------------------------------------------------------------

def _union_hits(params: LrpParams, specs, rng) -> np.ndarray:
    """Existence indicators for a nested family of half-plane rectangles.

    specs: per scale a cell triple (u_lo, u_hi, v_lo) meaning the integer
    rectangle [u_lo, u_hi] x [v_lo, +inf); v_lo strictly increasing and
    u-ranges nested increasing.  The union is decomposed into disjoint
    v-bands, a Poisson field of intensity beta |u-v|^-2 is drawn on each,
    and a spec is hit iff some point's integer cell lands in it.  Exact:
    per-cell hit probability is 1 - exp(-beta * cellmass), independent.
    """
    beta = params.beta
    k = len(specs)
    hits = np.zeros(k, dtype=bool)
    pts_u: list[float] = []
    pts_v: list[float] = []
    for j in range(k):
        u_lo, u_hi, v_lo = specs[j]
        v_hi = specs[j + 1][2] - 1 if j + 1 < k else INF   # integer band end
        a1, a2 = float(u_lo), float(u_hi) + 1.0
        b1 = float(v_lo)
        b2 = float(v_hi) + 1.0 if not math.isinf(v_hi) else INF
        if not math.isinf(b2) and b1 >= b2:
            continue
        mass = rectangle_mass(a1, a2, b1, b2)
        cnt = int(rng.poisson(beta * mass))
        for _ in range(cnt):
            u = _sample_u(a1, a2, b1, b2, mass, rng)
            v = _sample_v_given_u(u, b1, b2, rng)
            pts_u.append(u)
            pts_v.append(v)
    if pts_u:
        cu = np.floor(np.array(pts_u)).astype(np.int64)
        cv = np.floor(np.array(pts_v)).astype(np.int64)
        for j, (u_lo, u_hi, v_lo) in enumerate(specs):
            hits[j] = bool(np.any((cu >= u_lo) & (cu <= u_hi) & (cv >= v_lo)))
    return hits


def _sample_u(a1, a2, b1, b2, mass, rng):
    """Inverse-CDF (by bisection) of the u-marginal of |u-v|^-2 on the piece."""
    target = rng.random() * mass
    lo, hi = a1, a2
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if rectangle_mass(a1, mid, b1, b2) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _sample_v_given_u(u, b1, b2, rng):
    """Closed-form inverse of the conditional v-CDF given u."""
    A = 1.0 / (b1 - u)
    B = 0.0 if math.isinf(b2) else 1.0 / (b2 - u)
    g = rng.random()
    return u + 1.0 / (A - g * (A - B))


def xi_vector(params: LrpParams, scales, rng=None) -> np.ndarray:
    """One exact joint sample of the goodness indicators for the given scales.

    Uses two independent Poisson copies: the two shortcut rectangles of a
    pair live in disjoint regions of the plane and, after the integer mirror
    (u, v) -> (-v, -u), share the same cell layout.
    """
    scales = sorted(int(s) for s in scales)
    if rng is None:
        rng = spawn_rng(params.seed, 301)
    specs = [(-2 ** (i + 1), 2 ** i, 2 ** (i + 1) + 1) for i in scales]
    h1 = _union_hits(params, specs, rng)
    h2 = _union_hits(params, specs, rng)
    return ~(h1 | h2)


@dataclass
class XiTailResult:
    """Empirical tails of sum(xi)/n and their fitted log-slopes in n."""
    t_grid: tuple
    n_values: tuple
    tail: np.ndarray          # shape (len(n_values), len(t_grid))
    replicas: int
    slopes: dict              # t -> (slope, lo, hi) over n where tail > 0


def xi_sum_tail(params: LrpParams, n_values, replicas: int,
                t_grid=(0.25, 0.5, 0.75, 1.0), seed_key: int = 0) -> XiTailResult:
    """Estimate P[sum_{i<=n} xi_i <= t*n] on a grid of t and fit log-slopes in n."""
    if replicas < 100:
        raise InvalidArgument("need at least 100 replicas")
    n_values = tuple(int(n) for n in n_values)
    t_grid = tuple(float(t) for t in t_grid)
    tail = np.zeros((len(n_values), len(t_grid)))
    for a, n in enumerate(n_values):
        rng = spawn_rng(params.seed, 302, seed_key, n)
        sums = np.array([int(xi_vector(params, range(1, n + 1), rng).sum())
                         for _ in range(replicas)])
        for b, t in enumerate(t_grid):
            tail[a, b] = float(np.mean(sums <= t * n))
    slopes = {}
    ns = np.array(n_values, dtype=float)
    for b, t in enumerate(t_grid):
        p = tail[:, b]
        ok = p > 0
        if ok.sum() >= 3:
            slope, lo, hi = _bootstrap_slope(ns[ok], p[ok], replicas)
            slopes[t] = (slope, lo, hi)
    return XiTailResult(t_grid=t_grid, n_values=n_values, tail=tail,
                        replicas=replicas, slopes=slopes)


def _bootstrap_slope(ns, p, replicas, nboot=400):
    logp = np.log(p)
    slope = np.polyfit(ns, logp, 1)[0]
    rng = np.random.default_rng(12345)
    boots = []
    for _ in range(nboot):
        k = rng.binomial(replicas, p)
        pb = np.maximum(k, 1) / replicas
        boots.append(np.polyfit(ns, np.log(pb), 1)[0])
    lo, hi = np.quantile(boots, [0.025, 0.975])
    return float(slope), float(lo), float(hi)


def joint_zero_rate(params: LrpParams, S, replicas: int, seed_key: int = 0) -> float:
    """Monte Carlo P[xi_i = 0 for every i in S] (the joint-failure rate w_r)."""
    rng = spawn_rng(params.seed, 303, seed_key, len(tuple(S)))
    hits = 0
    for _ in range(replicas):
        if not xi_vector(params, S, rng).any():
            hits += 1
    return hits / replicas


# ---------------------------------------------------------------------------
# scale sequences and inflow points
# ---------------------------------------------------------------------------

def scale_sequences(n: int, M: float, L: float, log_base: float = math.e):
    """b_k, d_k arrays (kept while b_k >= 0) and K_n."""
    if not (M > 2 and L > 2):
        raise InvalidArgument("need M > 2 and L > 2")
    lb = math.log(log_base)
    b = [float(n)]
    while True:
        nxt = b[-1] - M - L * (math.log(n + M - b[-1]) / lb)
        if nxt < 0 or len(b) > 10_000:
            break
        b.append(nxt)
    barr = np.array(b)
    return barr, n - barr, len(b) - 1


def d_sequence(M: float, L: float, kmax: int, log_base: float = math.e) -> np.ndarray:
    """d_0..d_kmax from d_k = d_{k-1} + M + L*log(M + d_{k-1}) (n-free form)."""
    lb = math.log(log_base)
    d = [0.0]
    for _ in range(kmax):
        d.append(d[-1] + M + L * (math.log(M + d[-1]) / lb))
    return np.array(d)


def c_prime(beta: float, gamma: float) -> float:
    """Inflow-confinement constant: c' = (1 + (1 - gamma/2)^(1/beta)) / 2."""
    if not (0 < gamma < 1):
        raise InvalidArgument("gamma must lie in (0, 1)")
    return 0.5 * (1.0 + (1.0 - gamma / 2.0) ** (1.0 / beta))


def k_zero(beta: float, gamma: float, M: float, L: float,
           log_base: float = math.e) -> int:
    """First step k whose previous depth d_{k-1} - 1 clears log2(1/(1-c'))."""
    thresh = math.log2(1.0 / (1.0 - c_prime(beta, gamma)))
    d = d_sequence(M, L, 64, log_base)
    for k in range(1, d.size):
        if d[k - 1] - 1.0 >= thresh:
            return k
    raise InvalidArgument("k0 not reached within 64 steps")


def inflow_points(window: LrpWindow, n: int) -> list:
    """Z: points of (0, 2^n] joined to (-inf, 0] by an edge; 1 is always in."""
    N = 2 ** n
    if window.lo > 1 or window.hi < N:
        raise InvalidArgument("window must cover [1, 2^n] and reach left of 0")
    zs = {1}
    eu, ev = window.edge_arrays
    if eu.size:
        m = (eu <= 0) & (ev >= 1) & (ev <= N)
        zs.update(int(v) for v in ev[m])
    for v, c in window.bdy_left.items():
        if 1 <= v <= N and c > 0:
            zs.add(int(v))
    return sorted(zs)


def layer_counts(zs, n: int) -> np.ndarray:
    """eta_l = #(Z intersect (2^(l-1), 2^l]) for l = 1..n."""
    eta = np.zeros(n + 1, dtype=np.int64)  # index 1..n used
    for z in zs:
        if z > 1:
            eta[int(math.ceil(math.log2(z)))] += 1
    return eta


def mu_layer(beta: float, l: int) -> float:
    """E[eta_l] in closed form: sum over v in (2^(l-1), 2^l] of 1 - ((v-1)/v)^beta."""
    v = np.arange(2 ** (l - 1) + 1, 2 ** l + 1, dtype=float)
    return float(np.sum(-np.expm1(beta * np.log1p(-1.0 / v))))


# ---------------------------------------------------------------------------
# very-good pairs
# ---------------------------------------------------------------------------

def very_good_pair(window: LrpWindow, z: int, j: int, quantiles, alpha: float,
                   clip_origin: int = 0) -> bool:
    """Very-goodness of (I_j^-(z), I_j^+(z)), boundary-adapted at clip_origin.

    (1) no long edge [max(z-2^(j+1), c), z+2^j] <-> (z+2^(j+1), inf) and none
        (c, max(z-2^(j+1), c)) <-> [z-2^j, z+2^(j+1)], c = clip_origin;
    (2) Rhat([z-2^(j+1), z+2^j], (z+2^(j+1), inf)) >= threshold(j);
    (3) Rhat((z-2^j, z+2^(j+1)], (-inf, z-2^(j+1)]) >= threshold(j).

    The three conditions read disjoint edge sets, so given the inflow
    environment they are independent.  threshold(j) comes from the supplied
    quantile table; a missing scale raises DependencyError.
    """
    r, R = 2 ** j, 2 ** (j + 1)
    thresh = quantiles.require(j) if hasattr(quantiles, "require") else quantiles[j]

    left_clip = max(z - R, clip_origin)
    if window.exists_between((left_clip, z + r), (z + R + 1, INF)):
        return False
    if left_clip - 1 >= clip_origin + 1:
        if window.exists_between((clip_origin + 1, left_clip - 1), (z - r, z + R)):
            return False
    if thresh > 0:
        r2 = hat_resistance(window, HatInterval((z - R, z + r), (z + R + 1, INF)))
        if not (r2.value >= thresh):
            return False
        r3 = hat_resistance(window, HatInterval((z - r + 1, z + R), (-INF, z - R)))
        if not (r3.value >= thresh):
            return False
    return True


def is_very_good_pair(window: LrpWindow, i: int, j: int, quantiles, alpha: float,
                      n: int, clip_origin: int = 0) -> bool:
    """Index form: i addresses the sorted inflow points of the window at size n."""
    zs = inflow_points(window, n)
    if not (0 <= i < len(zs)):
        raise InvalidArgument(f"inflow index {i} out of range")
    return very_good_pair(window, zs[i], j, quantiles, alpha, clip_origin)


# ---------------------------------------------------------------------------
# the scale ledger and events E, F
# ---------------------------------------------------------------------------

@dataclass
class ScaleLedger:
    """All per-sample scale bookkeeping for one window at size n."""

    n: int
    M: float
    L: float
    alpha: float
    b: np.ndarray
    d: np.ndarray
    K_n: int
    k0: int
    Z: list
    eta: np.ndarray                      # eta[1..n]
    eta_bar_b: np.ndarray                # per k = 0..K_n
    vg_found: dict                       # (k, z) -> scale j or None
    records: dict = field(default_factory=dict)   # (z, j) -> bool very-good

    @property
    def eta_bar(self) -> int:
        return len(self.Z) - 1

    def band_scales(self, k: int) -> list:
        """Integer scales j with b_k < j <= b_{k-1}."""
        return [j for j in range(1, self.n + 1)
                if self.b[k] < j <= self.b[k - 1]]

    def csv_row(self, e_holds=None, f_holds=None) -> dict:
        per_band = {f"vg_band_{k}": sum(
            1 for (kk, _), j in self.vg_found.items() if kk == k and j is not None)
            for k in range(1, self.K_n + 1)}
        row = {
            "n": self.n, "M": self.M, "L": self.L, "alpha": self.alpha,
            "K_n": self.K_n, "k0": self.k0, "eta_bar": self.eta_bar,
            "E_holds": e_holds, "F_holds": f_holds,
        }
        row.update(per_band)
        return row


def build_scale_ledger(window: LrpWindow, n: int, M: float, L: float,
                       alpha: float, quantiles, log_base: float = math.e,
                       clip_origin: int = 0) -> ScaleLedger:
    """Assemble sequences, inflow set, layer counts and very-good flags.

    Flags are evaluated for every step k <= K_n and every inflow point beyond
    2^floor(b_k), scanning the band's scales in increasing order and stopping
    at the first very-good hit.
    """
    if not (0 < alpha <= 0.5):
        raise InvalidArgument("alpha must lie in (0, 1/2]")
    b, d, K_n = scale_sequences(n, M, L, log_base)
    k0 = k_zero(window.params.beta, alpha, M, L, log_base)
    zs = inflow_points(window, n)
    eta = layer_counts(zs, n)
    eta_bar_b = np.array([1 + int(eta[1:int(math.floor(bk)) + 1].sum()) for bk in b])

    vg_found = {}
    records = {}
    for k in range(1, K_n + 1):
        cut = 2 ** int(math.floor(b[k]))
        band = [j for j in range(1, n + 1) if b[k] < j <= b[k - 1]]
        for z in zs:
            if z <= cut:
                continue
            found = None
            for j in band:
                ok = very_good_pair(window, z, j, quantiles, alpha, clip_origin)
                records[(z, j)] = ok
                if ok:
                    found = j
                    break
            vg_found[(k, z)] = found
    return ScaleLedger(n=n, M=M, L=L, alpha=alpha, b=b, d=d, K_n=K_n, k0=k0,
                       Z=zs, eta=eta, eta_bar_b=eta_bar_b, vg_found=vg_found,
                       records=records)


@dataclass
class EventEResult:
    holds: bool
    count_ok: bool                 # condition (1): band inflow counts
    coverage_ok: bool              # condition (2): very-good pair per point
    band_counts: list              # per k: (observed, 2*mu)
    failures: list                 # (k, z) pairs missing a very-good scale


def check_event_E(ledger: ScaleLedger, beta: float) -> EventEResult:
    """Both conditions of the per-sample event E_{alpha,n}."""
    band_counts = []
    count_ok = True
    for k in range(1, ledger.K_n + 1):
        lo, hi = ledger.b[k], ledger.b[k - 1]
        obs = int(sum(ledger.eta[l] for l in range(1, ledger.n + 1) if lo < l <= hi))
        mu = sum(mu_layer(beta, l) for l in range(1, ledger.n + 1) if lo < l <= hi)
        band_counts.append((obs, 2.0 * mu))
        if obs > 2.0 * mu:
            count_ok = False
    failures = [key for key, j in ledger.vg_found.items() if j is None]
    coverage_ok = not failures
    return EventEResult(holds=count_ok and coverage_ok, count_ok=count_ok,
                        coverage_ok=coverage_ok, band_counts=band_counts,
                        failures=failures)


@dataclass
class EventFResult:
    holds: bool
    c_prime: float
    z_max: int
    bound: float


def check_event_F(window: LrpWindow, n: int, gamma: float) -> EventFResult:
    """F_{gamma,n}: the largest inflow point stays below c' * 2^n."""
    cp = c_prime(window.params.beta, gamma)
    zs = inflow_points(window, n)
    bound = cp * 2 ** n
    zmax = max(zs)
    return EventFResult(holds=zmax <= bound, c_prime=cp, z_max=zmax, bound=bound)


def event_F_probability(params: LrpParams, n: int, gamma: float) -> float:
    """Exact P[F_{gamma,n}] = P[no edge (-inf,0] x (floor(c'2^n), 2^n]]."""
    cp = c_prime(params.beta, gamma)
    N = 2 ** n
    lo = math.floor(cp * N) + 1
    if lo > N:
        return 1.0
    return math.exp(-params.beta * integer_interval_mass(-INF, 0, lo, N))
