"""Critical long-range percolation edge law on Z and exact finite-window samplers.

Every nearest-neighbor pair is an edge.  A pair (i, j) with |i - j| = d >= 2
(a "long" pair) is an edge independently with probability

    p_d = 1 - exp(-beta * m(d)),

where m(d) is the integral of |u - v|^-2 over the unit squares at i and j.
The integral reduces to m(d) = -log(1 - 1/d^2), hence p_d = 1 - (1 - 1/d^2)^beta.

All rectangle masses used in this package come from the same antiderivative.
For the continuous rectangle [a1, a2] x [b1, b2] with a2 <= b1,

    m = log(1 + wa * wb / (g * G)),

with wa = a2 - a1, wb = b2 - b1, near gap g = b1 - a2 and far gap G = b2 - a1.
That form is numerically stable for far, narrow rectangles, and the infinite
limits are immediate:  a1 = -inf gives log1p(wb / g), b2 = +inf gives
log1p(wa / g), and both infinite diverges.

Half-infinite vertex regions are never materialized.  Samplers return exact
per-vertex edge counts into a region (parallel unit edges just add when the
region is condensed into a supernode); the scan over the tail uses closed-form
inverse-CDF jumps, so the work is proportional to the number of edges found.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergentIntegral, InvalidArgument, UnsupportedGeometry

INF = math.inf

# stream-kind codes for deterministic child RNGs (one root seed, replica
# streams independent of execution order)
_KIND_WINDOW = 101
_KIND_GENERIC = 199


def spawn_rng(seed: int, *key: int) -> np.random.Generator:
    """Child generator for (seed, key...); reproducible and order-independent."""
    ints = tuple(int(k) & 0xFFFFFFFFFFFFFFFF for k in key)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((int(seed),) + ints)))


def float_key(x: float) -> int:
    """Stable 64-bit key for a float (for seeding streams by parameter)."""
    return int(np.float64(x).view(np.uint64))


@dataclass(frozen=True)
class LrpParams:
    """Model parameters: beta > 0, root seed, tail-truncation control."""

    beta: float
    seed: int = 0
    truncation_eps: float = 1e-12

    def __post_init__(self):
        if not (self.beta > 0):
            raise InvalidArgument(f"beta must be positive, got {self.beta}")
        if not (0 < self.truncation_eps <= 1e-6):
            raise InvalidArgument(
                f"truncation_eps must lie in (0, 1e-6], got {self.truncation_eps}"
            )


def edge_key(i: int, j: int) -> tuple[int, int]:
    """Canonical unordered pair (lo, hi)."""
    if i == j:
        raise InvalidArgument("self-loops are not edges")
    return (i, j) if i < j else (j, i)


# ---------------------------------------------------------------------------
# closed-form rectangle masses
# ---------------------------------------------------------------------------

def rectangle_mass(a1: float, a2: float, b1: float, b2: float) -> float:
    """Integral of |u - v|^-2 over [a1,a2] x [b1,b2] (continuous bounds).

    The two intervals must be disjoint; at most one outer bound may be
    infinite per side.  Returns math.inf for touching intervals of positive
    width (divergent corner) and for doubly-infinite configurations.
    """
    if a1 > a2 or b1 > b2:
        raise InvalidArgument("interval bounds out of order")
    if a2 == a1 or b2 == b1:
        return 0.0
    # orient so the a-side sits left of the b-side
    if a2 <= b1:
        pass
    elif b2 <= a1:
        a1, a2, b1, b2 = b1, b2, a1, a2
    else:
        raise InvalidArgument("rectangle sides overlap")
    if math.isinf(a2) or math.isinf(b1):
        raise InvalidArgument("inner bounds must be finite")
    g = b1 - a2
    if g == 0.0:
        return INF
    wa = a2 - a1
    wb = b2 - b1
    if math.isinf(wa) and math.isinf(wb):
        return INF
    if math.isinf(wa):
        return math.log1p(wb / g)
    if math.isinf(wb):
        return math.log1p(wa / g)
    return math.log1p(wa * wb / (g * (b2 - a1)))


def integer_interval_mass(x1: float, x2: float, y1: float, y2: float) -> float:
    """Mass for integer intervals [x1,x2] and [y1,y2] (inclusive ends).

    Unit squares of integer u tile [u, u+1], so the continuous rectangle is
    [x1, x2+1] x [y1, y2+1]; infinite ends pass through.
    """
    a2 = x2 + 1 if not math.isinf(x2) else x2
    b2 = y2 + 1 if not math.isinf(y2) else y2
    return rectangle_mass(x1, a2, y1, b2)


def rectangle_mass_quadrature(a1, a2, b1, b2, epsabs=1e-13) -> float:
    """Adaptive 2-D quadrature of |u-v|^-2 over the rectangle (oracle path)."""
    from scipy.integrate import dblquad

    val, _ = dblquad(
        lambda v, u: 1.0 / (u - v) ** 2, a1, a2, b1, b2,
        epsabs=epsabs, epsrel=1e-11,
    )
    return val


def edge_probability(params: LrpParams, d: int) -> float:
    """P[pair at distance d is an edge]: 1 for d = 1, else 1 - (1 - 1/d^2)^beta."""
    if d < 1:
        raise InvalidArgument(f"distance must be >= 1, got {d}")
    if d == 1:
        return 1.0
    return -math.expm1(params.beta * math.log1p(-1.0 / (float(d) * float(d))))


def rectangle_no_edge_probability(params: LrpParams, a1, a2, b1, b2) -> float:
    """exp(-beta * mass) for one continuous rectangle: P[no edge joins the sides]."""
    m = rectangle_mass(a1, a2, b1, b2)
    if math.isinf(m):
        raise DivergentIntegral("rectangle carries infinite mass")
    return math.exp(-params.beta * m)


# ---------------------------------------------------------------------------
# tail scans: exact per-vertex edge counts into a half-infinite region
# ---------------------------------------------------------------------------

def _no_edge_beyond(beta: float, d: int) -> float:
    """P[no long edge at any distance >= d] = ((d-1)/d)^beta, d >= 2."""
    return math.exp(beta * math.log1p(-1.0 / d))


def _tail_distances(beta, d0, rng, eps, first_u=None):
    """Yield edge distances >= d0 (>= 2) scanning outward with inverse-CDF jumps.

    Termination draws are exact; the eps guard additionally truncates once the
    residual any-edge mass drops below eps (documented tail control).
    """
    d = d0
    while True:
        c = _no_edge_beyond(beta, d)
        if 1.0 - c < eps:
            return
        u = rng.random() if first_u is None else first_u
        first_u = None
        if u <= c:
            return
        # next edge distance T: P[T >= t] = ((d-1)/d * t/(t-1))^beta
        log_rho = math.log(u) / beta - math.log1p(-1.0 / d)
        rho = math.exp(log_rho)
        if rho <= 1.0:
            t = d
        else:
            t_real = rho / (rho - 1.0)
            if not math.isfinite(t_real) or t_real > 1e15:
                return
            t = max(d, int(t_real))
        yield t
        d = t + 1


def sample_boundary_multiplicity(
    params: LrpParams,
    v: int,
    region: tuple[float, float],
    rng: np.random.Generator | None = None,
    excluded_u: tuple[tuple[float, float], ...] = (),
) -> int:
    """Exact count of u in the half-infinite region with an edge <u, v>.

    region is (a, b) with exactly one bound infinite, inclusive finite end.
    The count includes the forced nearest-neighbor edge when the region is
    adjacent to v.  excluded_u lists integer intervals inside the region whose
    pairs with v are conditioned absent (edges landing there are dropped,
    which is exact by independence).
    """
    a, b = region
    if a <= v <= b:
        raise InvalidArgument("vertex lies inside the region")
    if rng is None:
        rng = spawn_rng(params.seed, _KIND_GENERIC, v)
    if math.isinf(a) and math.isinf(b):
        raise InvalidArgument("region must be half-infinite, not all of Z")
    left = math.isinf(a)  # region extends to -inf, v sits right of it
    bound = b if left else a
    dist = (v - bound) if left else (bound - v)
    if dist < 1:
        raise InvalidArgument("region must not touch v")

    def u_of(dd):
        return v - dd if left else v + dd

    def excluded(uu):
        return any(lo <= uu <= hi for lo, hi in excluded_u)

    count = 0
    if dist == 1:
        count += 1  # forced NN edge, never conditioned
    d0 = max(2, dist)
    for t in _tail_distances(params.beta, d0, rng, params.truncation_eps):
        if not excluded(u_of(t)):
            count += 1
    return count


# ---------------------------------------------------------------------------
# sampled windows
# ---------------------------------------------------------------------------

def _contains(iv: tuple[float, float], x: int) -> bool:
    return iv[0] <= x <= iv[1]


def _pair_excluded(u: int, v: int, rects) -> bool:
    for A, B in rects:
        if (_contains(A, u) and _contains(B, v)) or (_contains(A, v) and _contains(B, u)):
            return True
    return False


@dataclass
class LrpWindow:
    """One sampled edge configuration on [lo, hi] plus condensed boundary data.

    Nearest-neighbor adjacency is total and implicit.  long_edges holds the
    sampled pairs with both endpoints in the window and distance >= 2.
    bdy_left[v] / bdy_right[v] count all edges from v into (-inf, lo-1] and
    [hi+1, +inf) respectively (forced NN edge included when adjacent).
    excluded lists vertex-pair rectangles conditioned to contain no edges.
    """

    lo: int
    hi: int
    long_edges: frozenset
    bdy_left: dict
    bdy_right: dict
    excluded: tuple
    params: LrpParams
    replica_id: int = 0
    _eu: np.ndarray = field(default=None, repr=False, compare=False)
    _ev: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._eu is None:
            if self.long_edges:
                arr = np.array(sorted(self.long_edges), dtype=np.int64)
                self._eu, self._ev = arr[:, 0], arr[:, 1]
            else:
                self._eu = np.empty(0, dtype=np.int64)
                self._ev = np.empty(0, dtype=np.int64)

    # -- queries ---------------------------------------------------------
    @property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self._eu, self._ev

    @property
    def boundary_multiplicity(self) -> dict:
        return {"left": dict(self.bdy_left), "right": dict(self.bdy_right)}

    def count_between(self, I: tuple[float, float], J: tuple[float, float],
                      include_nn: bool = False) -> int:
        """Number of edges with one endpoint in integer interval I, other in J.

        I and J must be disjoint.  A side reaching past a window end must
        cover the whole corresponding tail region (the per-vertex counts are
        aggregates and cannot be split).  NN pairs are counted only when
        include_nn is set; sides at gap >= 2 never contain one.
        """
        (i1, i2), (j1, j2) = I, J
        if i1 > i2 or j1 > j2:
            raise InvalidArgument("interval bounds out of order")
        if not (i2 < j1 or j2 < i1):
            raise InvalidArgument("intervals must be disjoint")
        if i1 > j1:  # orient I left of J
            (i1, i2), (j1, j2) = (j1, j2), (i1, i2)
        if math.isinf(i1) and math.isinf(j2):
            raise UnsupportedGeometry("both sides unbounded")
        total = 0
        eu, ev = self._eu, self._ev
        # window-internal long edges (either orientation)
        if eu.size:
            m = ((eu >= i1) & (eu <= i2) & (ev >= j1) & (ev <= j2)) | (
                (eu >= j1) & (eu <= j2) & (ev >= i1) & (ev <= i2))
            total += int(np.count_nonzero(m))
        # tails
        if math.isinf(i1) or i1 < self.lo:
            if math.isinf(i1):
                if i2 < self.lo - 1:
                    raise UnsupportedGeometry("left side must cover the left tail")
                for v, c in self.bdy_left.items():
                    if j1 <= v <= j2:
                        total += c
            else:
                raise UnsupportedGeometry("finite side extends past the window")
        if math.isinf(j2) or j2 > self.hi:
            if math.isinf(j2):
                if j1 > self.hi + 1:
                    raise UnsupportedGeometry("right side must cover the right tail")
                for v, c in self.bdy_right.items():
                    if i1 <= v <= i2:
                        total += c
            else:
                raise UnsupportedGeometry("finite side extends past the window")
        if include_nn and j1 - i2 == 1:
            u, v = int(i2), int(j1)
            if self.lo <= u and v <= self.hi:
                total += 1  # in-window NN pair; tail NN already in the counts
        return total

    def exists_between(self, I, J) -> bool:
        return self.count_between(I, J) > 0

    # -- serialization ----------------------------------------------------
    def to_json(self) -> str:
        obj = {
            "lo": self.lo,
            "hi": self.hi,
            "long_edges": [list(e) for e in sorted(self.long_edges)],
            "boundary": {
                "left": {str(v): c for v, c in sorted(self.bdy_left.items())},
                "right": {str(v): c for v, c in sorted(self.bdy_right.items())},
            },
            "excluded": [[list(a), list(b)] for a, b in self.excluded],
            "beta": self.params.beta,
            "seed": self.params.seed,
            "replica_id": self.replica_id,
        }
        return json.dumps(obj, allow_nan=True)

    @classmethod
    def from_json(cls, s: str) -> "LrpWindow":
        o = json.loads(s)
        return cls(
            lo=o["lo"],
            hi=o["hi"],
            long_edges=frozenset(tuple(e) for e in o["long_edges"]),
            bdy_left={int(k): v for k, v in o["boundary"]["left"].items()},
            bdy_right={int(k): v for k, v in o["boundary"]["right"].items()},
            excluded=tuple((tuple(a), tuple(b)) for a, b in o["excluded"]),
            params=LrpParams(beta=o["beta"], seed=o["seed"]),
            replica_id=o["replica_id"],
        )


def mirror_window(w: LrpWindow) -> LrpWindow:
    """Reflect a window through the origin: vertex x -> -x, tails swapped."""
    edges = frozenset((-v, -u) for (u, v) in w.long_edges)
    return LrpWindow(
        lo=-w.hi, hi=-w.lo, long_edges=edges,
        bdy_left={-v: c for v, c in w.bdy_right.items()},
        bdy_right={-v: c for v, c in w.bdy_left.items()},
        excluded=tuple(((-a[1], -a[0]), (-b[1], -b[0])) for a, b in w.excluded),
        params=w.params, replica_id=w.replica_id,
    )


def _validate_excluded(excluded) -> tuple:
    """Exclusion rectangles condition *long* pairs only; p_1 = 1 is total."""
    rects = []
    for A, B in excluded:
        a = (float(A[0]), float(A[1]))
        b = (float(B[0]), float(B[1]))
        if a[0] > a[1] or b[0] > b[1]:
            raise InvalidArgument("excluded rectangle bounds out of order")
        rects.append((a, b))
    return tuple(rects)


def sample_window(
    params: LrpParams,
    lo: int,
    hi: int,
    excluded=(),
    rng: np.random.Generator | None = None,
    replica_id: int = 0,
) -> LrpWindow:
    """Sample one window exactly.

    Long pairs are realized by Poisson superposition: per-pair presence is
    1 - exp(-beta * m(d)), so the edge set coincides with the cells hit by a
    Poisson field of intensity beta |u-v|^-2, sampled here per distance class
    and de-duplicated.  Expected work is O(beta * (hi - lo)).  Pairs inside
    `excluded` rectangles are dropped, which conditions exactly on the
    no-edge event by independence.  Boundary multiplicities are sampled for
    every vertex toward both tail regions.
    """
    if hi <= lo:
        raise InvalidArgument("window must satisfy hi > lo")
    rects = _validate_excluded(excluded)
    if rng is None:
        rng = spawn_rng(params.seed, _KIND_WINDOW, replica_id)
    m = hi - lo + 1
    eu = np.empty(0, dtype=np.int64)
    ev = np.empty(0, dtype=np.int64)
    if m >= 3:
        d = np.arange(2, m)
        cell = -np.log1p(-1.0 / (d.astype(float) ** 2))
        counts = (m - d).astype(float)
        w = counts * cell
        lam = params.beta * float(w.sum())
        t = int(rng.poisson(lam))
        if t:
            cw = np.cumsum(w)
            cw /= cw[-1]
            di = np.searchsorted(cw, rng.random(t), side="right")
            di = np.minimum(di, d.size - 1)
            dd = d[di]
            off = np.floor(rng.random(t) * counts[di]).astype(np.int64)
            us = lo + off
            vs = us + dd
            if rects:
                keep = np.ones(t, dtype=bool)
                for (a1, a2), (b1, b2) in rects:
                    keep &= ~(((us >= a1) & (us <= a2) & (vs >= b1) & (vs <= b2))
                              | ((us >= b1) & (us <= b2) & (vs >= a1) & (vs <= a2)))
                us, vs = us[keep], vs[keep]
            key = np.unique((us - lo) * np.int64(m) + (vs - lo))
            eu = lo + (key // m)
            ev = lo + (key % m)

    bdy_left = _sample_boundary_side(params, lo, hi, rects, rng, left=True)
    bdy_right = _sample_boundary_side(params, lo, hi, rects, rng, left=False)

    return LrpWindow(
        lo=lo, hi=hi,
        long_edges=frozenset(zip(eu.tolist(), ev.tolist())),
        bdy_left=bdy_left, bdy_right=bdy_right,
        excluded=rects, params=params, replica_id=replica_id,
        _eu=eu, _ev=ev,
    )


def _sample_boundary_side(params, lo, hi, rects, rng, left: bool) -> dict:
    """Counts v -> #edges into the tail region on one side, for all window v.

    Vertices without exclusions use a vectorized any-edge Bernoulli and only
    run the jump scan conditionally on a hit; vertices whose tail pairs are
    partially excluded run the plain scan with exact thinning.
    """
    beta = params.beta
    eps = params.truncation_eps
    verts = np.arange(lo, hi + 1)
    dist = (verts - (lo - 1)) if left else ((hi + 1) - verts)
    d0 = np.maximum(2, dist).astype(float)
    p_any = -np.expm1(beta * np.log1p(-1.0 / d0))
    hit = rng.random(verts.size) < p_any

    region = (-INF, float(lo - 1)) if left else (float(hi + 1), INF)

    def exclusions_for(v):
        out = []
        for A, B in rects:
            for side, other in ((A, B), (B, A)):
                if _contains(side, v):
                    l_ = max(other[0], region[0])
                    h_ = min(other[1], region[1])
                    if l_ <= h_:
                        out.append((l_, h_))
        return tuple(out)

    out = {}
    if not rects:
        nn_v = int(verts[0] if left else verts[-1])  # dist == 1 vertex
        out[nn_v] = 1
        for idx in np.nonzero(hit)[0].tolist():
            v = int(verts[idx])
            dmin = int(dist[idx])
            # first edge drawn conditional on existence, rest unconditional
            c0 = _no_edge_beyond(beta, max(2, dmin))
            first_u = c0 + rng.random() * (1.0 - c0)
            count = sum(1 for _ in _tail_distances(beta, max(2, dmin), rng, eps,
                                                   first_u=first_u))
            if count:
                out[v] = out.get(v, 0) + count
        return out

    for idx, v in enumerate(verts.tolist()):
        exc = exclusions_for(v)
        count = 0
        dmin = int(dist[idx])

        def u_of(dd, _v=v):
            return _v - dd if left else _v + dd

        def is_exc(uu, _e=exc):
            return any(a <= uu <= b for a, b in _e)

        if dmin == 1:
            count += 1   # forced NN edge, never conditioned
        if exc:
            for t in _tail_distances(beta, max(2, dmin), rng, eps):
                if not is_exc(u_of(t)):
                    count += 1
        elif hit[idx]:
            c0 = _no_edge_beyond(beta, max(2, dmin))
            first_u = c0 + rng.random() * (1.0 - c0)
            count += sum(1 for _ in _tail_distances(beta, max(2, dmin), rng, eps,
                                                    first_u=first_u))
        if count:
            out[int(v)] = count
    return out
