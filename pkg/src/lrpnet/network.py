"""Condensed electric networks from sampled windows, and resistance solvers.

Terminal sets (finite vertex sets, half-lines, or interval complements) are
merged into supernodes "SRC" / "SNK"; the per-vertex boundary multiplicities
of a window become parallel unit conductances to the matching supernode.
Merging is exact: a unit flow may emit from / absorb into any terminal
vertex for free, so the optimal flow never pays for transport inside a
terminal set, and the condensed problem attains the defining infimum.

Constrained variants remove a rectangle union of edges before condensing;
the removed-edge graph is an ordinary network, so every classical identity
(Thomson principle, Rayleigh monotonicity, series/parallel laws) applies.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (InvalidArgument, InvalidFlow, SolverFailure,
                     UnsupportedGeometry)
from .model import INF, LrpWindow

SRC = "SRC"
SNK = "SNK"

# The direct path must cover the full desk-scale grid: the point window at
# n = 13 grounds to 2^14 + 1 unknowns, so the cap sits above 2^14.
DIRECT_SOLVE_MAX = 40_000
CG_RTOL = 1e-10
ORACLE_MAX_VERTICES = 64


def _label_sort_key(x):
    return (0, x, "") if isinstance(x, int) else (1, 0, str(x))


# ---------------------------------------------------------------------------
# terminal region specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """Integer interval [lo, hi], ends inclusive, +-inf allowed."""
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise InvalidArgument("interval bounds out of order")

    def contains(self, x) -> np.ndarray:
        return (np.asarray(x) >= self.lo) & (np.asarray(x) <= self.hi)

    def covers(self, lo, hi) -> bool:
        return self.lo <= lo and hi <= self.hi

    def disjoint(self, lo, hi) -> bool:
        return hi < self.lo or self.hi < lo


@dataclass(frozen=True)
class Complement:
    """Z minus [lo, hi]."""
    lo: int
    hi: int

    def contains(self, x) -> np.ndarray:
        return (np.asarray(x) < self.lo) | (np.asarray(x) > self.hi)

    def covers(self, lo, hi) -> bool:
        return hi < self.lo or lo > self.hi

    def disjoint(self, lo, hi) -> bool:
        return self.lo <= lo and hi <= self.hi


@dataclass(frozen=True)
class Vertices:
    """Explicit finite vertex set."""
    members: frozenset

    def contains(self, x) -> np.ndarray:
        return np.isin(np.asarray(x), list(self.members))

    def covers(self, lo, hi) -> bool:
        return False

    def disjoint(self, lo, hi) -> bool:
        return all(v < lo or v > hi for v in self.members)


def as_region(spec):
    if isinstance(spec, (Interval, Complement, Vertices)):
        return spec
    if isinstance(spec, (set, frozenset, list)) and all(isinstance(v, int) for v in spec):
        return Vertices(frozenset(spec))
    if isinstance(spec, tuple) and len(spec) == 2:
        return Interval(float(spec[0]), float(spec[1]))
    raise InvalidArgument(f"cannot interpret terminal region {spec!r}")


# ---------------------------------------------------------------------------
# condensed network
# ---------------------------------------------------------------------------

@dataclass
class CondensedNetwork:
    """Finite weighted multigraph with supernode terminals, parallel edges merged."""

    labels: tuple                      # vertex labels; SRC and SNK always last two
    edge_u: np.ndarray                 # index arrays, u < v by index
    edge_v: np.ndarray
    cond: np.ndarray                   # positive conductances
    source_idx: int
    sink_idx: int
    connected: bool                    # terminals joined in the active graph
    index: dict = field(repr=False, default=None)

    def __post_init__(self):
        if self.index is None:
            self.index = {lab: i for i, lab in enumerate(self.labels)}

    @property
    def n_vertices(self) -> int:
        return len(self.labels)

    @property
    def terminals(self) -> tuple:
        return (self.labels[self.source_idx], self.labels[self.sink_idx])

    def conductance_map(self) -> dict:
        out = {}
        for u, v, c in zip(self.edge_u.tolist(), self.edge_v.tolist(), self.cond.tolist()):
            a, b = self.labels[u], self.labels[v]
            if _label_sort_key(a) > _label_sort_key(b):
                a, b = b, a
            out[(a, b)] = out.get((a, b), 0.0) + c
        return out

    def validate(self):
        if np.any(self.cond <= 0):
            raise InvalidArgument("conductances must be positive")
        if self.source_idx == self.sink_idx:
            raise InvalidArgument("source and sink coincide")


def _edges_connected(n, eu, ev, a, b) -> bool:
    if eu.size == 0:
        return False
    g = sp.coo_matrix((np.ones(eu.size), (eu, ev)), shape=(n, n))
    ncomp, lab = sp.csgraph.connected_components(g, directed=False)
    return lab[a] == lab[b]


def condense(window: LrpWindow, source, sink, forbidden=(), restrict=None) -> CondensedNetwork:
    """Build the condensed network for (source, sink) on a sampled window.

    Window vertices inside a terminal region merge into its supernode; other
    window vertices stay explicit.  Boundary multiplicities attach a vertex to
    the supernode whose region covers the whole tail; tails covered by neither
    terminal are dropped (dead ends carry no flow in the optimum, so the
    resistance is unchanged).  `forbidden` removes every edge matching one of
    the rectangles (pairs of Interval), realizing zero-flow constraints as
    plain edge deletions.  `restrict` optionally drops explicit vertices
    outside an (lo, hi) range the caller knows to be irrelevant.
    """
    src = as_region(source)
    snk = as_region(sink)
    forb = tuple((as_region(A), as_region(B)) for A, B in forbidden)
    for A, B in forb:
        if not (isinstance(A, Interval) and isinstance(B, Interval)):
            raise InvalidArgument("forbidden rectangles must be interval pairs")

    verts = np.arange(window.lo, window.hi + 1)
    in_src = src.contains(verts)
    in_snk = snk.contains(verts)
    if np.any(in_src & in_snk):
        raise InvalidArgument("source and sink regions overlap")
    if isinstance(src, Vertices) and not all(
            window.lo <= v <= window.hi for v in src.members):
        raise UnsupportedGeometry("explicit source vertices must lie in the window")

    keep = ~(in_src | in_snk)
    if restrict is not None:
        rlo, rhi = restrict
        keep &= (verts >= rlo) & (verts <= rhi)
    explicit = verts[keep]
    labels = tuple(explicit.tolist()) + (SRC, SNK)
    n = len(labels)
    isrc, isnk = n - 2, n - 1

    def classify(arr):
        """0..n-1 explicit index, -2 src, -3 snk, -1 dropped."""
        out = np.full(arr.shape, -1, dtype=np.int64)
        out[src.contains(arr)] = -2
        out[snk.contains(arr)] = -3
        pos = np.searchsorted(explicit, arr)
        ok = (pos < explicit.size)
        ok[ok] = explicit[pos[ok]] == arr[ok]
        out[ok] = pos[ok]
        return out

    def allowed(u_arr, v_arr):
        m = np.ones(u_arr.shape, dtype=bool)
        for A, B in forb:
            m &= ~((A.contains(u_arr) & B.contains(v_arr))
                   | (A.contains(v_arr) & B.contains(u_arr)))
        return m

    seg_a, seg_b, seg_c = [], [], []

    def add_batch(ca, cb, c):
        fa = np.where(ca == -2, isrc, np.where(ca == -3, isnk, ca))
        fb = np.where(cb == -2, isrc, np.where(cb == -3, isnk, cb))
        ok = (ca != -1) & (cb != -1) & (fa != fb)
        if np.any(ok):
            seg_a.append(np.minimum(fa[ok], fb[ok]))
            seg_b.append(np.maximum(fa[ok], fb[ok]))
            seg_c.append(np.broadcast_to(c, fa.shape)[ok].astype(float))

    # nearest-neighbor backbone
    nn_u = verts[:-1]
    nn_v = verts[1:]
    m = allowed(nn_u, nn_v)
    # a forbidden rect may never contain an NN pair (p_1 = 1); flag it
    if not np.all(m):
        raise InvalidArgument("forbidden rectangle contains a nearest-neighbor pair")
    add_batch(classify(nn_u), classify(nn_v), 1.0)

    # sampled long edges
    eu, ev = window.edge_arrays
    if eu.size:
        m = allowed(eu, ev)
        add_batch(classify(eu[m]), classify(ev[m]), 1.0)

    # tail attachments
    for side, bdy in (("left", window.bdy_left), ("right", window.bdy_right)):
        if side == "left":
            rlo, rhi = -INF, window.lo - 1
        else:
            rlo, rhi = window.hi + 1, INF
        if src.covers(rlo, rhi):
            region_code = -2
        elif snk.covers(rlo, rhi):
            region_code = -3
        elif src.disjoint(rlo, rhi) and snk.disjoint(rlo, rhi):
            region_code = -1  # dead tail, dropped
        else:
            raise UnsupportedGeometry(
                f"{side} tail region partially overlaps a terminal; widen the window")
        if region_code == -1 or not bdy:
            continue
        bverts = np.array(sorted(bdy.keys()), dtype=np.int64)
        counts = np.array([bdy[int(v)] for v in bverts], dtype=float)
        # forbidden check at (vertex x whole-tail) granularity
        keep_b = np.ones(bverts.size, dtype=bool)
        for A, B in forb:
            for one, other in ((A, B), (B, A)):
                inside = one.contains(bverts)
                if not np.any(inside):
                    continue
                if other.covers(rlo, rhi):
                    keep_b &= ~inside
                elif not other.disjoint(rlo, rhi):
                    raise UnsupportedGeometry(
                        "forbidden rectangle splits a tail region; widen the window")
        if np.any(keep_b):
            bc = classify(bverts[keep_b])
            add_batch(bc, np.full(bc.shape, region_code, dtype=np.int64),
                      counts[keep_b])

    if seg_a:
        aa = np.concatenate(seg_a)
        bb = np.concatenate(seg_b)
        cc = np.concatenate(seg_c)
        key = aa * np.int64(n) + bb
        uniq, inv = np.unique(key, return_inverse=True)
        cond = np.zeros(uniq.size)
        np.add.at(cond, inv, cc)
        edge_u = (uniq // n).astype(np.int64)
        edge_v = (uniq % n).astype(np.int64)
    else:
        edge_u = np.empty(0, dtype=np.int64)
        edge_v = np.empty(0, dtype=np.int64)
        cond = np.empty(0)

    connected = _edges_connected(n, edge_u, edge_v, isrc, isnk)
    return CondensedNetwork(
        labels=labels, edge_u=edge_u, edge_v=edge_v, cond=cond,
        source_idx=isrc, sink_idx=isnk, connected=connected,
    )


def network_from_conductances(cond_map: dict, source, sink) -> CondensedNetwork:
    """Assemble a network directly from a {(u, v): conductance} map (tests, oracles)."""
    labs = sorted({x for e in cond_map for x in e} | {source, sink}, key=_label_sort_key)
    idx = {l: i for i, l in enumerate(labs)}
    acc = {}
    for (a, b), c in cond_map.items():
        if c <= 0:
            raise InvalidArgument("conductances must be positive")
        ia, ib = idx[a], idx[b]
        if ia == ib:
            raise InvalidArgument("self-loop conductance")
        if ia > ib:
            ia, ib = ib, ia
        acc[(ia, ib)] = acc.get((ia, ib), 0.0) + c
    keys = sorted(acc.keys())
    eu = np.array([k[0] for k in keys], dtype=np.int64)
    ev = np.array([k[1] for k in keys], dtype=np.int64)
    cc = np.array([acc[k] for k in keys])
    isrc, isnk = idx[source], idx[sink]
    return CondensedNetwork(
        labels=tuple(labs), edge_u=eu, edge_v=ev, cond=cc,
        source_idx=isrc, sink_idx=isnk,
        connected=_edges_connected(len(labs), eu, ev, isrc, isnk),
    )


# ---------------------------------------------------------------------------
# flows and results
# ---------------------------------------------------------------------------

@dataclass
class FlowField:
    """Antisymmetric edge flow; values[(a, b)] with a < b in label order is flow a->b."""

    values: dict
    amount: float

    def value(self, a, b) -> float:
        if _label_sort_key(a) <= _label_sort_key(b):
            return self.values.get((a, b), 0.0)
        return -self.values.get((b, a), 0.0)

    def net_out(self, v) -> float:
        s = 0.0
        for (a, b), f in self.values.items():
            if a == v:
                s += f
            elif b == v:
                s -= f
        return s

    def energy(self, conductances: dict) -> float:
        e = 0.0
        for k, f in self.values.items():
            c = conductances.get(k)
            if c is None:
                a, b = k
                c = conductances.get((b, a))
            if c is None:
                raise InvalidFlow(f"flow on non-edge {k}")
            e += f * f / c
        return e

    def support(self):
        return [k for k, f in self.values.items() if f != 0.0]

    def to_edge_list(self):
        return [[a, b, f] for (a, b), f in sorted(
            self.values.items(), key=lambda kv: (_label_sort_key(kv[0][0]),
                                                 _label_sort_key(kv[0][1])))]


@dataclass
class ResistanceResult:
    """Resistance value (possibly +inf), optional unit flow and potentials."""

    value: float
    flow: FlowField | None = None
    potentials: dict | None = None
    iterations: int = 0
    residual: float = 0.0

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def to_json(self) -> str:
        return json.dumps({
            "value": "inf" if math.isinf(self.value) else self.value,
            "iterations": self.iterations,
            "residual": self.residual,
        })


def effective_resistance(net: CondensedNetwork, want_flow: bool = True) -> ResistanceResult:
    """Grounded-Laplacian solve: unit current SRC -> SNK, R = potential at SRC.

    Direct sparse factorization up to DIRECT_SOLVE_MAX vertices, then
    diagonally preconditioned CG (relative residual CG_RTOL, 10 n iterations).
    Returns value = +inf when the terminals are disconnected.
    """
    net.validate()
    if not net.connected:
        return ResistanceResult(value=INF)

    n = net.n_vertices
    eu, ev, c = net.edge_u, net.edge_v, net.cond
    # restrict to the terminal component (floating pieces make L_g singular)
    g = sp.coo_matrix((np.ones(eu.size), (eu, ev)), shape=(n, n))
    ncomp, comp = sp.csgraph.connected_components(g, directed=False)
    keepc = comp[net.source_idx]
    mask = (comp[eu] == keepc)
    eu, ev, c = eu[mask], ev[mask], c[mask]
    vkeep = np.where(comp == keepc)[0]
    remap = -np.ones(n, dtype=np.int64)
    remap[vkeep] = np.arange(vkeep.size)
    eu, ev = remap[eu], remap[ev]
    isrc = int(remap[net.source_idx])
    isnk = int(remap[net.sink_idx])
    nn = vkeep.size

    # grounded Laplacian: drop the sink row/column
    order = np.concatenate([np.arange(isnk), np.arange(isnk + 1, nn)])
    pos = -np.ones(nn, dtype=np.int64)
    pos[order] = np.arange(nn - 1)
    rows, cols, vals = [], [], []
    for a, b, w in ((eu, ev, c),):
        pa, pb = pos[a], pos[b]
        both = (pa >= 0) & (pb >= 0)
        rows.append(pa[both]); cols.append(pb[both]); vals.append(-w[both])
        rows.append(pb[both]); cols.append(pa[both]); vals.append(-w[both])
        for p, q in ((pa, pb), (pb, pa)):
            on = p >= 0
            rows.append(p[on]); cols.append(p[on]); vals.append(w[on])
    L = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nn - 1, nn - 1)).tocsc()
    b = np.zeros(nn - 1)
    b[pos[isrc]] = 1.0

    if nn - 1 <= DIRECT_SOLVE_MAX:
        phi = spla.splu(L).solve(b)
        iters = 1
    else:
        dinv = 1.0 / L.diagonal()
        M = spla.LinearOperator(L.shape, matvec=lambda x: dinv * x)
        it = [0]

        def cb(_):
            it[0] += 1

        phi, info = spla.cg(L, b, rtol=CG_RTOL, atol=0.0,
                            maxiter=10 * (nn - 1), M=M, callback=cb)
        iters = it[0]
        if info != 0:
            res = float(np.linalg.norm(L @ phi - b))
            raise SolverFailure(f"CG did not converge (info={info}, residual={res:.3e})")

    residual = float(np.linalg.norm(L @ phi - b) / np.linalg.norm(b))
    full_phi = np.zeros(nn)
    full_phi[order] = phi
    value = float(full_phi[isrc])

    flow = None
    potentials = None
    if want_flow:
        fvals = c * (full_phi[eu] - full_phi[ev])
        values = {}
        for a, b2, f in zip(eu.tolist(), ev.tolist(), fvals.tolist()):
            la, lb = net.labels[vkeep[a]], net.labels[vkeep[b2]]
            if _label_sort_key(la) > _label_sort_key(lb):
                la, lb = lb, la
                f = -f
            if f != 0.0:
                values[(la, lb)] = values.get((la, lb), 0.0) + f
        flow = FlowField(values=values, amount=1.0)
        potentials = {net.labels[vkeep[i]]: float(full_phi[i]) for i in range(nn)}
    return ResistanceResult(value=value, flow=flow, potentials=potentials,
                            iterations=iters, residual=residual)


def brute_force_resistance(net: CondensedNetwork) -> float:
    """Independent oracle: star-mesh elimination on the dense conductance matrix.

    Eliminating vertex k replaces its star by the mesh c_ik * c_jk / sum(c_k).
    No linear system is solved and no iterative tolerance enters.
    """
    net.validate()
    n = net.n_vertices
    if n > ORACLE_MAX_VERTICES:
        raise InvalidArgument(f"oracle capped at {ORACLE_MAX_VERTICES} vertices")
    C = np.zeros((n, n))
    for u, v, c in zip(net.edge_u, net.edge_v, net.cond):
        C[u, v] += c
        C[v, u] += c
    keep = {net.source_idx, net.sink_idx}
    for k in range(n):
        if k in keep:
            continue
        s = C[k].sum()
        if s <= 0.0:
            continue  # isolated vertex
        row = C[k].copy()
        C += np.outer(row, row) / s
        np.fill_diagonal(C, 0.0)
        C[k, :] = 0.0
        C[:, k] = 0.0
    c_st = C[net.source_idx, net.sink_idx]
    if c_st <= 1e-300:
        return INF
    return 1.0 / c_st


# ---------------------------------------------------------------------------
# flow decomposition into entry-grouped self-avoiding path flows
# ---------------------------------------------------------------------------

def flow_decompose(flow: FlowField, entry_points: list) -> list:
    """Split a conserved flow into per-entry components theta_i.

    Paths are peeled off greedily from the (unique) net source: at each
    vertex, follow the outgoing edge with the largest remaining flow, ties
    toward the smaller vertex; cycles met on the way are cancelled first, so
    every extracted path is self-avoiding and keeps the parent's edge signs
    (unidirectionality).  Components are grouped by the path's first vertex
    after the source, which must appear in entry_points; the returned list is
    parallel to entry_points and sums to the input flow.
    """
    tol = 1e-12 * max(1.0, abs(flow.amount))
    res = {k: v for k, v in flow.values.items() if abs(v) > 0.0}

    nets = {}
    for (a, b), f in res.items():
        nets[a] = nets.get(a, 0.0) + f
        nets[b] = nets.get(b, 0.0) - f
    sources = [v for v, s in nets.items() if s > tol]
    sinks = [v for v, s in nets.items() if s < -tol]
    if len(sources) != 1 or len(sinks) != 1:
        raise InvalidFlow(
            f"expected one source and one sink, found {len(sources)}/{len(sinks)}")
    source, sink = sources[0], sinks[0]
    for v, s in nets.items():
        if v not in (source, sink) and abs(s) > tol:
            raise InvalidFlow(f"flow not conserved at {v!r} (net {s:.3e})")

    # outgoing adjacency with positive residual
    out = {}

    def f_of(a, b):
        if (a, b) in res:
            return res[(a, b)]
        if (b, a) in res:
            return -res[(b, a)]
        return 0.0

    for (a, b), f in res.items():
        if f > 0:
            out.setdefault(a, set()).add(b)
        elif f < 0:
            out.setdefault(b, set()).add(a)

    def next_hop(x):
        best = None
        for y in out.get(x, ()):  # pick max residual, tie -> smaller label
            fxy = f_of(x, y)
            if fxy <= tol:
                continue
            if best is None or fxy > best[0] + 1e-15 or (
                    abs(fxy - best[0]) <= 1e-15
                    and _label_sort_key(y) < _label_sort_key(best[1])):
                best = (fxy, y)
        return best

    def reduce_edge(a, b, amt):
        if (a, b) in res:
            res[(a, b)] -= amt
            left = res[(a, b)]
        else:
            res[(b, a)] += amt
            left = -res[(b, a)]
        if left <= tol:
            out.get(a, set()).discard(b)

    entries = list(entry_points)
    entry_idx = {z: i for i, z in enumerate(entries)}
    comp_vals = [dict() for _ in entries]
    comp_amt = [0.0 for _ in entries]

    guard = 4 * len(res) + 16
    while guard > 0:
        guard -= 1
        hop = next_hop(source)
        if hop is None:
            break
        path = [source]
        seen = {source: 0}
        while True:
            x = path[-1]
            if x == sink:
                break
            nh = next_hop(x)
            if nh is None:
                raise InvalidFlow(f"flow dead-ends at {x!r}")
            y = nh[1]
            if y in seen:  # cancel the cycle, keep walking from its base
                i = seen[y]
                cyc = path[i:] + [y]
                amt = min(f_of(cyc[j], cyc[j + 1]) for j in range(len(cyc) - 1))
                for j in range(len(cyc) - 1):
                    reduce_edge(cyc[j], cyc[j + 1], amt)
                for z in path[i + 1:]:
                    del seen[z]
                path = path[: i + 1]
                continue
            seen[y] = len(path)
            path.append(y)
        if len(path) < 2:
            break
        amt = min(f_of(path[j], path[j + 1]) for j in range(len(path) - 1))
        entry = path[1]
        if entry not in entry_idx:
            raise InvalidFlow(f"path enters at {entry!r}, not in entry_points")
        k = entry_idx[entry]
        comp_amt[k] += amt
        for j in range(len(path) - 1):
            a, b = path[j], path[j + 1]
            reduce_edge(a, b, amt)
            if _label_sort_key(a) <= _label_sort_key(b):
                comp_vals[k][(a, b)] = comp_vals[k].get((a, b), 0.0) + amt
            else:
                comp_vals[k][(b, a)] = comp_vals[k].get((b, a), 0.0) - amt
    else:
        raise InvalidFlow("flow decomposition did not terminate")

    return [FlowField(values=comp_vals[i], amount=comp_amt[i])
            for i in range(len(entries))]


# ---------------------------------------------------------------------------
# constrained-resistance builders (hat / tilde variants)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HatN:
    """Flows (-inf, 0] -> (N, +inf) forced through (0, N], N = 2^n."""
    n: int


@dataclass(frozen=True)
class HatInterval:
    """General constrained resistance between interval I1 and interval I2."""
    I1: tuple
    I2: tuple


@dataclass(frozen=True)
class TildeN:
    """Flows [-N, 0] -> (-inf, -N) forced through (0, N]; often infinite."""
    n: int


@dataclass(frozen=True)
class HalfExit:
    """Flows [-N, 0] -> complement of [-N, N], barred from exiting directly."""
    N: int


def _interval_pair_setup(I1, I2):
    """Source/sink/forbidden/restrict for the general two-interval variant."""
    (l1, h1), (l2, h2) = I1, I2
    if h1 < l2:
        L, R = (l1, h1), (l2, h2)
    elif h2 < l1:
        L, R = (l2, h2), (l1, h1)
    else:
        raise InvalidArgument("intervals must be disjoint")
    if R[0] - L[1] < 2:
        raise InvalidArgument("intervals must leave a nonempty gap")
    forbidden = [(Interval(-INF, L[1]), Interval(R[0], INF))]
    mid = Interval(L[1] + 1, R[0] - 1)
    if not math.isinf(L[0]):
        forbidden.append((Interval(-INF, L[0] - 1), mid))
    if not math.isinf(R[1]):
        forbidden.append((Interval(R[1] + 1, INF), mid))
    return Interval(*I1), Interval(*I2), tuple(forbidden), (L[0], R[1])


def hat_network(window: LrpWindow, spec) -> CondensedNetwork:
    """Condensed network for one of the constrained-resistance variants."""
    if isinstance(spec, HatN):
        N = 2 ** spec.n
        return condense(
            window,
            source=Interval(-INF, 0),
            sink=Interval(N + 1, INF),
            forbidden=[(Interval(-INF, 0), Interval(N + 1, INF))],
            restrict=(1, N),
        )
    if isinstance(spec, HatInterval):
        src, snk, forbidden, restrict = _interval_pair_setup(spec.I1, spec.I2)
        return condense(window, source=src, sink=snk,
                        forbidden=forbidden, restrict=restrict)
    if isinstance(spec, TildeN):
        N = 2 ** spec.n
        return condense(
            window,
            source=Interval(-N, 0),
            sink=Interval(-INF, -N - 1),
            forbidden=[
                (Interval(-N, 0), Interval(-INF, -N - 1)),
                (Interval(-N, 0), Interval(N + 1, INF)),
                (Interval(1, N), Interval(N + 1, INF)),
            ],
            restrict=(-N, N),
        )
    if isinstance(spec, HalfExit):
        N = spec.N
        return condense(
            window,
            source=Interval(-N, 0),
            sink=Complement(-N, N),
            forbidden=[
                (Interval(-N, 0), Interval(-INF, -N - 1)),
                (Interval(-N, 0), Interval(N + 1, INF)),
            ],
            restrict=(-N, N),
        )
    raise InvalidArgument(f"unknown hat spec {spec!r}")


def hat_resistance(window: LrpWindow, spec, want_flow: bool = False) -> ResistanceResult:
    """Constrained effective resistance per the given variant spec."""
    return effective_resistance(hat_network(window, spec), want_flow=want_flow)
