"""Spreading ("firework") process over nested dyadic blocks.

For an ascending index set S = {i_1 < ... < i_r}, block k in [2, r+1] is the
annulus between radii 2^(i_{k-1}+1) and 2^(i_k+1) (the outermost block r+1
extends to infinity).  Its reach L_k = k - s*, where s* is the smallest level
m in [1, k-1] whose central region receives an edge from the block (L_k = 0
when there is none); the tail events {L_k > s} then match the nested
rectangle family exactly, and the reaches are independent across blocks
because the blocks are disjoint edge sets.

The spread starts from the outermost block and iterates

    A_m = { s in S : some k in A_{m-1} has s in [k - L_k, k - 1] } \\ A_{m-1},

and M_r = min{ k : i_k in union A_m } with the seed index r+1 in the union,
so an edgeless sample gives M_r = r + 1.  Because each block covers a
contiguous run of levels below it, the covered set is a suffix [M_r, r] of
the levels: M_r = 1 if and only if every pair of S is covered, which is the
event whose probability decays geometrically in r (the joint goodness
failure {xi == 0 on S} coincides with it sample by sample).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import InvalidArgument
from .model import INF, LrpParams, LrpWindow, integer_interval_mass, spawn_rng


def _block_bounds(S, k):
    """Integer u-intervals of block k, left and right of the origin."""
    r = len(S)
    inner = 2 ** (S[k - 2] + 1)            # i_{k-1}, 1-based S
    if k == r + 1:
        left = (-INF, -inner - 1)
        right = (inner + 1, INF)
    else:
        outer = 2 ** (S[k - 1] + 1)        # i_k
        left = (-outer, -inner - 1)
        right = (inner + 1, outer)
    return left, right


def _level_regions(S, m):
    """Central integer regions at level m (paired with left / right blocks)."""
    a = 2 ** S[m - 1]
    b = 2 ** (S[m - 1] + 1)
    return (-a, b), (-b, a)


def block_level_mass(S, k: int, m: int) -> float:
    """Rectangle mass between block k and the level-m central regions."""
    left, right = _block_bounds(S, k)
    reg_l, reg_r = _level_regions(S, m)
    return (integer_interval_mass(left[0], left[1], reg_l[0], reg_l[1])
            + integer_interval_mass(reg_r[0], reg_r[1], right[0], right[1]))


def reach_tail_prob(params: LrpParams, S, k: int, s: int) -> float:
    """P[L_k > s]: an edge joins block k to the level-(k-s-1) regions."""
    S = _check_S(S)
    if not (2 <= k <= len(S) + 1):
        raise InvalidArgument("k out of range")
    if s < 0 or s > k - 1:
        raise InvalidArgument("s out of range")
    if s == k - 1:
        return 0.0
    return -math.expm1(-params.beta * block_level_mass(S, k, k - s - 1))


def _check_S(S):
    S = [int(x) for x in S]
    if not S or any(b <= a for a, b in zip(S, S[1:])) or S[0] < 1:
        raise InvalidArgument("S must be a nonempty ascending subset of N")
    return S


def sample_reach(params: LrpParams, S, k: int,
                 rng: np.random.Generator | None = None) -> int:
    """Draw L_k by inverse CDF over the nested tail events (one uniform)."""
    S = _check_S(S)
    if rng is None:
        rng = spawn_rng(params.seed, 401, k)
    u = rng.random()
    # L_k > s  iff  u < P[L_k > s]; tails decrease in s
    reach = 0
    for s in range(k - 1):
        if u < reach_tail_prob(params, S, k, s):
            reach = s + 1
        else:
            break
    return reach


@dataclass
class SpreadState:
    """One realization of the spreading process."""

    r: int
    S: list
    L: dict                 # k -> reach, k = 2..r+1
    A: list                 # newly covered level sets per step (seed omitted)
    covered: set            # covered levels within [1, r]
    M_r: int                # min covered index, r+1 for an empty spread

    @property
    def covers_all(self) -> bool:
        return self.M_r == 1


def spread_from_reaches(S, L: dict) -> SpreadState:
    """Deterministic cascade given reach values (pure; used by the oracle)."""
    S = _check_S(S)
    r = len(S)
    frontier = {r + 1}
    covered: set = set()
    steps = []
    while frontier:
        new = set()
        for k in frontier:
            reach = L.get(k, 0)
            for s in range(max(1, k - reach), k):
                if s not in covered:
                    new.add(s)
        if not new:
            break
        steps.append(new)
        covered |= new
        frontier = new
    m_r = min(covered) if covered else r + 1
    return SpreadState(r=r, S=list(S), L=dict(L), A=steps,
                       covered=covered, M_r=m_r)


def run_spread(params: LrpParams, S,
               rng: np.random.Generator | None = None) -> SpreadState:
    """Sample all reaches independently and run the cascade."""
    S = _check_S(S)
    if rng is None:
        rng = spawn_rng(params.seed, 402)
    L = {k: sample_reach(params, S, k, rng) for k in range(2, len(S) + 2)}
    return spread_from_reaches(S, L)


def reaches_from_window(window: LrpWindow, S) -> dict:
    """Reach values read off an actual sampled configuration.

    Couples the cascade with the goodness indicators of the same sample:
    level m is covered by block k exactly when the corresponding rectangle
    holds an edge of the window.
    """
    S = _check_S(S)
    L = {}
    for k in range(2, len(S) + 2):
        left, right = _block_bounds(S, k)
        reach = 0
        for m in range(1, k):
            reg_l, reg_r = _level_regions(S, m)
            if (window.exists_between(left, reg_l)
                    or window.exists_between(reg_r, right)):
                reach = k - m
                break
        L[k] = reach
    return L


def brute_force_spread(params: LrpParams, S) -> dict:
    """Exact law of M_r by enumerating all joint reach outcomes (r <= 5).

    Returns {"pmf": {value: prob}, "p_all_covered": float}; the pmf mass sums
    to one up to enumeration roundoff.
    """
    S = _check_S(S)
    r = len(S)
    if r > 5:
        raise InvalidArgument("exact enumeration capped at r = 5")
    per_k = []
    for k in range(2, r + 2):
        tails = [reach_tail_prob(params, S, k, s) for s in range(k)]
        pmf = []
        for ell in range(k):  # P[L_k = ell] = P[>ell-1] - P[>ell]
            hi = 1.0 if ell == 0 else tails[ell - 1]
            pmf.append(hi - tails[ell])
        per_k.append(pmf)
    law = {}
    p_all = 0.0
    for combo in product(*(range(len(p)) for p in per_k)):
        w = 1.0
        for (pmf, ell) in zip(per_k, combo):
            w *= pmf[ell]
        if w == 0.0:
            continue
        st = spread_from_reaches(S, {k + 2: ell for k, ell in enumerate(combo)})
        law[st.M_r] = law.get(st.M_r, 0.0) + w
        if st.covers_all:
            p_all += w
    return {"pmf": law, "p_all_covered": p_all}


@dataclass
class SpreadDecay:
    """Spread-through probabilities per r and the fitted geometric rate."""

    beta: float
    r_values: tuple
    replicas: int
    p_all: np.ndarray
    exact: dict              # r -> exact p_all for r <= 5
    kappa: float
    kappa_ci: tuple

    def csv_rows(self):
        rows = []
        for i, r in enumerate(self.r_values):
            rows.append({
                "r": r, "beta": self.beta, "replicas": self.replicas,
                "p_all_covered": self.p_all[i],
                "exact": self.exact.get(r, ""),
                "kappa_fit": self.kappa,
            })
        return rows


def spread_decay(params: LrpParams, r_values, replicas: int,
                 seed_key: int = 0) -> SpreadDecay:
    """Estimate P[spread covers all of S = {1..r}] per r and fit its decay rate.

    The fitted kappa is exp(slope) of log P against r with a bootstrap CI.
    """
    r_values = tuple(int(r) for r in r_values)
    p = np.zeros(len(r_values))
    for i, r in enumerate(r_values):
        rng = spawn_rng(params.seed, 403, seed_key, r)
        S = list(range(1, r + 1))
        hits = sum(run_spread(params, S, rng).covers_all for _ in range(replicas))
        p[i] = hits / replicas
    exact = {}
    for r in r_values:
        if r <= 5:
            exact[r] = brute_force_spread(params, list(range(1, r + 1)))["p_all_covered"]
    rs = np.array(r_values, dtype=float)
    ok = p > 0
    slope = np.polyfit(rs[ok], np.log(p[ok]), 1)[0]
    brng = np.random.default_rng(777)
    boots = []
    for _ in range(400):
        k = brng.binomial(replicas, p[ok])
        boots.append(np.polyfit(rs[ok], np.log(np.maximum(k, 1) / replicas), 1)[0])
    lo, hi = np.exp(np.quantile(boots, [0.025, 0.975]))
    return SpreadDecay(beta=params.beta, r_values=r_values, replicas=replicas,
                       p_all=p, exact=exact, kappa=float(np.exp(slope)),
                       kappa_ci=(float(lo), float(hi)))
