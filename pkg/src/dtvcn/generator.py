"""Growth models for time-varying communication networks.

Three variants grow from a complete seed graph, one new node per step:

* ba     -- pure preferential attachment, m links per step, no restructuring.
* tvcn   -- per step: f_add preferential links from the new node, f_rewire
            rewires (an anti-preferentially chosen node moves one incident
            edge onto a preferential target), f_delete removals of the most
            correlated link of an anti-preferentially chosen node.
* dtvcn  -- as tvcn, but attachment weights carry the node disassortativity
            factor zeta: preferential weight k*(1+zeta), anti-preferential
            weight (1-k/sum k)*(1-zeta).

Derived per-step budgets from the links-per-step m and fractions beta, gamma:
f_add = max(1, round(beta*m)), f_rewire = round(gamma*(1-beta)*m),
f_delete = round((1-gamma)*(1-beta)*m), with half-up rounding.  The ba model
is the beta->1 limit (f_add = m, no rewires or deletions).

Zeta values are recomputed once per time step, before any sampling; degrees
are always read live.  The closed-form side (theory_constants and
degree_trajectory) predicts the power-law exponent and per-node degree growth
from the same fractions.
"""
from __future__ import annotations

import logging
import math
from bisect import bisect_left, insort
from collections import deque
from dataclasses import dataclass

import numpy as np

from .correlation import _end_stats, zeta_and_min_contribution
from .exceptions import EmptyGraphError, InvalidParamsError, NotApplicableError
from .graph import ADD, DELETE, REWIRE, EdgeEvent, EventLog, GraphSnapshot

log = logging.getLogger(__name__)

BA = "ba"
TVCN = "tvcn"
DTVCN = "dtvcn"
MODELS = (BA, TVCN, DTVCN)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class GrowthParams:
    """All knobs of one growth run; fully determines the event log."""

    n0: int = 5
    steps: int = 1000
    m: int = 3
    beta: float = 0.6
    gamma: float = 0.6
    model: str = DTVCN
    rng_seed: int = 0

    def validate(self):
        if self.model not in MODELS:
            raise InvalidParamsError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.n0 < 2:
            raise InvalidParamsError("n0 must be >= 2")
        if self.steps < 0:
            raise InvalidParamsError("steps must be >= 0")
        if self.m < 1:
            raise InvalidParamsError("m must be >= 1")
        if not 0.0 < self.beta < 1.0:
            raise InvalidParamsError("beta must be in (0, 1)")
        if not 0.5 < self.gamma < 1.0:
            raise InvalidParamsError("gamma must be in (0.5, 1)")

    @property
    def f_add(self) -> int:
        if self.model == BA:
            return self.m
        return max(1, _round_half_up(self.beta * self.m))

    @property
    def f_rewire(self) -> int:
        if self.model == BA:
            return 0
        return _round_half_up(self.gamma * (1.0 - self.beta) * self.m)

    @property
    def f_delete(self) -> int:
        if self.model == BA:
            return 0
        return _round_half_up((1.0 - self.gamma) * (1.0 - self.beta) * self.m)


@dataclass(frozen=True)
class TheoryConstants:
    """Mean-field constants of the degree growth law dk/dt = K1*k/t + K2/t."""

    c: float
    k1: float
    k2: float
    alpha: float
    k1_in_range: bool  # 0.5 < K1 < 1 keeps the exponent in (2, 3]


def theory_constants(beta: float, gamma: float, zeta: float, m: int) -> TheoryConstants:
    """Closed-form c, K1, K2 and power-law exponent alpha = 1 + 1/K1."""
    if not 0.0 < beta < 1.0:
        raise InvalidParamsError("beta must be in (0, 1)")
    if not 0.5 < gamma < 1.0:
        raise InvalidParamsError("gamma must be in (0.5, 1)")
    if not 0.0 < zeta <= 1.0:
        raise InvalidParamsError("zeta must be in (0, 1]")
    c = beta + (1.0 - beta) * (2.0 * gamma - 1.0)
    k1 = (1.0 + zeta) / (2.0 * c) * (beta + gamma * (1.0 - beta))
    k2 = (2.0 * gamma - 2.0 + zeta) * (1.0 - beta) * m
    alpha = 1.0 + 1.0 / k1
    return TheoryConstants(c, k1, k2, alpha, 0.5 < k1 < 1.0)


def degree_trajectory(k1: float, k2: float, m: float, t_i: float, t: float) -> float:
    """Expected degree at time t of a node that arrived at t_i with m links."""
    if k1 == 0.0:
        raise NotApplicableError("degree trajectory requires K1 != 0")
    if not 0 < t_i <= t:
        raise InvalidParamsError("need t >= t_i > 0")
    ratio = k2 / k1
    return -ratio + (m + ratio) * (t / t_i) ** k1


# -- attachment probabilities (single-node contract form) ---------------

def _zeta_factor(zeta: np.ndarray, sign: float) -> np.ndarray:
    # isolated nodes carry NaN zeta; they never receive attachment weight
    return np.nan_to_num(1.0 + sign * zeta, nan=0.0)


def attach_probability(snapshot: GraphSnapshot, scores, node: int, model: str) -> float:
    """Probability that `node` receives a preferential link."""
    deg = snapshot.degree_array().astype(float)
    total = deg.sum()
    if total == 0:
        raise EmptyGraphError("no edges: preferential attachment undefined")
    if model == DTVCN:
        w = deg * _zeta_factor(scores.zeta, +1.0)
        return float(w[node] / w.sum())
    return float(deg[node] / total)


def antipref_probability(snapshot: GraphSnapshot, scores, node: int, model: str) -> float:
    """Probability that `node` is selected anti-preferentially."""
    n = snapshot.node_count
    deg = snapshot.degree_array().astype(float)
    total = deg.sum()
    if total == 0:
        raise EmptyGraphError("no edges: anti-preferential selection undefined")
    base = 1.0 - deg / total
    if model == DTVCN:
        w = base * _zeta_factor(scores.zeta, -1.0)
        if w.sum() <= 0.0:
            log.warning("degenerate anti-preferential distribution; using uniform")
            return 1.0 / n
        return float(w[node] / w.sum())
    return float(base[node] / (n - 1))


# -- the growth loop ----------------------------------------------------

def _weighted_index(rng, weights: np.ndarray) -> int:
    """Draw an index proportionally to nonnegative weights; -1 if all zero."""
    total = float(weights.sum())
    if total <= 0.0:
        return -1
    r = rng.random() * total
    cs = np.cumsum(weights)
    return int(min(np.searchsorted(cs, r, side="right"), len(weights) - 1))


class _WorkGraph:
    """Mutable working copy used only inside grow(); emits events, not snapshots."""

    def __init__(self, n0: int, n_final: int, edge_capacity: int):
        self.deg = np.zeros(n_final, dtype=np.int64)
        self.adj = [[] for _ in range(n_final)]
        self.eu = np.empty(edge_capacity, dtype=np.int64)
        self.ev = np.empty(edge_capacity, dtype=np.int64)
        self.m = 0
        self.pos = {}
        for u in range(n0):
            self.adj[u] = [v for v in range(n0) if v != u]
            self.deg[u] = n0 - 1
        for u in range(n0):
            for v in range(u + 1, n0):
                self._push(u, v)

    def _push(self, u, v):
        self.eu[self.m] = u
        self.ev[self.m] = v
        self.pos[(u, v)] = self.m
        self.m += 1

    def has_edge(self, u, v):
        return ((u, v) if u < v else (v, u)) in self.pos

    def add_edge(self, u, v):
        insort(self.adj[u], v)
        insort(self.adj[v], u)
        self.deg[u] += 1
        self.deg[v] += 1
        self._push(min(u, v), max(u, v))

    def remove_edge(self, u, v):
        self.adj[u].remove(v)
        self.adj[v].remove(u)
        self.deg[u] -= 1
        self.deg[v] -= 1
        key = (u, v) if u < v else (v, u)
        i = self.pos.pop(key)
        last = self.m - 1
        if i != last:
            lu, lv = int(self.eu[last]), int(self.ev[last])
            self.eu[i] = lu
            self.ev[i] = lv
            self.pos[(lu, lv)] = i
        self.m = last

    def connected_without(self, n: int, a: int, b: int) -> bool:
        """Single component over nodes 0..n-1 once edge (a, b) is ignored."""
        seen = bytearray(n)
        seen[0] = 1
        queue = deque([0])
        reached = 1
        while queue:
            x = queue.popleft()
            for y in self.adj[x]:
                if (x == a and y == b) or (x == b and y == a):
                    continue
                if not seen[y]:
                    seen[y] = 1
                    reached += 1
                    queue.append(y)
        return reached == n


def grow(params: GrowthParams, trace: list | None = None) -> EventLog:
    """Run one growth simulation and return its full event log.

    If `trace` is a list, one row per step is appended:
    (t, nodes, edges, added, rewired, deleted, skipped_deletes).
    """
    params.validate()
    rng = np.random.default_rng(params.rng_seed)
    n0, steps = params.n0, params.steps
    f_add, f_rw, f_del = params.f_add, params.f_rewire, params.f_delete
    n_final = n0 + steps
    use_zeta = params.model == DTVCN
    need_stats = use_zeta or f_del > 0

    wg = _WorkGraph(n0, n_final, n0 * (n0 - 1) // 2 + steps * f_add + 1)
    events = []

    for t in range(1, steps + 1):
        n_old = n0 + t - 1
        new = n_old

        # correlation state, frozen for the duration of this step
        zfac_plus = zfac_minus = None
        mu = var = 0.0
        defined = False
        if need_stats:
            x = wg.deg[:n_old].astype(float)
            mu, var, defined = _end_stats(x, wg.deg[:n_old])
            if use_zeta:
                zeta, _ = zeta_and_min_contribution(
                    x, wg.eu[:wg.m], wg.ev[:wg.m], wg.deg[:n_old])
                zfac_plus = _zeta_factor(zeta, +1.0)
                zfac_minus = _zeta_factor(zeta, -1.0)

        def attach_weights():
            w = wg.deg[:n_old].astype(float)
            if use_zeta:
                w *= zfac_plus
            return w

        def antipref_weights():
            w = 1.0 - wg.deg[:n_old] / (2.0 * wg.m)
            if use_zeta:
                w *= zfac_minus
            w[wg.deg[:n_old] == 0] = 0.0
            if w.sum() <= 0.0:
                log.warning("step %d: degenerate anti-preferential weights, using uniform", t)
                w = (wg.deg[:n_old] > 0).astype(float)
            return w

        # 1. new node joins with f_add preferential links
        w = attach_weights()
        eligible = int((w > 0.0).sum())
        if eligible < f_add:
            log.warning("step %d: only %d eligible attachment targets (< %d)",
                        t, eligible, f_add)
            targets = [int(i) for i in np.flatnonzero(w > 0.0)]
        else:
            targets = []
            for _ in range(f_add):
                idx = _weighted_index(rng, w)
                targets.append(idx)
                w[idx] = 0.0
        for tgt in targets:
            wg.add_edge(new, tgt)
            events.append(EdgeEvent(t, ADD, new, tgt))

        # 2. rewires: an anti-preferentially chosen node moves one incident
        # edge onto a preferential target outside its current neighborhood
        rewired = 0
        for _ in range(f_rw):
            mover = _weighted_index(rng, antipref_weights())
            if mover < 0:
                break
            old_nb = wg.adj[mover][int(rng.integers(wg.deg[mover]))]
            wa = attach_weights()
            wa[mover] = 0.0
            for nb in wg.adj[mover]:
                if nb < n_old:
                    wa[nb] = 0.0
            target = _weighted_index(rng, wa)
            if target < 0:
                log.warning("step %d: no eligible rewire target, skipping", t)
                continue
            wg.remove_edge(mover, old_nb)
            wg.add_edge(mover, target)
            events.append(EdgeEvent(t, REWIRE, mover, target, old_nb))
            rewired += 1

        # 3. deletions: drop the most correlated link of an anti-preferential
        # node, unless that would disconnect the network (3 retries, then skip)
        deleted = 0
        skipped = 0
        for _ in range(f_del):
            done = False
            for _attempt in range(4):
                u = _weighted_index(rng, antipref_weights())
                if u < 0:
                    break
                nbrs = wg.adj[u]
                if defined and var > 0.0:
                    dv = (wg.deg[u] - mu) * (wg.deg[nbrs] - mu) / var
                    target = nbrs[int(np.argmax(np.clip(dv, -1.0, 1.0)))]
                else:
                    target = nbrs[0]
                if wg.connected_without(n_old + 1, u, target):
                    wg.remove_edge(u, target)
                    events.append(EdgeEvent(t, DELETE, u, target))
                    deleted += 1
                    done = True
                    break
            if not done:
                skipped += 1
        if trace is not None:
            trace.append((t, n_old + 1, wg.m, len(targets), rewired, deleted, skipped))

    return EventLog(n0, params.rng_seed, tuple(events), n_final)
