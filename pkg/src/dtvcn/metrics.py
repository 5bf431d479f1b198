"""Structural network metrics.

Betweenness centrality (exact, ordered-pair convention), clustering
coefficient, diameter / average path length, rich-club coefficient,
continuous-MLE power-law exponent fit and the BC-degree scaling exponent.

Betweenness convention, fixed once for the whole package: ordered (s, d)
pairs, endpoints excluded, unnormalized counts with fractional credit when a
pair has several shortest paths.  The middle node of a 3-path scores 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_array
from scipy.sparse.csgraph import dijkstra

from .exceptions import (
    EmptyGraphError,
    InsufficientSamplesError,
    NotPowerLawError,
    TooFewRichNodesError,
)
from .graph import GraphSnapshot, connected_components


def _csr(snapshot: GraphSnapshot) -> csr_array:
    n = snapshot.node_count
    eu, ev = snapshot.edge_arrays()
    row = np.concatenate([eu, ev])
    col = np.concatenate([ev, eu])
    data = np.ones(len(row))
    return csr_array((data, (row, col)), shape=(n, n))


def betweenness(snapshot: GraphSnapshot, block: int = 256) -> np.ndarray:
    """Exact betweenness g(i) via blocked level-synchronous accumulation.

    Shortest-path counts and dependencies are propagated level by level for a
    block of sources at once, so the inner work is sparse matrix products
    instead of per-node Python loops.  Disconnected pairs contribute zero.
    """
    n = snapshot.node_count
    if n == 0:
        raise EmptyGraphError("betweenness of an empty graph")
    g = np.zeros(n)
    if snapshot.edge_count == 0 or n < 3:
        return g
    adj = _csr(snapshot)
    for start in range(0, n, block):
        sources = np.arange(start, min(start + block, n))
        b = len(sources)
        dist = dijkstra(adj, unweighted=True, indices=sources)
        finite = np.isfinite(dist)
        if not finite.any():
            continue
        max_level = int(dist[finite].max())
        sigma = np.zeros((b, n))
        sigma[np.arange(b), sources] = 1.0
        levels = []
        for lev in range(1, max_level + 1):
            at = dist == lev
            contrib = (sigma * (dist == lev - 1)) @ adj
            sigma = np.where(at, contrib, sigma)
            levels.append(at)
        delta = np.zeros((b, n))
        safe = np.where(sigma > 0.0, sigma, 1.0)
        for lev in range(max_level, 0, -1):
            at = levels[lev - 1]
            coeff = np.where(at & (sigma > 0.0), (1.0 + delta) / safe, 0.0)
            below = (dist == lev - 1)
            delta = delta + (coeff @ adj) * below * sigma
        delta[np.arange(b), sources] = 0.0
        g += delta.sum(axis=0)
    return g


def clustering_coefficient(snapshot: GraphSnapshot) -> float:
    """Mean local clustering coefficient; degree<2 nodes contribute 0."""
    n = snapshot.node_count
    if n == 0:
        raise EmptyGraphError("clustering of an empty graph")
    nbr_sets = [set(ns) for ns in snapshot.adjacency]
    tri = np.zeros(n)
    for u, v in snapshot.edges():
        small, big = (u, v) if len(nbr_sets[u]) <= len(nbr_sets[v]) else (v, u)
        for w in nbr_sets[small]:
            if w in nbr_sets[big]:
                tri[w] += 1.0
    deg = snapshot.degree_array()
    mask = deg >= 2
    local = np.zeros(n)
    local[mask] = 2.0 * tri[mask] / (deg[mask] * (deg[mask] - 1.0))
    return float(local.mean())


@dataclass(frozen=True)
class DistanceStats:
    diameter: int
    apl: float
    connected: bool
    nodes_used: int  # size of the component the stats were computed on


def distances(snapshot: GraphSnapshot, chunk: int = 512) -> DistanceStats:
    """Exact all-pairs BFS diameter and mean shortest-path length.

    On a disconnected graph the stats are computed over the largest component
    and flagged via `connected=False`.
    """
    comps = connected_components(snapshot)
    nodes = np.array(comps[0], dtype=np.int64)
    connected = len(comps) == 1
    k = len(nodes)
    if k < 2:
        return DistanceStats(0, 0.0, connected, k)
    adj = _csr(snapshot)
    dmax = 0
    dsum = 0.0
    pairs = 0
    for start in range(0, k, chunk):
        idx = nodes[start:start + chunk]
        dist = dijkstra(adj, unweighted=True, indices=idx)[:, nodes]
        finite = np.isfinite(dist) & (dist > 0)
        dmax = max(dmax, int(dist[finite].max()) if finite.any() else 0)
        dsum += float(dist[finite].sum())
        pairs += int(finite.sum())
    return DistanceStats(dmax, dsum / pairs, connected, k)


def rich_club(snapshot: GraphSnapshot, k: int) -> float:
    """phi(k): edge density among nodes of degree > k."""
    deg = snapshot.degree_array()
    rich = deg > k
    n_rich = int(rich.sum())
    if n_rich < 2:
        raise TooFewRichNodesError(f"only {n_rich} nodes with degree > {k}")
    e_rich = sum(1 for u, v in snapshot.edges() if rich[u] and rich[v])
    return 2.0 * e_rich / (n_rich * (n_rich - 1))


def rich_club_threshold(snapshot: GraphSnapshot) -> int:
    """Smallest k whose rich club holds at most max(2, ceil(5% of N)) nodes."""
    deg = snapshot.degree_array()
    cap = max(2, math.ceil(0.05 * snapshot.node_count))
    for k in range(int(deg.max()) + 1):
        if int((deg > k).sum()) <= cap:
            return k
    return int(deg.max())


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    stderr: float
    n_tail: int
    k_min: int


def fit_power_law(degrees, k_min: int) -> PowerLawFit:
    """Continuous maximum-likelihood exponent over samples >= k_min.

    alpha_hat = 1 + n / sum ln(k_i / (k_min - 0.5)), the standard continuous
    approximation for discrete data, with stderr (alpha_hat - 1)/sqrt(n).
    """
    d = np.asarray(degrees, dtype=float)
    tail = d[d >= k_min]
    n = len(tail)
    if n < 100:
        raise InsufficientSamplesError(f"{n} samples >= k_min={k_min}, need 100")
    if len(np.unique(tail)) < 2:
        raise NotPowerLawError("all tail samples are equal")
    denom = float(np.log(tail / (k_min - 0.5)).sum())
    alpha = 1.0 + n / denom
    return PowerLawFit(alpha, (alpha - 1.0) / math.sqrt(n), n, k_min)


@dataclass(frozen=True)
class BcScaling:
    slope: float   # least-squares slope of log g vs log k over degree bins
    delta: float   # BC exponent from g ~ k^((alpha-1)/(delta-1))


def bc_degree_exponent(degrees, bc, alpha_fit: float) -> BcScaling:
    """BC-degree scaling exponent delta = (alpha_fit - 1)/slope + 1."""
    deg = np.asarray(degrees, dtype=float)
    g = np.asarray(bc, dtype=float)
    use = (g > 0.0) & (deg >= 1.0)
    if int(use.sum()) < 100:
        raise InsufficientSamplesError(
            f"{int(use.sum())} nodes with positive betweenness, need 100")
    ks = np.unique(deg[use])
    if len(ks) < 2:
        raise InsufficientSamplesError("single degree class: slope undefined")
    mean_g = np.array([g[use & (deg == k)].mean() for k in ks])
    slope = float(np.polyfit(np.log(ks), np.log(mean_g), 1)[0])
    return BcScaling(slope, (alpha_fit - 1.0) / slope + 1.0)


@dataclass
class MetricsReport:
    """One row of the whole-network comparison table."""

    node_count: int
    clustering: float
    diameter: int
    apl: float
    connected: bool
    alpha_fit: float | None
    alpha_stderr: float | None
    rc: float | None
    k_star: int
    delta_fit: float | None
    bc_slope: float | None


def build_report(snapshot: GraphSnapshot, k_min: int | None = None,
                 bc=None) -> MetricsReport:
    """Compute every Table-style metric on one snapshot.

    `k_min` defaults to the smallest positive degree (normally the arrival
    link count of the growth run); `bc` may carry precomputed betweenness.
    """
    deg = snapshot.degree_array()
    if k_min is None:
        pos = deg[deg > 0]
        k_min = int(pos.min()) if len(pos) else 1
    dstats = distances(snapshot)
    alpha = stderr = None
    try:
        fit = fit_power_law(deg, k_min)
        alpha, stderr = fit.alpha, fit.stderr
    except (InsufficientSamplesError, NotPowerLawError):
        pass
    k_star = rich_club_threshold(snapshot)
    try:
        rc = rich_club(snapshot, k_star)
    except TooFewRichNodesError:
        rc = None
    if bc is None:
        bc = betweenness(snapshot)
    delta = slope = None
    if alpha is not None:
        try:
            scaling = bc_degree_exponent(deg, bc, alpha)
            delta, slope = scaling.delta, scaling.slope
        except InsufficientSamplesError:
            pass
    return MetricsReport(
        node_count=snapshot.node_count,
        clustering=clustering_coefficient(snapshot),
        diameter=dstats.diameter,
        apl=dstats.apl,
        connected=dstats.connected,
        alpha_fit=alpha,
        alpha_stderr=stderr,
        rc=rc,
        k_star=k_star,
        delta_fit=delta,
        bc_slope=slope,
    )
