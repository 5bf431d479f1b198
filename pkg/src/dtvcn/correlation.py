"""Degree-degree and BC-BC correlation measures.

Global Pearson coefficient over edge ends, its exact per-edge decomposition,
the node disassortativity factor zeta, average neighbor degree (ANDN) and the
excess degree distribution.

All standardized quantities are computed over the 2|E| directed edge ends, so
a node's value enters once per incident edge.  Standardization makes them
invariant under affine shifts of the input, which is why degrees and excess
degrees (degree minus one) give identical coefficients; the excess convention
only matters for the excess degree distribution itself.

A correlation over ends with zero variance (e.g. degrees on a regular graph)
is Undefined and reported as None, never NaN.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyGraphError, IsolatedNodeError, NotAnEdgeError
from .graph import GraphSnapshot


@dataclass(frozen=True)
class ExcessDegreeDistribution:
    """q_k = (k+1) p_{k+1} / <k>: degree distribution seen across a random edge."""

    q: dict[int, float]
    mean_q: float
    var_q: float


@dataclass
class NodeScores:
    """Per-node derived quantities used by growth, routing and traffic.

    r_local / r_g_local are the minimum pairwise contribution over the node's
    edges (degree- and betweenness-based respectively), in [-1, 1]; zeta is
    the shifted, normalized minimum per the attachment model.  Entries are
    NaN for isolated nodes, and capacity is None until a capacity model is
    applied.
    """

    degree: np.ndarray
    betweenness: np.ndarray | None = None
    r_local: np.ndarray | None = None
    zeta: np.ndarray | None = None
    r_g_local: np.ndarray | None = None
    capacity: np.ndarray | None = None


def _end_stats(x: np.ndarray, deg: np.ndarray):
    """Mean/variance of a per-node value over all directed edge ends.

    Returns (mu, var, defined); defined is False when every endpoint value is
    identical, which makes any standardized correlation Undefined.
    """
    two_e = int(deg.sum())
    if two_e == 0:
        raise EmptyGraphError("graph has no edges")
    ends = deg > 0
    mu = float((deg * x).sum()) / two_e
    d = x - mu
    var = float((deg * d * d).sum()) / two_e
    vals = x[ends]
    defined = not bool(np.all(vals == vals[0]))
    return mu, var, defined


def pearson_r(values, snapshot: GraphSnapshot) -> float | None:
    """Pearson correlation of a per-node value across the ends of every edge.

    With values = degrees this is the degree assortativity coefficient; with
    values = betweenness it is the BC-BC coefficient.  Equals the mean of the
    unclamped pairwise contributions over all directed edges.  Returns None
    (Undefined) when the endpoint values have zero variance.
    """
    x = np.asarray(values, dtype=float)
    deg = snapshot.degree_array()
    mu, var, defined = _end_stats(x, deg)
    if not defined:
        return None
    eu, ev = snapshot.edge_arrays()
    cov = float(((x[eu] - mu) * (x[ev] - mu)).sum()) / snapshot.edge_count
    return cov / var


def pairwise_contribution(values, snapshot: GraphSnapshot, i: int, n: int,
                          clamp: bool = True) -> float | None:
    """Edge-level contribution of edge (i, n) to the global coefficient.

    Standardized product of the endpoint values; the unclamped contributions
    average exactly to pearson_r over directed edges.  Clamped to [-1, 1] by
    default so that shifted contributions lie in [0, 2].
    """
    if not snapshot.has_edge(i, n):
        raise NotAnEdgeError(f"({i},{n}) is not an edge")
    x = np.asarray(values, dtype=float)
    deg = snapshot.degree_array()
    mu, var, defined = _end_stats(x, deg)
    if not defined:
        return None
    c = (x[i] - mu) * (x[n] - mu) / var
    return float(min(1.0, max(-1.0, c))) if clamp else float(c)


def zeta_and_min_contribution(x: np.ndarray, eu: np.ndarray, ev: np.ndarray,
                              deg: np.ndarray):
    """Vectorized (zeta, r_local) over all nodes from endpoint arrays.

    zeta_i = (min_n c(i,n) + 1) / sum_n (c(i,n) + 1) with contributions
    clamped to [-1, 1].  Fallback to 1/deg_i when the denominator vanishes
    (every incident contribution at -1) or when the correlation is Undefined
    (zero endpoint variance).  Isolated nodes get NaN in both outputs.
    """
    n = len(deg)
    zeta = np.full(n, np.nan)
    r_local = np.full(n, np.nan)
    has = deg > 0
    if not has.any():
        return zeta, r_local
    mu, var, defined = _end_stats(x, deg.astype(np.int64))
    if not defined:
        zeta[has] = 1.0 / deg[has]
        return zeta, r_local
    c = (x[eu] - mu) * (x[ev] - mu) / var
    np.clip(c, -1.0, 1.0, out=c)
    s = c + 1.0
    mn = np.full(n, np.inf)
    np.minimum.at(mn, eu, s)
    np.minimum.at(mn, ev, s)
    den = (np.bincount(eu, weights=s, minlength=n)
           + np.bincount(ev, weights=s, minlength=n))
    ok = has & (den > 0.0)
    zeta[ok] = mn[ok] / den[ok]
    zeta[has & ~ok] = 1.0 / deg[has & ~ok]
    r_local[has] = mn[has] - 1.0
    return zeta, r_local


def node_zeta(values, snapshot: GraphSnapshot, i: int) -> float:
    """Disassortativity factor of node i in (paper range) [0, 1]."""
    if snapshot.degree[i] == 0:
        raise IsolatedNodeError(f"node {i} has no neighbors")
    x = np.asarray(values, dtype=float)
    eu, ev = snapshot.edge_arrays()
    zeta, _ = zeta_and_min_contribution(x, eu, ev, snapshot.degree_array())
    return float(zeta[i])


def andn(snapshot: GraphSnapshot) -> dict[int, float]:
    """Average neighbor degree by degree class: k -> <k_nn>(k)."""
    if snapshot.node_count == 0:
        raise EmptyGraphError("empty graph")
    deg = snapshot.degree_array()
    if snapshot.edge_count == 0:
        return {}
    eu, ev = snapshot.edge_arrays()
    n = snapshot.node_count
    nbr_sum = (np.bincount(eu, weights=deg[ev].astype(float), minlength=n)
               + np.bincount(ev, weights=deg[eu].astype(float), minlength=n))
    out: dict[int, list] = {}
    for i in range(n):
        if deg[i] == 0:
            continue
        out.setdefault(int(deg[i]), []).append(nbr_sum[i] / deg[i])
    return {k: float(np.mean(v)) for k, v in sorted(out.items())}


def excess_distribution(snapshot: GraphSnapshot) -> ExcessDegreeDistribution:
    """q_k = (k+1) p_{k+1} / <k>; normalized to 1 within 1e-12."""
    deg = snapshot.degree_array()
    n = snapshot.node_count
    if n == 0 or deg.sum() == 0:
        raise EmptyGraphError("mean degree is zero")
    counts = np.bincount(deg)
    mean_k = deg.sum() / n
    q = {}
    for k in range(1, len(counts)):
        if counts[k]:
            q[k - 1] = k * (counts[k] / n) / mean_k
    ks = np.array(list(q.keys()), dtype=float)
    ps = np.array(list(q.values()))
    mean_q = float((ks * ps).sum())
    var_q = float((ks * ks * ps).sum() - mean_q ** 2)
    return ExcessDegreeDistribution(q, mean_q, var_q)


def node_scores(snapshot: GraphSnapshot, betweenness=None,
                capacity=None) -> NodeScores:
    """Assemble NodeScores; betweenness-based fields need `betweenness`."""
    deg = snapshot.degree_array()
    if snapshot.edge_count == 0:
        nan = np.full(snapshot.node_count, np.nan)
        return NodeScores(degree=deg, zeta=nan.copy(), r_local=nan.copy())
    eu, ev = snapshot.edge_arrays()
    zeta, r_local = zeta_and_min_contribution(deg.astype(float), eu, ev, deg)
    scores = NodeScores(degree=deg, zeta=zeta, r_local=r_local)
    if betweenness is not None:
        g = np.asarray(betweenness, dtype=float)
        _, r_g = zeta_and_min_contribution(g, eu, ev, deg)
        scores.betweenness = g
        scores.r_g_local = r_g
    if capacity is not None:
        scores.capacity = np.asarray(capacity)
    return scores


def write_andn_csv(path, andn_map: dict[int, float]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "knn_mean"])
        for k, v in andn_map.items():
            w.writerow([k, repr(v)])


def write_node_scores_csv(path, scores: NodeScores):
    n = len(scores.degree)
    g = scores.betweenness
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "degree", "betweenness", "zeta", "r_local"])
        for i in range(n):
            w.writerow([
                i,
                int(scores.degree[i]),
                repr(float(g[i])) if g is not None else "",
                repr(float(scores.zeta[i])) if scores.zeta is not None else "",
                repr(float(scores.r_local[i])) if scores.r_local is not None else "",
            ])
