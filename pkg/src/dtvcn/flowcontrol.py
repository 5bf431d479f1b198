"""Route selection by betweenness-correlation scores and Kelly rate control.

Each user (s, d) enumerates its equal-length shortest paths, scores every
path by W_g = sum over path nodes of (r_g(v) + 1) (the shifted minimum BC-BC
contribution of the node, endpoints included), and keeps the argmin and
argmax paths.  Per-user rates then follow the willingness-to-pay dynamics

    dx_r/dt = theta * (P_r - x_r * sum of link prices on the route),
    P_r = x_r * a_r / (x_r + b_r),    psi_e(y) = c_e * (y / C_e)^omega,

integrated with synchronous explicit Euler steps; prices are re-evaluated
every step from the current aggregate loads.  A small damped fixed-point
solver (system_oracle) cross-checks equilibria on desk-scale instances.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidParamsError, NoFixedPointError, UnreachableError
from .graph import GraphSnapshot

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinkPriceModel:
    """Congestion price of one link: psi(y) = c * (y / capacity)^omega."""

    c: float = 1.0
    capacity: float = 1.0
    omega: float = 2.0


def link_price(model: LinkPriceModel, y: float) -> float:
    if y < 0:
        raise InvalidParamsError("aggregate load must be >= 0")
    return model.c * (y / model.capacity) ** model.omega


@dataclass(frozen=True)
class ShortestPaths:
    paths: tuple[tuple[int, ...], ...]  # lexicographic order, at most `cap`
    count: int                          # true number chi of shortest paths
    truncated: bool


def _bfs_dist(snapshot: GraphSnapshot, s: int) -> list[int]:
    dist = [-1] * snapshot.node_count
    dist[s] = 0
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for v in snapshot.adjacency[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def enumerate_shortest_paths(snapshot: GraphSnapshot, s: int, d: int,
                             cap: int = 64) -> ShortestPaths:
    """All shortest s-d paths (up to `cap`), walking the BFS DAG in lex order."""
    n = snapshot.node_count
    if not (0 <= s < n and 0 <= d < n) or s == d:
        raise InvalidParamsError(f"need two distinct valid nodes, got ({s},{d})")
    ds = _bfs_dist(snapshot, s)
    if ds[d] < 0:
        raise UnreachableError(f"{d} is not reachable from {s}")
    dd = _bfs_dist(snapshot, d)
    total = ds[d]

    def successors(u):
        return [w for w in snapshot.adjacency[u]
                if ds[w] == ds[u] + 1 and ds[u] + 1 + dd[w] == total]

    # exact path count chi by DP from d backwards over the shortest-path DAG
    on_dag = [u for u in range(n) if ds[u] >= 0 and dd[u] >= 0 and ds[u] + dd[u] == total]
    count = {u: 0 for u in on_dag}
    count[d] = 1
    for u in sorted(on_dag, key=lambda u: -ds[u]):
        if u != d:
            count[u] = sum(count[w] for w in successors(u))
    chi = count[s]

    paths = []
    stack = [s]

    def dfs(u):
        if u == d:
            paths.append(tuple(stack))
            return len(paths) >= cap
        for w in successors(u):
            stack.append(w)
            if dfs(w):
                return True
            stack.pop()
        return False

    dfs(s)
    return ShortestPaths(tuple(paths), chi, chi > len(paths))


def path_score(path, r_g_local) -> float:
    """W_g of a path: sum of shifted local contributions r_g(v)+1 over its nodes.

    Undefined contributions (NaN) enter as the neutral shifted value 1.
    """
    w = 0.0
    undefined = 0
    for v in path:
        r = float(r_g_local[v])
        if np.isnan(r):
            undefined += 1
            w += 1.0
        else:
            w += r + 1.0
    if undefined:
        log.debug("path %s: %d nodes with undefined correlation scored neutrally",
                  path, undefined)
    return w


def select_paths(paths, scores):
    """(argmin, argmax) of W_g; ties broken lexicographically on node sequence."""
    if not paths:
        raise InvalidParamsError("no paths to select from")
    idx = range(len(paths))
    lo = min(idx, key=lambda i: (scores[i], paths[i]))
    hi = min(idx, key=lambda i: (-scores[i], paths[i]))
    return paths[lo], paths[hi]


@dataclass
class UserSession:
    """One (s, d) user: candidate paths, W_g scores, route and rate state."""

    source: int
    destination: int
    paths: tuple = ()
    wg_scores: tuple = ()
    chi: int = 0
    truncated: bool = False
    chosen_min: tuple | None = None
    chosen_max: tuple | None = None
    a: float = 1.0
    b: float = 1.0
    route: tuple | None = None
    rate_trace: list = field(default_factory=list)
    x_star: float | None = None
    converged: bool | None = None


def make_session(snapshot: GraphSnapshot, s: int, d: int, r_g_local,
                 cap: int = 64, a: float = 1.0, b: float = 1.0) -> UserSession:
    sp = enumerate_shortest_paths(snapshot, s, d, cap=cap)
    scores = tuple(path_score(p, r_g_local) for p in sp.paths)
    lo, hi = select_paths(sp.paths, scores)
    return UserSession(source=s, destination=d, paths=sp.paths, wg_scores=scores,
                       chi=sp.count, truncated=sp.truncated,
                       chosen_min=lo, chosen_max=hi, a=a, b=b)


def assign_routes(sessions, which: str):
    """Point every session's active route at its min- or max-W_g path."""
    for sess in sessions:
        sess.route = sess.chosen_min if which == "min" else sess.chosen_max


def _system_arrays(sessions):
    """Shared-link incidence: (entry_user, entry_link, link_count)."""
    link_index = {}
    entry_user = []
    entry_link = []
    for r, sess in enumerate(sessions):
        if not sess.route or len(sess.route) < 2:
            raise InvalidParamsError(f"session {r} has no assigned route")
        for u, v in zip(sess.route, sess.route[1:]):
            key = (u, v) if u < v else (v, u)
            entry_link.append(link_index.setdefault(key, len(link_index)))
            entry_user.append(r)
    return (np.array(entry_user, dtype=np.int64),
            np.array(entry_link, dtype=np.int64),
            len(link_index))


@dataclass
class RateSolution:
    x_star: np.ndarray
    iterations: int
    converged: bool
    dt_used: float
    trace: list  # (iteration, rates copy) samples


def evolve_rates(sessions, price_model: LinkPriceModel, theta: float = 1.0,
                 dt: float = 0.01, tol: float = 1e-6, max_iters: int = 1_000_000,
                 x0: float = 0.1, trace_every: int = 100) -> RateSolution:
    """Integrate the rate ODE to equilibrium; updates the sessions in place.

    Non-finite state (dt too large) restarts with dt halved, up to 3 times;
    hitting max_iters returns the partial result flagged converged=False.
    """
    r_count = len(sessions)
    if r_count == 0:
        return RateSolution(np.zeros(0), 0, True, dt, [])
    eu, el, n_links = _system_arrays(sessions)
    a = np.array([s.a for s in sessions], dtype=float)
    b = np.array([s.b for s in sessions], dtype=float)
    pm = price_model
    dt_used = dt
    for _restart in range(4):
        x = np.full(r_count, float(x0))
        trace = [(0, x.copy())]
        it = 0
        converged = False
        blown_up = False
        while it < max_iters:
            y = np.bincount(el, weights=x[eu], minlength=n_links)
            psi = pm.c * (y / pm.capacity) ** pm.omega
            price = np.bincount(eu, weights=psi[el], minlength=r_count)
            pay = x * a / (x + b)
            dxdt = theta * (pay - x * price)
            x = np.maximum(x + dt_used * dxdt, 0.0)
            it += 1
            if not np.all(np.isfinite(x)):
                blown_up = True
                break
            if it % trace_every == 0:
                trace.append((it, x.copy()))
            if np.max(np.abs(dxdt)) < tol:
                converged = True
                break
        if not blown_up:
            break
        log.warning("non-finite rates at dt=%g; restarting with dt=%g",
                    dt_used, dt_used / 2)
        dt_used /= 2.0
    trace.append((it, x.copy()))
    if not converged:
        log.warning("rate dynamics not converged after %d iterations", it)
    for r, sess in enumerate(sessions):
        sess.x_star = float(x[r])
        sess.converged = converged
        sess.rate_trace = [(i, float(xs[r])) for i, xs in trace]
    return RateSolution(x, it, converged, dt_used, trace)


def system_oracle(sessions, price_model: LinkPriceModel, seed: int = 0,
                  starts: int = 24, damping: float = 0.25,
                  max_iters: int = 100_000) -> np.ndarray:
    """Equilibrium rates by damped fixed-point iteration from random starts.

    Desk-scale cross-check for evolve_rates: solves P_r = x_r * sum psi_e for
    all users simultaneously.  Limited to 10 users / 20 links by contract.
    """
    r_count = len(sessions)
    if r_count == 0:
        return np.zeros(0)
    eu, el, n_links = _system_arrays(sessions)
    if r_count > 10 or n_links > 20:
        raise InvalidParamsError("system_oracle is limited to 10 users / 20 links")
    a = np.array([s.a for s in sessions], dtype=float)
    b = np.array([s.b for s in sessions], dtype=float)
    pm = price_model
    rng = np.random.default_rng(seed)
    solutions = []
    for _ in range(starts):
        x = rng.uniform(0.01, 3.0, size=r_count)
        for _it in range(max_iters):
            y = np.bincount(el, weights=x[eu], minlength=n_links)
            psi = pm.c * (y / pm.capacity) ** pm.omega
            price = np.bincount(eu, weights=psi[el], minlength=r_count)
            target = np.where(price > 0.0, a / np.where(price > 0, price, 1.0) - b,
                              2.0 * x + 1.0)
            target = np.maximum(target, 0.0)
            x_new = (1.0 - damping) * x + damping * target
            if np.max(np.abs(x_new - x)) < 1e-12 * (1.0 + np.max(np.abs(x))):
                x = x_new
                break
            x = x_new
        price = _path_prices(x, eu, el, n_links, pm)
        residual = np.max(np.abs(x * a / (x + b) - x * price))
        if residual < 1e-8:
            solutions.append(x)
    if not solutions:
        raise NoFixedPointError("no start converged to a fixed point")
    ref = solutions[0]
    for s in solutions[1:]:
        if np.max(np.abs(s - ref)) > 1e-7:
            raise NoFixedPointError("starts disagree: multiple fixed points")
    return np.mean(solutions, axis=0)


def _path_prices(x, eu, el, n_links, pm: LinkPriceModel):
    y = np.bincount(el, weights=x[eu], minlength=n_links)
    psi = pm.c * (y / pm.capacity) ** pm.omega
    return np.bincount(eu, weights=psi[el], minlength=len(x))
