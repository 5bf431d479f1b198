"""Event-sourced storage for undirected simple graphs.

A GraphSnapshot is an immutable adjacency view of the network at one time
step.  The time evolution itself is an EventLog: a seed descriptor (complete
graph on ``n0`` nodes) plus a time-ordered sequence of add/rewire/delete edge
events.  One node joins the network per time step, so replaying any prefix of
the log reproduces the snapshot at that step exactly.
"""
from __future__ import annotations

import json
from bisect import bisect_left, insort
from collections import deque
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DuplicateEdgeError,
    MissingEdgeError,
    SelfLoopError,
    TimeOutOfRangeError,
)

ADD = "add"
REWIRE = "rewire"
DELETE = "delete"
_KINDS = (ADD, REWIRE, DELETE)


@dataclass(frozen=True)
class EdgeEvent:
    """One edge change at integer step `time`.

    add:    edge (u, v) appears.
    delete: edge (u, v) disappears.
    rewire: edge (u, old_v) is replaced by edge (u, v); u is the surviving
            endpoint, old_v the detached one.
    """

    time: int
    kind: str
    u: int
    v: int
    old_v: int | None = None


@dataclass(frozen=True)
class EventLog:
    """Seed descriptor plus the ordered edge events of one growth run."""

    n0: int
    rng_seed: int
    events: tuple[EdgeEvent, ...]
    final_nodes: int

    @property
    def lifespan(self) -> int:
        return self.final_nodes - self.n0


@dataclass(frozen=True)
class GraphSnapshot:
    """Immutable simple graph with sorted neighbor lists and a degree cache."""

    adjacency: tuple[tuple[int, ...], ...]
    degree: tuple[int, ...]
    timestamp: int = 0

    # -- constructors --------------------------------------------------

    @classmethod
    def empty(cls, n: int, timestamp: int = 0) -> "GraphSnapshot":
        return cls(tuple(() for _ in range(n)), (0,) * n, timestamp)

    @classmethod
    def complete(cls, n: int, timestamp: int = 0) -> "GraphSnapshot":
        adj = tuple(tuple(j for j in range(n) if j != i) for i in range(n))
        return cls(adj, (n - 1,) * n if n else (), timestamp)

    @classmethod
    def from_edges(cls, n: int, edges, timestamp: int = 0) -> "GraphSnapshot":
        lists = [[] for _ in range(n)]
        seen = set()
        for u, v in edges:
            if u == v:
                raise SelfLoopError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise MissingEdgeError(f"edge ({u},{v}) references unknown node")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise DuplicateEdgeError(f"duplicate edge {key}")
            seen.add(key)
            lists[u].append(v)
            lists[v].append(u)
        adj = tuple(tuple(sorted(ns)) for ns in lists)
        return cls(adj, tuple(len(ns) for ns in adj), timestamp)

    # -- queries -------------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self.adjacency)

    @property
    def edge_count(self) -> int:
        return sum(self.degree) // 2

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.adjacency[i]

    def has_edge(self, u: int, v: int) -> bool:
        ns = self.adjacency[u]
        j = bisect_left(ns, v)
        return j < len(ns) and ns[j] == v

    def edges(self):
        """Yield each undirected edge once, as (u, v) with u < v."""
        for u, ns in enumerate(self.adjacency):
            for v in ns:
                if v > u:
                    yield u, v

    def edge_arrays(self):
        """Endpoint arrays (eu, ev) of the undirected edges, eu < ev."""
        m = self.edge_count
        eu = np.empty(m, dtype=np.int64)
        ev = np.empty(m, dtype=np.int64)
        k = 0
        for u, v in self.edges():
            eu[k] = u
            ev[k] = v
            k += 1
        return eu, ev

    def degree_array(self) -> np.ndarray:
        return np.asarray(self.degree, dtype=np.int64)


class _Builder:
    """Mutable adjacency used while replaying logs; freeze() emits a snapshot."""

    def __init__(self, snapshot: GraphSnapshot):
        self.adj = [list(ns) for ns in snapshot.adjacency]

    def add_node(self):
        self.adj.append([])

    def has_edge(self, u, v):
        ns = self.adj[u]
        j = bisect_left(ns, v)
        return j < len(ns) and ns[j] == v

    def add_edge(self, u, v):
        if u == v:
            raise SelfLoopError(f"self-loop at node {u}")
        if self.has_edge(u, v):
            raise DuplicateEdgeError(f"edge ({u},{v}) already present")
        insort(self.adj[u], v)
        insort(self.adj[v], u)

    def remove_edge(self, u, v):
        if not self.has_edge(u, v):
            raise MissingEdgeError(f"edge ({u},{v}) not present")
        self.adj[u].remove(v)
        self.adj[v].remove(u)

    def apply(self, event: EdgeEvent):
        n = len(self.adj)
        ids = (event.u, event.v) if event.old_v is None else (event.u, event.v, event.old_v)
        for i in ids:
            if not 0 <= i < n:
                raise MissingEdgeError(f"event {event} references unknown node {i}")
        if event.kind == ADD:
            self.add_edge(event.u, event.v)
        elif event.kind == DELETE:
            self.remove_edge(event.u, event.v)
        elif event.kind == REWIRE:
            self.remove_edge(event.u, event.old_v)
            self.add_edge(event.u, event.v)
        else:
            raise ValueError(f"unknown event kind {event.kind!r}")

    def freeze(self, timestamp: int) -> GraphSnapshot:
        adj = tuple(tuple(ns) for ns in self.adj)
        return GraphSnapshot(adj, tuple(len(ns) for ns in adj), timestamp)


def apply_event(snapshot: GraphSnapshot, event: EdgeEvent) -> GraphSnapshot:
    """Return a new snapshot with one edge event applied.

    The timestamp advances to ``event.time``.  Raises SelfLoopError,
    DuplicateEdgeError or MissingEdgeError identifying the offending event.
    """
    b = _Builder(snapshot)
    b.apply(event)
    return b.freeze(event.time)


def replay(log: EventLog, until: int | None = None) -> GraphSnapshot:
    """Deterministically rebuild the snapshot at step ``until``.

    The seed network is the complete graph on ``log.n0`` nodes at step 0; one
    node is added at the start of every step 1..T before that step's events
    are applied.
    """
    lifespan = log.lifespan
    if until is None:
        until = lifespan
    if not 0 <= until <= lifespan:
        raise TimeOutOfRangeError(f"until={until} outside [0, {lifespan}]")
    b = _Builder(GraphSnapshot.complete(log.n0))
    i = 0
    events = log.events
    for t in range(1, until + 1):
        b.add_node()
        while i < len(events) and events[i].time == t:
            b.apply(events[i])
            i += 1
    if i < len(events) and events[i].time <= until:
        raise TimeOutOfRangeError("events are not nondecreasing in time")
    return b.freeze(until)


def connected_after_removal(snapshot: GraphSnapshot, u: int, v: int) -> bool:
    """True iff the graph minus edge (u, v) is a single component over all nodes."""
    if not snapshot.has_edge(u, v):
        raise MissingEdgeError(f"edge ({u},{v}) not present")
    n = snapshot.node_count
    seen = bytearray(n)
    seen[0] = 1
    queue = deque([0])
    reached = 1
    while queue:
        a = queue.popleft()
        for b_ in snapshot.adjacency[a]:
            if (a == u and b_ == v) or (a == v and b_ == u):
                continue
            if not seen[b_]:
                seen[b_] = 1
                reached += 1
                queue.append(b_)
    return reached == n


def connected_components(snapshot: GraphSnapshot) -> list[list[int]]:
    """Connected components as sorted node-id lists, largest first."""
    n = snapshot.node_count
    seen = bytearray(n)
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        seen[s] = 1
        comp = [s]
        queue = deque([s])
        while queue:
            a = queue.popleft()
            for b in snapshot.adjacency[a]:
                if not seen[b]:
                    seen[b] = 1
                    comp.append(b)
                    queue.append(b)
        comps.append(sorted(comp))
    comps.sort(key=lambda c: (-len(c), c[0]))
    return comps


def induced_subgraph(snapshot: GraphSnapshot, nodes) -> tuple[GraphSnapshot, list[int]]:
    """Subgraph on ``nodes`` with dense relabeling; returns (sub, old_ids)."""
    old_ids = sorted(nodes)
    index = {old: new for new, old in enumerate(old_ids)}
    edges = [
        (index[u], index[v])
        for u, v in snapshot.edges()
        if u in index and v in index
    ]
    return GraphSnapshot.from_edges(len(old_ids), edges, snapshot.timestamp), old_ids


def largest_component(snapshot: GraphSnapshot) -> tuple[GraphSnapshot, list[int]]:
    return induced_subgraph(snapshot, connected_components(snapshot)[0])


# -- persistence -------------------------------------------------------

def event_log_to_dict(log: EventLog) -> dict:
    return {
        "n0": log.n0,
        "rng_seed": log.rng_seed,
        "events": [
            {"t": e.time, "kind": e.kind, "u": e.u, "v": e.v, "old_v": e.old_v}
            for e in log.events
        ],
        "final_nodes": log.final_nodes,
    }


def event_log_from_dict(doc: dict) -> EventLog:
    events = tuple(
        EdgeEvent(d["t"], d["kind"], d["u"], d["v"], d.get("old_v"))
        for d in doc["events"]
    )
    for e in events:
        if e.kind not in _KINDS:
            raise ValueError(f"unknown event kind {e.kind!r}")
    return EventLog(doc["n0"], doc["rng_seed"], events, doc["final_nodes"])


def save_event_log(log: EventLog, path):
    with open(path, "w") as fh:
        json.dump(event_log_to_dict(log), fh)
        fh.write("\n")


def load_event_log(path) -> EventLog:
    with open(path) as fh:
        return event_log_from_dict(json.load(fh))


def write_edge_list(snapshot: GraphSnapshot, path):
    """Plain-text export: one `u v` pair per line, nodes 0-indexed."""
    with open(path, "w") as fh:
        for u, v in snapshot.edges():
            fh.write(f"{u} {v}\n")


def read_edge_list(path, n: int | None = None) -> GraphSnapshot:
    edges = []
    top = -1
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            u, v = int(parts[0]), int(parts[1])
            edges.append((u, v))
            top = max(top, u, v)
    return GraphSnapshot.from_edges(n if n is not None else top + 1, edges)
