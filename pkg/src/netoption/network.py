"""Router topologies, candidate paths and the path/resource incidence matrix.

Resources are routers. A path consumes one share of every router it visits,
endpoints included, so the diamond B-{A,D}-C yields the bundles {B,A,C} and
{B,D,C}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_MAX_HOPS = 8


class NoPath(LookupError):
    """No path within the hop limit. ``incidence`` holds the empty (M = 0) matrix."""

    def __init__(self, message: str, incidence: IncidenceMatrix):
        super().__init__(message)
        self.incidence = incidence


@dataclass(frozen=True)
class Topology:
    nodes: tuple[str, ...]
    links: tuple[tuple[str, str], ...]

    def __post_init__(self):
        nodes = tuple(str(n) for n in self.nodes)
        links = tuple((str(a), str(b)) for a, b in self.links)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "links", links)
        if len(set(nodes)) != len(nodes):
            raise ValueError("node names must be unique")
        known = set(nodes)
        for a, b in links:
            if a not in known or b not in known:
                raise ValueError(f"link ({a}, {b}) references an unknown node")
            if a == b:
                raise ValueError(f"self-loop on node {a}")

    def neighbours(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.links:
            adj[a].add(b)
            adj[b].add(a)
        return adj


@dataclass(frozen=True)
class RouteQuery:
    src: str
    dst: str
    max_hops: int = DEFAULT_MAX_HOPS

    def validate(self, topology: Topology) -> None:
        for name in (self.src, self.dst):
            if name not in topology.nodes:
                raise ValueError(f"query node {name!r} is not in the topology")
        if self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")


@dataclass(frozen=True)
class IncidenceMatrix:
    """``v[i, m]``: shares of resource ``m`` consumed by path ``i``."""

    v: np.ndarray
    resources: tuple[str, ...]
    path_labels: tuple[tuple[str, ...], ...] = field(default=())

    def __post_init__(self):
        v = np.array(self.v, dtype=float)
        if v.ndim != 2:
            v = v.reshape(-1, len(self.resources))
        if v.shape[1] != len(self.resources):
            raise ValueError(f"v has {v.shape[1]} columns but {len(self.resources)} resources")
        if np.any(~np.isfinite(v)) or np.any(v < 0):
            raise ValueError("incidence entries must be finite and >= 0")
        if v.shape[0] and np.any(v.max(axis=1) <= 0):
            raise ValueError("every path must consume some resource")
        labels = tuple(tuple(p) for p in self.path_labels)
        if not labels:
            labels = tuple(
                tuple(self.resources[m] for m in np.flatnonzero(row)) for row in v
            )
        if len(labels) != v.shape[0]:
            raise ValueError("one label per path is required")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "resources", tuple(self.resources))
        object.__setattr__(self, "path_labels", labels)

    @property
    def M(self) -> int:
        return self.v.shape[0]

    @property
    def N(self) -> int:
        return self.v.shape[1]


def _simple_paths(adj, src, dst, max_hops):
    stack = [(src, (src,))]
    while stack:
        node, path = stack.pop()
        if node == dst:
            yield path
            continue
        if len(path) - 1 >= max_hops:
            continue
        for nxt in adj[node]:
            if nxt not in path:
                stack.append((nxt, path + (nxt,)))


def enumerate_paths(topology: Topology, query: RouteQuery) -> IncidenceMatrix:
    """All simple ``src -> dst`` paths with at most ``max_hops`` edges.

    Rows are ordered by (length, node sequence). ``src == dst`` gives a single
    one-node path. Raises NoPath when nothing connects the endpoints.
    """
    query.validate(topology)
    paths = sorted(
        _simple_paths(topology.neighbours(), query.src, query.dst, query.max_hops),
        key=lambda p: (len(p), p),
    )
    index = {n: m for m, n in enumerate(topology.nodes)}
    v = np.zeros((len(paths), len(topology.nodes)))
    for i, path in enumerate(paths):
        for node in path:
            v[i, index[node]] = 1.0
    incidence = IncidenceMatrix(v, topology.nodes, tuple(paths))
    if not paths:
        raise NoPath(
            f"no path from {query.src} to {query.dst} within {query.max_hops} hops", incidence
        )
    return incidence


def path_costs(v, prices) -> np.ndarray:
    """``C_i = sum_m v[i, m] * prices[m]``; ``prices`` may carry leading sample axes."""
    v = v.v if isinstance(v, IncidenceMatrix) else np.asarray(v, dtype=float)
    prices = np.asarray(prices, dtype=float)
    if prices.shape[-1] != v.shape[1]:
        raise ValueError(f"expected {v.shape[1]} prices, got {prices.shape[-1]}")
    if np.any(prices < 0):
        raise ValueError("prices must be >= 0")
    return prices @ v.T
