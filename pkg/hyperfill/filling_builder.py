"""
Hyperbolic filling of a sampled metric space.

Level-n vertices are the points of a maximal alpha^-n separated net A_n, each
carrying the open ball B_v = B(center, alpha^-n). Two vertices (x, n), (y, m) are
joined iff |n - m| <= 1 and d(x, y) < tau^(1 - |n - m|) * (alpha^-n + alpha^-m).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import networkx as nx
import numpy as np

from .errors import InvariantViolation, UnknownEdge, UnknownVertex
from .space_core import MetricSpaceSample
from .utils.checks import at_least, checked, greater_than

logger = logging.getLogger(__name__)

Vertex = Tuple[int, int]  # (center index, level)

HORIZONTAL = "H"
VERTICAL = "V"


@dataclass(frozen=True)
class NetHierarchy:
    alpha: float
    levels: Tuple[Tuple[int, ...], ...]

    @property
    def max_level(self) -> int:
        return len(self.levels) - 1

    def radius(self, n: int) -> float:
        return self.alpha ** (-n)

    def members(self, n: int) -> Tuple[int, ...]:
        return self.levels[n]

    def saturation_level(self, size: int) -> Optional[int]:
        """First level whose net contains every sample point, if any."""
        for n, net in enumerate(self.levels):
            if len(net) == size:
                return n
        return None


@checked(alpha=greater_than(1.0), max_level=at_least(1))
def build_nets(space: MetricSpaceSample, alpha: float, max_level: int) -> NetHierarchy:
    """
    Greedy nested nets. A_0 = {z0}; A_{n+1} starts from A_n and scans the remaining
    points in ascending index order, admitting each point at distance >= alpha^-(n+1)
    from every member admitted so far.
    """
    alpha = float(alpha)
    base = space.base_index
    in_net = np.zeros(space.size, dtype=bool)
    in_net[base] = True
    # distance from each point to the nearest current net member
    nearest = np.array(space.row(base), dtype=float, copy=True)
    levels: List[Tuple[int, ...]] = [(base,)]

    for n in range(1, int(max_level) + 1):
        r = alpha ** (-n)
        start = 0
        while True:
            cand = np.flatnonzero(nearest[start:] >= r)
            if cand.size == 0:
                break
            j = start + int(cand[0])
            in_net[j] = True
            np.minimum(nearest, space.row(j), out=nearest)
            start = j + 1
        levels.append(tuple(int(i) for i in np.flatnonzero(in_net)))
        logger.debug(f"level {n}: #A_n = {len(levels[-1])}")

    return NetHierarchy(alpha=alpha, levels=tuple(levels))


def check_nets(space: MetricSpaceSample, nets: NetHierarchy) -> None:
    """Exhaustive separation, covering and nesting check; raises InvariantViolation."""
    if nets.levels[0] != (space.base_index,):
        raise InvariantViolation(f"A_0 = {nets.levels[0]} is not {{z0}}")
    for n, net in enumerate(nets.levels):
        r = nets.radius(n)
        idx = np.asarray(net, dtype=int)
        if n > 0 and not set(nets.levels[n - 1]) <= set(net):
            raise InvariantViolation(f"A_{n - 1} is not contained in A_{n}")
        nearest = np.full(space.size, np.inf)
        for i in idx:
            row = space.row(int(i))
            others = row[idx]
            too_close = np.flatnonzero((others < r) & (idx != i))
            if too_close.size:
                j = int(idx[too_close[0]])
                raise InvariantViolation(f"level {n}: d({i}, {j}) = {row[j]:.6g} < {r:.6g}")
            np.minimum(nearest, row, out=nearest)
        if np.any(nearest >= r):
            k = int(np.argmax(nearest))
            raise InvariantViolation(f"level {n}: point {k} at distance {nearest[k]:.6g} from A_{n}")


@dataclass(frozen=True)
class Edge:
    a: int  # vertex id of the lexicographically smaller endpoint (level, center)
    b: int
    kind: str


@dataclass(frozen=True, eq=False)
class Filling:
    """
    Immutable filling graph. Vertex ids enumerate vertices in (level, center) order,
    so the root (z0, 0) has id 0 and every edge stores its smaller endpoint first.
    """

    space: MetricSpaceSample
    nets: NetHierarchy
    tau: float
    vertices: Tuple[Vertex, ...]
    masses: np.ndarray
    edges: Tuple[Edge, ...]
    graph: nx.Graph = field(repr=False)
    index: Dict[Vertex, int] = field(repr=False)
    edge_index: Dict[Tuple[int, int], int] = field(repr=False)

    @property
    def alpha(self) -> float:
        return self.nets.alpha

    @property
    def epsilon(self) -> float:
        return math.log(self.nets.alpha)

    @property
    def levels(self) -> int:
        return self.nets.max_level

    @property
    def root(self) -> int:
        return 0

    def vertex_id(self, v: Vertex) -> int:
        try:
            return self.index[(int(v[0]), int(v[1]))]
        except (KeyError, TypeError, IndexError):
            raise UnknownVertex(f"vertex {v!r} is not in the filling") from None

    def check_vertex(self, vid: int) -> int:
        if not 0 <= int(vid) < len(self.vertices):
            raise UnknownVertex(f"vertex id {vid!r} is not in the filling")
        return int(vid)

    def level(self, vid: int) -> int:
        return self.vertices[vid][1]

    def center(self, vid: int) -> int:
        return self.vertices[vid][0]

    def radius(self, vid: int) -> float:
        return self.nets.radius(self.vertices[vid][1])

    def neighbors(self, vid: int) -> List[int]:
        return sorted(self.graph.neighbors(self.check_vertex(vid)))

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edge_index

    def edge(self, eid: int) -> Edge:
        if not 0 <= int(eid) < len(self.edges):
            raise UnknownEdge(f"edge id {eid!r} is not in the filling")
        return self.edges[int(eid)]

    def edge_between(self, a: int, b: int) -> int:
        try:
            return self.edge_index[(min(a, b), max(a, b))]
        except KeyError:
            raise UnknownEdge(f"no edge between vertices {a} and {b}") from None

    def level_vertices(self, n: int) -> List[int]:
        return [self.index[(z, n)] for z in self.nets.members(n)]

    def iter_edges(self) -> Iterator[Tuple[int, Edge]]:
        return enumerate(self.edges)


def _edge_threshold(alpha: float, tau: float, n: int, m: int) -> float:
    gap = abs(n - m)
    return tau ** (1 - gap) * (alpha ** (-n) + alpha ** (-m))


@checked(tau=greater_than(1.0))
def build_filling(space: MetricSpaceSample, nets: NetHierarchy, tau: float) -> Filling:
    """Vertices (z, n) for z in A_n, edges by the strict ball-intersection rule."""
    tau = float(tau)
    alpha = nets.alpha

    vertices: List[Vertex] = []
    for n, net in enumerate(nets.levels):
        vertices.extend((z, n) for z in net)
    index = {v: i for i, v in enumerate(vertices)}

    rows: Dict[int, np.ndarray] = {}

    def row(z: int) -> np.ndarray:
        if z not in rows:
            rows[z] = space.row(z)
        return rows[z]

    masses = np.array(
        [float(np.sum(space.weights[row(z) < alpha ** (-n)])) for z, n in vertices]
    )

    pairs: List[Tuple[int, int, str]] = []
    for n, net in enumerate(nets.levels):
        here = np.asarray(net, dtype=int)
        h_thr = _edge_threshold(alpha, tau, n, n)
        up = np.asarray(nets.levels[n + 1], dtype=int) if n < nets.max_level else None
        v_thr = _edge_threshold(alpha, tau, n, n + 1)
        for x in net:
            d = row(x)
            a = index[(x, n)]
            for y in here[d[here] < h_thr]:
                if y > x:
                    pairs.append((a, index[(int(y), n)], HORIZONTAL))
            if up is not None:
                for y in up[d[up] < v_thr]:
                    pairs.append((a, index[(int(y), n + 1)], VERTICAL))

    pairs.sort()
    edges = tuple(Edge(a, b, kind) for a, b, kind in pairs)
    edge_index = {(e.a, e.b): i for i, e in enumerate(edges)}

    graph = nx.Graph()
    for vid, (z, n) in enumerate(vertices):
        graph.add_node(vid, center=z, level=n, mass=float(masses[vid]))
    for eid, e in enumerate(edges):
        graph.add_edge(e.a, e.b, kind=e.kind, eid=eid)

    logger.info(
        f"filling: alpha={alpha}, tau={tau}, levels={nets.max_level}, "
        f"{len(vertices)} vertices, {len(edges)} edges"
    )
    return Filling(
        space=space, nets=nets, tau=tau, vertices=tuple(vertices), masses=masses,
        edges=edges, graph=graph, index=index, edge_index=edge_index,
    )


@dataclass(frozen=True)
class LevelDegree:
    max: int
    mean: float
    min: int


@dataclass(frozen=True)
class DegreeStats:
    per_level: Dict[int, LevelDegree]
    global_max: int

    def plateau(self, first: int, last: int) -> bool:
        values = {self.per_level[n].max for n in range(first, last + 1)}
        return len(values) == 1


def degree_stats(filling: Filling) -> DegreeStats:
    per_level: Dict[int, LevelDegree] = {}
    degrees = dict(filling.graph.degree())
    for n in range(filling.levels + 1):
        ds = [degrees[v] for v in filling.level_vertices(n)]
        per_level[n] = LevelDegree(max=max(ds), mean=float(np.mean(ds)), min=min(ds))
    k_star = max(d.max for d in per_level.values())
    lonely = [v for v, d in degrees.items() if d < 1]
    if lonely:
        raise InvariantViolation(f"vertices without neighbors: {lonely[:5]}")
    return DegreeStats(per_level=per_level, global_max=k_star)


def vertex_ball_mass(filling: Filling, v: Vertex) -> float:
    """nu(B_v) for v = (center, level)."""
    return float(filling.masses[filling.vertex_id(v)])
