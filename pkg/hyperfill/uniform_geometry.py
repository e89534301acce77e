"""
Uniformized metric on the filling, graph height, and geodesic rays.

Edges are unit intervals. The height |x| of a point at parameter t on the edge
[a, b] is min(|a| + t, |b| + 1 - t), and |v| equals the level of v: vertical edges
change the level by exactly one and every vertex has a neighbor one level down, so
the vertical tower is a shortest path to the root. Lengths use ds = e^(-eps|x|) d|x|.
"""

from __future__ import annotations

import logging
import math
import weakref
from dataclasses import dataclass
from typing import Dict, Iterator, List, Sequence, Tuple

import networkx as nx
import numpy as np

from .errors import InvalidParameter, InvariantViolation, MismatchedTargets, UnknownBoundaryPoint
from .filling_builder import HORIZONTAL, Filling

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EdgePoint:
    edge: int
    t: float

    def __post_init__(self):
        if not 0.0 <= float(self.t) <= 1.0:
            raise InvalidParameter(f"edge parameter t={self.t} outside [0, 1]")

    @classmethod
    def at_vertex(cls, filling: Filling, vid: int) -> "EdgePoint":
        vid = filling.check_vertex(vid)
        nbr = filling.neighbors(vid)[0]
        eid = filling.edge_between(vid, nbr)
        return cls(eid, 0.0 if filling.edges[eid].a == vid else 1.0)


@dataclass(frozen=True)
class GeodesicRay:
    xi: int
    vertices: Tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.vertices) - 1

    def edges(self, filling: Filling) -> List[int]:
        return [filling.edge_between(v, w) for v, w in zip(self.vertices, self.vertices[1:])]

    def truncate(self, depth: int) -> "GeodesicRay":
        return GeodesicRay(self.xi, self.vertices[: depth + 1])


def _endpoint_levels(filling: Filling, eid: int) -> Tuple[int, int]:
    e = filling.edge(eid)
    return filling.level(e.a), filling.level(e.b)


def kink(filling: Filling, eid: int) -> float:
    """Parameter where the height along the edge is maximal (1/2 horizontal, 1 vertical)."""
    na, nb = _endpoint_levels(filling, eid)
    return min(1.0, (nb + 1 - na) / 2.0)


def height_at(na: int, nb: int, t: float) -> float:
    return min(na + t, nb + 1.0 - t)


def graph_height(filling: Filling, x: EdgePoint) -> float:
    na, nb = _endpoint_levels(filling, x.edge)
    return height_at(na, nb, x.t)


def bfs_heights(filling: Filling) -> Dict[int, int]:
    """Integer graph distance of each vertex from the root."""
    return dict(nx.single_source_shortest_path_length(filling.graph, filling.root))


def _monotone_length(eps: float, h0: float, h1: float) -> float:
    # integral of e^(-eps h) along a unit-slope piece from height h0 to h1
    lo, hi = min(h0, h1), max(h0, h1)
    return math.exp(-eps * lo) * (-math.expm1(-eps * (hi - lo))) / eps


def partial_edge_length(filling: Filling, eid: int, t0: float, t1: float) -> float:
    """Uniformized length of the piece of edge eid between parameters t0 and t1."""
    if t0 > t1:
        t0, t1 = t1, t0
    na, nb = _endpoint_levels(filling, eid)
    eps = filling.epsilon
    tk = min(1.0, (nb + 1 - na) / 2.0)
    total = 0.0
    if t0 < tk:
        s1 = min(t1, tk)
        total += _monotone_length(eps, na + t0, na + s1)
    if t1 > tk:
        s0 = max(t0, tk)
        total += _monotone_length(eps, nb + 1.0 - s0, nb + 1.0 - t1)
    return total


def uniformized_edge_length(filling: Filling, eid: int) -> float:
    """Closed form: (e^(-eps n) - e^(-eps (n+1)))/eps vertical, 2(e^(-eps n) - e^(-eps (n+1/2)))/eps horizontal."""
    return partial_edge_length(filling, eid, 0.0, 1.0)


_LENGTH_GRAPHS: "weakref.WeakKeyDictionary[Filling, nx.Graph]" = weakref.WeakKeyDictionary()


def length_graph(filling: Filling) -> nx.Graph:
    """
    Filling graph with each horizontal edge subdivided at its height maximum, so
    every piece is monotone in height and carries its exact uniformized length.
    """
    cached = _LENGTH_GRAPHS.get(filling)
    if cached is not None:
        return cached
    g = nx.Graph()
    g.add_nodes_from(range(len(filling.vertices)))
    for eid, e in filling.iter_edges():
        if e.kind == HORIZONTAL:
            mid = ("mid", eid)
            g.add_edge(e.a, mid, length=partial_edge_length(filling, eid, 0.0, 0.5))
            g.add_edge(mid, e.b, length=partial_edge_length(filling, eid, 0.5, 1.0))
        else:
            g.add_edge(e.a, e.b, length=uniformized_edge_length(filling, eid))
    _LENGTH_GRAPHS[filling] = g
    return g


def _attach(g: nx.Graph, filling: Filling, x: EdgePoint, tag: str):
    e = filling.edge(x.edge)
    if x.t == 0.0:
        return e.a
    if x.t == 1.0:
        return e.b
    node = ("point", tag)
    tk = kink(filling, x.edge)
    if e.kind == HORIZONTAL:
        if x.t == tk:
            return ("mid", x.edge)
        lo_node, lo_t = (e.a, 0.0) if x.t < tk else (("mid", x.edge), tk)
        hi_node, hi_t = (("mid", x.edge), tk) if x.t < tk else (e.b, 1.0)
    else:
        lo_node, lo_t, hi_node, hi_t = e.a, 0.0, e.b, 1.0
    g.add_edge(node, lo_node, length=partial_edge_length(filling, x.edge, lo_t, x.t))
    g.add_edge(node, hi_node, length=partial_edge_length(filling, x.edge, x.t, hi_t))
    return node


def uniformized_distance(filling: Filling, x: EdgePoint, y: EdgePoint) -> float:
    """Shortest uniformized length of a path in X joining x and y."""
    filling.edge(x.edge)
    filling.edge(y.edge)
    g = length_graph(filling).copy()
    sx = _attach(g, filling, x, "x")
    sy = _attach(g, filling, y, "y")
    if sx == sy:
        return 0.0
    best = nx.dijkstra_path_length(g, sx, sy, weight="length")
    if x.edge == y.edge:
        best = min(best, partial_edge_length(filling, x.edge, x.t, y.t))
    return float(best)


def _check_boundary_point(filling: Filling, xi: int) -> int:
    try:
        xi = int(xi)
    except (TypeError, ValueError):
        raise UnknownBoundaryPoint(f"boundary point {xi!r} is not a sample index") from None
    if not 0 <= xi < filling.space.size:
        raise UnknownBoundaryPoint(f"boundary point {xi} outside [0, {filling.space.size})")
    return xi


def fan_levels(filling: Filling, xi: int) -> List[Tuple[int, ...]]:
    """V_n(xi) for n = 0..N as vertex ids in ascending center order."""
    xi = _check_boundary_point(filling, xi)
    d = filling.space.row(xi)
    out: List[Tuple[int, ...]] = []
    for n in range(filling.levels + 1):
        r = filling.nets.radius(n)
        out.append(tuple(filling.index[(z, n)] for z in filling.nets.members(n) if d[z] < r))
    return out


@dataclass(frozen=True)
class RayFan:
    xi: int
    levels: Tuple[Tuple[int, ...], ...]
    counts: Tuple[int, ...]
    # every v in V_n(xi) is adjacent to every w in V_{n+1}(xi)
    fully_adjacent: bool


def ray_fan(filling: Filling, xi: int) -> RayFan:
    levels = fan_levels(filling, xi)
    adjacent = all(
        filling.has_edge(v, w) for lo, hi in zip(levels, levels[1:]) for v in lo for w in hi
    )
    return RayFan(
        xi=int(xi), levels=tuple(levels), counts=tuple(len(s) for s in levels), fully_adjacent=adjacent
    )


def ray_edge_union(filling: Filling, xi: int) -> List[int]:
    """Edge ids of E(xi): every edge [v, w] with v in V_n(xi), w in V_{n+1}(xi)."""
    levels = fan_levels(filling, xi)
    return sorted(
        filling.edge_between(v, w) for lo, hi in zip(levels, levels[1:]) for v in lo for w in hi
    )


def enumerate_rays(filling: Filling, xi: int, max_rays: int = 64) -> List[GeodesicRay]:
    """Depth-first, ascending center index, at most max_rays rays of full depth."""
    if int(max_rays) < 1:
        raise InvalidParameter(f"max_rays={max_rays} violates >= 1")
    levels = fan_levels(filling, xi)
    for n, s in enumerate(levels):
        if not s:
            raise UnknownBoundaryPoint(f"V_{n}({xi}) is empty; nets do not cover the point")

    def walk(prefix: List[int]) -> Iterator[Tuple[int, ...]]:
        n = len(prefix)
        if n == len(levels):
            yield tuple(prefix)
            return
        for w in levels[n]:
            if prefix and not filling.has_edge(prefix[-1], w):
                continue
            prefix.append(w)
            yield from walk(prefix)
            prefix.pop()

    rays: List[GeodesicRay] = []
    for verts in walk([]):
        rays.append(GeodesicRay(int(xi), verts))
        if len(rays) >= max_rays:
            break
    return rays


def interleave_rays(r1: GeodesicRay, r2: GeodesicRay) -> GeodesicRay:
    """r1 at even levels, r2 at odd levels."""
    if r1.xi != r2.xi:
        raise MismatchedTargets(f"rays target {r1.xi} and {r2.xi}")
    depth = min(r1.depth, r2.depth)
    verts = tuple(r1.vertices[n] if n % 2 == 0 else r2.vertices[n] for n in range(depth + 1))
    return GeodesicRay(r1.xi, verts)


def ray_length(filling: Filling, ray: GeodesicRay) -> float:
    """Sum of vertical lengths; equals (1 - e^(-eps N))/eps."""
    eps = filling.epsilon
    return float(sum(_monotone_length(eps, n, n + 1) for n in range(ray.depth)))


def ray_points(
    filling: Filling, ray: GeodesicRay, samples_per_edge: int, extra_heights: Sequence[float] = ()
) -> Iterator[Tuple[float, EdgePoint]]:
    """
    (height, point) pairs at dyadic parameters along the ray, including every vertex,
    plus the heights in `extra_heights` that fall inside the ray.
    """
    ts = np.linspace(0.0, 1.0, int(samples_per_edge) + 1)[:-1]
    extra = np.asarray(sorted(extra_heights), dtype=float)
    for n, (eid, v) in enumerate(zip(ray.edges(filling), ray.vertices)):
        e = filling.edges[eid]
        forward = e.a == v
        inside = extra[(extra > n) & (extra < n + 1)] - n
        for t in np.union1d(ts, inside):
            s = float(t) if forward else 1.0 - float(t)
            p = EdgePoint(eid, s)
            yield graph_height(filling, p), p
    if ray.depth > 0:
        last = ray.edges(filling)[-1]
        s = 1.0 if filling.edges[last].b == ray.vertices[-1] else 0.0
        p = EdgePoint(last, s)
        yield graph_height(filling, p), p


def check_ray(filling: Filling, ray: GeodesicRay) -> None:
    """Membership and adjacency invariants of a geodesic ray."""
    d = filling.space.row(ray.xi)
    for n, v in enumerate(ray.vertices):
        if filling.level(v) != n or not d[filling.center(v)] < filling.nets.radius(n):
            raise InvariantViolation(f"vertex {filling.vertices[v]} is not in V_{n}({ray.xi})")
    for v, w in zip(ray.vertices, ray.vertices[1:]):
        filling.edge_between(v, w)

