"""
Trace detection: limits of u along geodesic rays, by level averages, and on the
edge union E(xi); Sobolev norms of radial functions on a truncated filling.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from itertools import permutations
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .. import constants as C
from ..errors import InvalidParameter, InvariantViolation
from ..filling_builder import Filling
from ..quadrature import integrate
from ..radial_weight import RadialWeight
from ..status_model import RayTrace, TraceStatus, TraceVerdict
from ..uniform_geometry import (
    EdgePoint,
    GeodesicRay,
    enumerate_rays,
    fan_levels,
    graph_height,
    height_at,
    interleave_rays,
    kink,
    ray_edge_union,
    ray_points,
)
from ..weighted_measure import level_edge_masses
from .radial import RadialFunction, profile_energy

logger = logging.getLogger(__name__)


class FillingFunction(Protocol):
    """Anything that can be evaluated on points of the filling."""

    radial: bool
    landmarks: Tuple[float, ...]

    def value_at(self, filling: Filling, x: EdgePoint) -> float: ...

    def vertex_value(self, filling: Filling, vid: int) -> float: ...


def classify_samples(
    heights: Sequence[float],
    values: Sequence[float],
    *,
    tol: float = C.TRACE_TOL,
    window: int = C.TRACE_WINDOW,
    oscillation_factor: float = C.OSCILLATION_FACTOR,
    label: str = "",
) -> RayTrace:
    """
    Verdict from samples ordered by height. Only samples within `window` of the top
    height count: a band below tol converges, a monotone band that keeps growing
    diverges, any other band above oscillation_factor * tol oscillates.
    """
    h = np.asarray(heights, dtype=float)
    v = np.asarray(values, dtype=float)
    top = float(h.max()) if h.size else 0.0
    tail = h >= top - window
    tv = v[tail]
    lo, hi = float(tv.min()), float(tv.max())
    common = dict(label=label, depth=int(round(top)), heights=tuple(h.tolist()), values=tuple(v.tolist()))

    if hi - lo < tol:
        return RayTrace(status=TraceStatus.CONVERGED, value=float(tv[-1]), liminf=lo, limsup=hi, **common)
    if hi - lo > oscillation_factor * tol:
        d = np.diff(tv)
        for sign in (1, -1):
            if np.all(sign * d >= -tol):
                th = h[tail]
                half = top - window / 2.0
                first = abs(float(np.interp(half, th, tv) - tv[0]))
                second = abs(float(tv[-1] - np.interp(half, th, tv)))
                if second >= 0.5 * first:
                    return RayTrace(status=TraceStatus.DIVERGED, liminf=lo, limsup=hi, sign=sign, **common)
                return RayTrace(status=TraceStatus.UNDETERMINED, liminf=lo, limsup=hi, **common)
        return RayTrace(status=TraceStatus.OSCILLATING, liminf=lo, limsup=hi, **common)
    return RayTrace(status=TraceStatus.UNDETERMINED, liminf=lo, limsup=hi, **common)


def _ray_samples(
    u: FillingFunction, filling: Filling, ray: GeodesicRay, samples_per_edge: int
) -> Tuple[List[float], List[float]]:
    heights, values = [], []
    for h, x in ray_points(filling, ray, samples_per_edge, getattr(u, "landmarks", ())):
        heights.append(h)
        values.append(u.value_at(filling, x))
    return heights, values


def trace_along_ray(
    u: FillingFunction,
    ray: GeodesicRay,
    filling: Filling,
    *,
    tol: float = C.TRACE_TOL,
    window: int = C.TRACE_WINDOW,
    samples_per_edge: int = C.SAMPLES_PER_EDGE,
    oscillation_factor: float = C.OSCILLATION_FACTOR,
    label: str = "",
) -> RayTrace:
    if ray.depth < window:
        raise InvalidParameter(f"ray depth {ray.depth} is below the window {window}")
    heights, values = _ray_samples(u, filling, ray, samples_per_edge)
    return classify_samples(
        heights, values, tol=tol, window=window, oscillation_factor=oscillation_factor, label=label or "ray",
    )


def _aggregate(traces: List[RayTrace], tol: float, xi: int, depth: int, detail: str) -> TraceVerdict:
    statuses = {t.status for t in traces}
    lo = min(t.liminf for t in traces if t.liminf is not None)
    hi = max(t.limsup for t in traces if t.limsup is not None)
    if statuses == {TraceStatus.CONVERGED}:
        vals = [t.value for t in traces]
        if max(vals) - min(vals) <= tol:
            return TraceVerdict(TraceStatus.CONVERGED, value=vals[0], liminf=lo, limsup=hi, depth=depth, xi=xi,
                                ray_independent=True, rays=traces, detail=detail)
        return TraceVerdict(TraceStatus.OSCILLATING, liminf=min(vals), limsup=max(vals), depth=depth, xi=xi,
                            ray_independent=False, rays=traces, detail=detail + "; rays converge to different values")
    if TraceStatus.OSCILLATING in statuses:
        independent = TraceStatus.CONVERGED not in statuses
        return TraceVerdict(TraceStatus.OSCILLATING, liminf=lo, limsup=hi, depth=depth, xi=xi,
                            ray_independent=independent, rays=traces, detail=detail)
    if statuses == {TraceStatus.DIVERGED}:
        signs = {t.sign for t in traces}
        sign = signs.pop() if len(signs) == 1 else 0
        return TraceVerdict(TraceStatus.DIVERGED, liminf=lo, limsup=hi, sign=sign, depth=depth, xi=xi,
                            ray_independent=sign != 0, rays=traces, detail=detail)
    return TraceVerdict(TraceStatus.UNDETERMINED, liminf=lo, limsup=hi, depth=depth, xi=xi, rays=traces,
                        detail=detail)


def trace_T(
    u: FillingFunction,
    filling: Filling,
    xi: int,
    *,
    max_rays: int = C.MAX_RAYS,
    tol: float = C.TRACE_TOL,
    window: int = C.TRACE_WINDOW,
    samples_per_edge: int = C.SAMPLES_PER_EDGE,
    oscillation_factor: float = C.OSCILLATION_FACTOR,
    max_interleavings: Optional[int] = None,
    depth: Optional[int] = None,
) -> TraceVerdict:
    """
    Ray-independent limit of u at xi: every enumerated ray and every ordered pair
    interleaving (r1 on even levels, r2 on odd levels) must converge to one value.
    A radial u takes the same values on every ray, so a single ray decides.
    `depth` cuts the rays at that level; it may not exceed the filling.
    """
    if depth is not None and not 0 < int(depth) <= filling.levels:
        raise InvalidParameter(f"depth {depth} is outside 1..{filling.levels}")
    rays = enumerate_rays(filling, xi, max_rays=max_rays)
    if depth is not None:
        rays = [r.truncate(int(depth)) for r in rays]
    kw = dict(tol=tol, window=window, samples_per_edge=samples_per_edge, oscillation_factor=oscillation_factor)
    depth = rays[0].depth

    if getattr(u, "radial", False):
        first = trace_along_ray(u, rays[0], filling, label="ray 0", **kw)
        traces = [first] + [
            replace(first, label=f"ray {i}") for i in range(1, len(rays))
        ]
        return _aggregate(traces, tol, int(xi), depth, f"radial: {len(rays)} rays share one profile")

    traces = [trace_along_ray(u, r, filling, label=f"ray {i}", **kw) for i, r in enumerate(rays)]
    cap = max_rays if max_interleavings is None else max_interleavings
    pairs = list(permutations(range(len(rays)), 2))[:cap]
    for i, j in pairs:
        traces.append(trace_along_ray(u, interleave_rays(rays[i], rays[j]), filling, label=f"ray {i}/{j}", **kw))
    return _aggregate(traces, tol, int(xi), depth, f"{len(rays)} rays, {len(pairs)} interleavings")


@dataclass
class TildeResult:
    averages: List[float]
    verdict: TraceVerdict


def trace_tilde(
    u: FillingFunction,
    filling: Filling,
    xi: int,
    max_level: Optional[int] = None,
    *,
    tol: float = C.TRACE_TOL,
    window: int = C.TRACE_WINDOW,
    oscillation_factor: float = C.OSCILLATION_FACTOR,
) -> TildeResult:
    """u_n(xi) = average of u over the level-n vertices whose balls contain xi."""
    levels = fan_levels(filling, xi)
    top = filling.levels if max_level is None else min(int(max_level), filling.levels)
    averages = [
        math.fsum(u.vertex_value(filling, v) for v in levels[n]) / len(levels[n]) for n in range(top + 1)
    ]
    ray = classify_samples(
        list(range(top + 1)), averages, tol=tol, window=window, oscillation_factor=oscillation_factor, label="tilde",
    )
    verdict = _aggregate([ray], tol, int(xi), top, "level averages")
    verdict.ray_independent = None
    return TildeResult(averages=averages, verdict=verdict)


def trace_on_edge_union(
    u: FillingFunction,
    filling: Filling,
    xi: int,
    *,
    tol: float = C.TRACE_TOL,
    window: int = C.TRACE_WINDOW,
    samples_per_edge: int = C.SAMPLES_PER_EDGE,
    oscillation_factor: float = C.OSCILLATION_FACTOR,
) -> TraceVerdict:
    """Limit of u sampled on every edge of E(xi), level by level."""
    ts = np.linspace(0.0, 1.0, int(samples_per_edge) + 1)
    heights, values = [], []
    for eid in ray_edge_union(filling, xi):
        e = filling.edges[eid]
        n = filling.level(e.a)
        extra = [h - n for h in getattr(u, "landmarks", ()) if n < h < n + 1]
        for t in np.union1d(ts, extra):
            x = EdgePoint(eid, float(t))
            heights.append(graph_height(filling, x))
            values.append(u.value_at(filling, x))
    order = np.argsort(heights, kind="stable")
    ray = classify_samples(
        np.asarray(heights)[order], np.asarray(values)[order],
        tol=tol, window=window, oscillation_factor=oscillation_factor, label="edge union",
    )
    return _aggregate([ray], tol, int(xi), ray.depth, "edge union E(xi)")


@dataclass
class SobolevNorms:
    Lp_u: float
    Lp_g: float
    N_norm: float
    dotN_norm: float
    p: float
    N: int
    # filling energy (integral of g^p d mu) contributed by edges starting at each level
    # integral of |u|^p d mu contributed by edges starting at each level
    lp_by_level: List[float] = field(default_factory=list)
    energy_by_level: List[float] = field(default_factory=list)
    # integral of q^p rho over [n, n+1) for each n
    profile_energy: List[float] = field(default_factory=list)


def _radial_level_integrals(
    filling: Filling, rho: RadialWeight, p: float, u: RadialFunction, N: int, tol: float, of_gradient: bool
) -> List[float]:
    vert, horiz = level_edge_masses(filling, N)
    out = []
    for n in range(N):
        if of_gradient:
            full = profile_energy(u, rho, p, n, n + 1.0, tol=tol)
            half = profile_energy(u, rho, p, n, n + 0.5, tol=tol)
        else:
            pts = u.breakpoints_in(n, n + 1.0) + u.landmarks_in(n, n + 1.0) + rho.breakpoints(n, n + 1.0)
            f = lambda t: abs(u.U(t)) ** p * rho.value(t)
            full = integrate(f, n, n + 1.0, tol=tol, points=pts, strict=False).value
            half = integrate(f, n, n + 0.5, tol=tol, points=pts, strict=False).value
        out.append(vert[n] * full + horiz[n] * 2.0 * half)
    return out


def sobolev_norms(
    filling: Filling,
    rho: RadialWeight,
    u: RadialFunction,
    p: float,
    *,
    N: Optional[int] = None,
    tol: float = C.EDGE_QUAD_TOL,
) -> SobolevNorms:
    """
    L^p norms of u and of g = q(|x|) over the edges of height at most N, the
    inhomogeneous norm ||u||_p + ||g||_p and the homogeneous |u(v0)| + ||g||_p.
    """
    if p < 1:
        raise InvalidParameter(f"p={p} violates >= 1")
    N = filling.levels if N is None else int(N)
    lp_u = _radial_level_integrals(filling, rho, p, u, N, tol, of_gradient=False)
    energy = _radial_level_integrals(filling, rho, p, u, N, tol, of_gradient=True)
    Lp_u = math.fsum(lp_u) ** (1.0 / p)
    Lp_g = math.fsum(energy) ** (1.0 / p)
    return SobolevNorms(
        Lp_u=Lp_u, Lp_g=Lp_g, N_norm=Lp_u + Lp_g, dotN_norm=abs(u.U(0.0)) + Lp_g, p=float(p), N=N,
        lp_by_level=lp_u, energy_by_level=energy,
        profile_energy=[profile_energy(u, rho, p, n, n + 1.0, tol=tol) for n in range(N)],
    )


def majorant(u: RadialFunction, filling: Filling, depth: Optional[int] = None, *, tol: float = C.EDGE_QUAD_TOL) -> float:
    """u*(xi) = |u(v0)| + integral of g ds along a ray; the same for every xi when u is radial."""
    eps = filling.epsilon
    top = filling.levels if depth is None else int(depth)
    total = 0.0
    for n in range(top):
        pts = u.breakpoints_in(n, n + 1.0)
        total += integrate(lambda t: u.q(t) * math.exp(-eps * t), n, n + 1.0, tol=tol, points=pts, strict=False).value
    return abs(u.U(0.0)) + total


@dataclass
class TraceLpBound:
    trace_norm: float      # ||T u||_{L^p(nu)} over the points where the trace converged
    majorant_norm: float   # ||u*||_{L^p(nu)}
    dotN_norm: float
    ratio: float           # trace_norm / dotN_norm
    converged: int
    points: int


def trace_lp_bound(
    filling: Filling,
    rho: RadialWeight,
    u: RadialFunction,
    p: float,
    *,
    tol: float = C.TRACE_TOL,
    window: int = C.TRACE_WINDOW,
    max_rays: int = 1,
) -> TraceLpBound:
    """Checks |T u(xi)| <= u*(xi) pointwise and reports the L^p(nu) comparison with the homogeneous norm."""
    star = majorant(u, filling)
    weights = filling.space.weights
    tr_parts, star_parts = [], []
    converged = 0
    for xi in range(filling.space.size):
        v = trace_T(u, filling, xi, max_rays=max_rays, tol=tol, window=window)
        star_parts.append(weights[xi] * star ** p)
        if not v.converged:
            continue
        converged += 1
        if abs(v.value) > star + tol:
            raise InvariantViolation(f"|T u({xi})| = {abs(v.value):.6g} exceeds the majorant {star:.6g}")
        tr_parts.append(weights[xi] * abs(v.value) ** p)
    dotN = sobolev_norms(filling, rho, u, p).dotN_norm
    tr = math.fsum(tr_parts) ** (1.0 / p)
    return TraceLpBound(
        trace_norm=tr, majorant_norm=math.fsum(star_parts) ** (1.0 / p), dotN_norm=dotN,
        ratio=tr / dotN if dotN > 0 else math.inf, converged=converged, points=filling.space.size,
    )


@dataclass
class UpperGradientReport:
    paths: int
    max_excess: float  # max of |u(x) - u(y)| - integral of g ds along the path
    worst: Optional[Tuple[int, ...]] = None

    @property
    def holds(self) -> bool:
        return self.max_excess <= 1e-8


def _piece_integral(u: RadialFunction, eps: float, h0: float, h1: float, tol: float) -> float:
    lo, hi = min(h0, h1), max(h0, h1)
    if hi <= lo:
        return 0.0
    return integrate(
        lambda t: u.q(t) * math.exp(-eps * t), lo, hi, tol=tol, points=u.breakpoints_in(lo, hi), strict=False,
    ).value


def _edge_piece(u: RadialFunction, filling: Filling, eid: int, t0: float, t1: float, tol: float) -> float:
    """Integral of g ds over the piece of edge eid between parameters t0 and t1."""
    e = filling.edges[eid]
    na, nb = filling.level(e.a), filling.level(e.b)
    lo, hi = min(t0, t1), max(t0, t1)
    tk = kink(filling, eid)
    eps = filling.epsilon
    if lo < tk < hi:
        return (_piece_integral(u, eps, height_at(na, nb, lo), height_at(na, nb, tk), tol)
                + _piece_integral(u, eps, height_at(na, nb, tk), height_at(na, nb, hi), tol))
    return _piece_integral(u, eps, height_at(na, nb, lo), height_at(na, nb, hi), tol)


def check_upper_gradient(
    u: RadialFunction,
    filling: Filling,
    *,
    paths: int = 50,
    max_edges: int = 6,
    seed: int = 0,
    tol: float = C.EDGE_QUAD_TOL,
) -> UpperGradientReport:
    """
    Random edge paths: a point inside a first edge, a random walk through vertices and
    a point inside a last edge. Compares |u(x) - u(y)| with the integral of g ds.
    """
    rng = np.random.default_rng(seed)
    worst_excess, worst = -math.inf, None
    for _ in range(int(paths)):
        v = int(rng.integers(len(filling.vertices)))
        walk = [v]
        for _ in range(int(rng.integers(1, max_edges + 1))):
            walk.append(int(rng.choice(filling.neighbors(walk[-1]))))
        eids = [filling.edge_between(a, b) for a, b in zip(walk, walk[1:])]

        # x on the first edge, y on the last edge; the path runs x -> walk[1] -> ... -> y
        s = float(rng.uniform())
        first = filling.edges[eids[0]]
        end_first = 1.0 if first.b == walk[1] else 0.0
        total = _edge_piece(u, filling, eids[0], s, end_first, tol)
        for eid in eids[1:-1]:
            total += _edge_piece(u, filling, eid, 0.0, 1.0, tol)
        x = EdgePoint(eids[0], s)
        if len(eids) > 1:
            r = float(rng.uniform())
            last = filling.edges[eids[-1]]
            start_last = 0.0 if last.a == walk[-2] else 1.0
            total += _edge_piece(u, filling, eids[-1], start_last, r, tol)
            y = EdgePoint(eids[-1], r)
        else:
            y = EdgePoint(eids[0], end_first)
        excess = abs(u.value_at(filling, x) - u.value_at(filling, y)) - total
        if excess > worst_excess:
            worst_excess, worst = excess, tuple(walk)
    return UpperGradientReport(paths=int(paths), max_excess=float(worst_excess), worst=worst)
