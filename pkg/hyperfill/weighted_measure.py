"""
The lifted measure d mu = rho(|x|) (nu(B_v1) + nu(B_v2)) d|x| on each edge [v1, v2].

Vertices carry the point density 2 rho(|v|) nu(B_v), but d|x| gives the vertex set
measure zero, so integrals only see the edge interiors. Along a ray the nearest
vertex v_x of a point is the closer endpoint of its edge, ties going to the lower
level.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import constants as C
from .errors import InvalidParameter
from .filling_builder import HORIZONTAL, VERTICAL, Filling
from .quadrature import integrate
from .radial_weight import RadialWeight
from .uniform_geometry import EdgePoint, GeodesicRay, enumerate_rays, graph_height, kink

logger = logging.getLogger(__name__)

PointFunction = Callable[[EdgePoint], float]
HeightFunction = Callable[[float], float]

MASS_NORMALIZED = "mass-normalized"
PLAIN = "plain"


def height_integral(
    rho: RadialWeight,
    lo: float,
    hi: float,
    phi: Optional[HeightFunction] = None,
    *,
    tol: float = C.EDGE_QUAD_TOL,
    points: Sequence[float] = (),
) -> float:
    """Integral of phi(h) rho(h) dh over [lo, hi]; phi defaults to 1."""
    if phi is None:
        return rho.mass(lo, hi, tol=tol)
    pts = list(points) + rho.breakpoints(lo, hi)
    return integrate(lambda h: phi(h) * rho.value(h), lo, hi, tol=tol, points=pts).value


def _edge_span(filling: Filling, eid: int) -> Tuple[float, float, float]:
    """(start height, peak height, multiplicity) of the height profile along an edge."""
    e = filling.edge(eid)
    n = filling.level(e.a)
    if e.kind == HORIZONTAL:
        return float(n), n + 0.5, 2.0
    return float(n), n + 1.0, 1.0


def _edge_mass_sum(filling: Filling, eid: int) -> float:
    e = filling.edges[eid]
    return float(filling.masses[e.a] + filling.masses[e.b])


def edge_measure(filling: Filling, rho: RadialWeight, eid: int, *, tol: float = C.EDGE_QUAD_TOL) -> float:
    """mu of the edge interior: (nu(B_v1) + nu(B_v2)) * integral of rho(|x(t)|) dt."""
    lo, hi, mult = _edge_span(filling, eid)
    return _edge_mass_sum(filling, eid) * mult * height_integral(rho, lo, hi, tol=tol)


def vertex_density(filling: Filling, rho: RadialWeight, vid: int) -> float:
    """Point density 2 rho(|v|) nu(B_v) at a vertex; an atom of mu it is not."""
    vid = filling.check_vertex(vid)
    return 2.0 * rho.value(float(filling.level(vid))) * float(filling.masses[vid])


def _edges_below(filling: Filling, N: Optional[int]) -> List[int]:
    if N is None:
        return list(range(len(filling.edges)))
    out = []
    for eid, e in filling.iter_edges():
        _, hi, _ = _edge_span(filling, eid)
        if hi <= N:
            out.append(eid)
    return out


def integrate_over_filling(
    filling: Filling,
    rho: RadialWeight,
    f: PointFunction,
    *,
    N: Optional[int] = None,
    tol: float = C.EDGE_QUAD_TOL,
) -> float:
    """
    Integral of f over X (edges with height at most N when N is given), one
    quadrature per edge split at the height kink, summed in edge order.
    """
    parts = []
    for eid in _edges_below(filling, N):
        e = filling.edges[eid]
        na, nb = filling.level(e.a), filling.level(e.b)
        msum = _edge_mass_sum(filling, eid)

        def integrand(t: float, eid=eid, na=na, nb=nb) -> float:
            h = min(na + t, nb + 1.0 - t)
            return f(EdgePoint(eid, t)) * rho.value(h)

        parts.append(msum * integrate(integrand, 0.0, 1.0, tol=tol, points=[kink(filling, eid)]).value)
    return math.fsum(parts)


def integrate_radial(
    filling: Filling,
    rho: RadialWeight,
    phi: Optional[HeightFunction] = None,
    *,
    N: Optional[int] = None,
    tol: float = C.EDGE_QUAD_TOL,
    points: Sequence[float] = (),
) -> float:
    """integrate_over_filling for f = phi(|x|): one height integral per (kind, level)."""
    return math.fsum(integrate_radial_by_level(filling, rho, phi, N=N, tol=tol, points=points))


def integrate_radial_by_level(
    filling: Filling,
    rho: RadialWeight,
    phi: Optional[HeightFunction] = None,
    *,
    N: Optional[int] = None,
    tol: float = C.EDGE_QUAD_TOL,
    points: Sequence[float] = (),
) -> List[float]:
    """Contribution of the edges starting at each level n = 0..N-1."""
    top = filling.levels if N is None else int(N)
    vert = np.zeros(top + 1)
    horiz = np.zeros(top + 1)
    for eid in _edges_below(filling, N):
        e = filling.edges[eid]
        n = filling.level(e.a)
        if e.kind == VERTICAL:
            vert[n] += _edge_mass_sum(filling, eid)
        else:
            horiz[n] += _edge_mass_sum(filling, eid)
    out = []
    for n in range(top + 1):
        part = 0.0
        if vert[n]:
            part += vert[n] * height_integral(rho, n, n + 1.0, phi, tol=tol, points=points)
        if horiz[n]:
            part += horiz[n] * 2.0 * height_integral(rho, n, n + 0.5, phi, tol=tol, points=points)
        out.append(part)
    return out


def integrate_along_ray(
    filling: Filling,
    ray: GeodesicRay,
    rho: RadialWeight,
    f: PointFunction,
    *,
    mode: str = PLAIN,
    p: float = 1.0,
    tol: float = C.EDGE_QUAD_TOL,
) -> float:
    """
    plain: integral of f d mu over the ray.
    mass-normalized: integral of f^p / nu(B_{v_x}) d mu over the ray.
    """
    if mode not in (PLAIN, MASS_NORMALIZED):
        raise InvalidParameter(f"mode={mode!r} violates in ('plain', 'mass-normalized')")
    parts = []
    for eid, v in zip(ray.edges(filling), ray.vertices):
        e = filling.edges[eid]
        msum = _edge_mass_sum(filling, eid)
        n = filling.level(e.a)
        m_lo, m_hi = float(filling.masses[e.a]), float(filling.masses[e.b])

        if mode == PLAIN:
            def integrand(t: float, eid=eid, n=n) -> float:
                return f(EdgePoint(eid, t)) * rho.value(n + t)

            parts.append(msum * integrate(integrand, 0.0, 1.0, tol=tol).value)
            continue

        def normalized(t: float, eid=eid, n=n) -> float:
            return f(EdgePoint(eid, t)) ** p * rho.value(n + t)

        # t <= 1/2 is nearest to the lower endpoint (ties included)
        parts.append(msum / m_lo * integrate(normalized, 0.0, 0.5, tol=tol).value)
        parts.append(msum / m_hi * integrate(normalized, 0.5, 1.0, tol=tol).value)
    return math.fsum(parts)


def _ray_radial_normalized(
    filling: Filling,
    ray: GeodesicRay,
    lower: np.ndarray,
    upper: np.ndarray,
) -> float:
    verts = np.asarray(ray.vertices)
    m = filling.masses[verts]
    msum = m[:-1] + m[1:]
    return math.fsum(msum / m[:-1] * lower[: len(msum)] + msum / m[1:] * upper[: len(msum)])


@dataclass(frozen=True)
class Lemma28Report:
    lhs: float
    rhs: float
    ratio: float
    N: int


def lemma28_ratio(
    filling: Filling,
    rho: RadialWeight,
    phi: HeightFunction,
    p: float,
    *,
    N: Optional[int] = None,
    tol: float = C.EDGE_QUAD_TOL,
) -> Lemma28Report:
    """
    lhs = sum over sample points xi (weight nu_xi) of the mass-normalized ray
    integral of phi(|x|)^p along the first ray to xi; rhs = integral of phi(|x|)^p d mu.
    """
    if p < 1:
        raise InvalidParameter(f"p={p} violates >= 1")
    N = filling.levels if N is None else int(N)

    def phi_p(h: float) -> float:
        return phi(h) ** p

    lower = np.array([height_integral(rho, n, n + 0.5, phi_p, tol=tol) for n in range(N)])
    upper = np.array([height_integral(rho, n + 0.5, n + 1.0, phi_p, tol=tol) for n in range(N)])
    weights = filling.space.weights
    lhs_parts = []
    for xi in range(filling.space.size):
        ray = enumerate_rays(filling, xi, max_rays=1)[0].truncate(N)
        lhs_parts.append(weights[xi] * _ray_radial_normalized(filling, ray, lower, upper))
    lhs = math.fsum(lhs_parts)
    rhs = integrate_radial(filling, rho, phi_p, N=N, tol=tol)
    ratio = lhs / rhs if rhs > 0 else math.inf
    logger.debug(f"lemma28 N={N}: lhs={lhs:.6g}, rhs={rhs:.6g}, ratio={ratio:.6g}")
    return Lemma28Report(lhs=lhs, rhs=rhs, ratio=ratio, N=N)


def lemma28_upper(
    filling: Filling,
    rho: RadialWeight,
    g: PointFunction,
    p: float,
    *,
    N: Optional[int] = None,
    tol: float = C.EDGE_QUAD_TOL,
) -> Lemma28Report:
    """Same comparison for an arbitrary nonnegative g on X."""
    N = filling.levels if N is None else int(N)
    weights = filling.space.weights
    lhs = math.fsum(
        weights[xi] * integrate_along_ray(
            filling, enumerate_rays(filling, xi, max_rays=1)[0].truncate(N), rho, g,
            mode=MASS_NORMALIZED, p=p, tol=tol,
        )
        for xi in range(filling.space.size)
    )
    rhs = integrate_over_filling(filling, rho, lambda x: g(x) ** p, N=N, tol=tol)
    return Lemma28Report(lhs=lhs, rhs=rhs, ratio=lhs / rhs if rhs > 0 else math.inf, N=N)


@dataclass(frozen=True)
class TotalMass:
    mu_XN: float
    nuZ_times_intrho: float
    ratio: float
    N: int


def total_mass(filling: Filling, rho: RadialWeight, N: int, *, tol: float = C.EDGE_QUAD_TOL) -> TotalMass:
    """mu of the edges below height N against nu(Z) * integral of rho over [0, N]."""
    if not 0 < int(N) <= filling.levels:
        raise InvalidParameter(f"N={N} violates in [1, {filling.levels}]")
    mu = integrate_radial(filling, rho, N=int(N), tol=tol)
    ref = filling.space.total_mass * rho.mass(0.0, float(N), tol=tol)
    return TotalMass(mu_XN=mu, nuZ_times_intrho=ref, ratio=mu / ref, N=int(N))


@dataclass(frozen=True)
class EdgeComparability:
    min_share: float       # min over edges and endpoints of nu(B_v) / (nu(B_v1) + nu(B_v2))
    max_mass_ratio: float  # max over edges of nu(B_v1) / nu(B_v2), either order
    bound: float           # 1 / (1 + max_mass_ratio)

    @property
    def holds(self) -> bool:
        return self.bound - 1e-15 <= self.min_share <= 1.0


def edge_comparability(filling: Filling) -> EdgeComparability:
    a = np.array([e.a for e in filling.edges], dtype=int)
    b = np.array([e.b for e in filling.edges], dtype=int)
    ma, mb = filling.masses[a], filling.masses[b]
    share = np.minimum(ma, mb) / (ma + mb)
    ratio = np.maximum(ma / mb, mb / ma)
    max_ratio = float(np.max(ratio)) if ratio.size else 1.0
    return EdgeComparability(
        min_share=float(np.min(share)) if share.size else 0.5,
        max_mass_ratio=max_ratio,
        bound=1.0 / (1.0 + max_ratio),
    )


def point_height(filling: Filling, x: EdgePoint) -> float:
    return graph_height(filling, x)


def level_mass_sums(filling: Filling) -> Dict[int, float]:
    """Sum of (nu(B_v1) + nu(B_v2)) over edges starting at each level, horizontal edges doubled."""
    out: Dict[int, float] = {}
    for eid, e in filling.iter_edges():
        n = filling.level(e.a)
        out[n] = out.get(n, 0.0) + _edge_mass_sum(filling, eid) * (2.0 if e.kind == HORIZONTAL else 1.0)
    return out


def level_edge_masses(filling: Filling, N: int) -> Tuple[Dict[int, float], Dict[int, float]]:
    """
    Per level n < N: the sums of nu(B_v1) + nu(B_v2) over vertical edges from level n
    and over horizontal edges in level n. Only edges of height at most N count.
    """
    vert = {n: 0.0 for n in range(N)}
    horiz = {n: 0.0 for n in range(N)}
    for eid, e in filling.iter_edges():
        n = filling.level(e.a)
        if n >= N:
            continue
        target = horiz if e.kind == HORIZONTAL else vert
        target[n] += _edge_mass_sum(filling, eid)
    return vert, horiz
