"""
p-modulus of single vertical curves in the filling.

A curve family through heights [a, b] has positive p-modulus exactly when
e^(-eps t) rho(t)^(-1/p) is locally in L^(p') there. Both sides of that
dichotomy are produced as certificates: a Hölder constant bounding every line
integral by the p-energy (positive modulus), or a density whose line integral
grows by one per shell while its energy stays summable (zero modulus).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import constants as C
from .errors import InvalidParameter, PreconditionFailure, ShellExhaustion
from .filling_builder import Filling
from .quadrature import integrate, integrate_log
from .radial_weight import RadialWeight
from .status_model import ModulusCertificate, ModulusVerdict
from .trace_params import log_p1_sup, log_rp_integral
from .uniform_geometry import EdgePoint, enumerate_rays, graph_height, kink
from .utils.checks import at_least, checked, greater_than

logger = logging.getLogger(__name__)

# shells are never narrower than this
MIN_SHELL_RADIUS = 1e-13


def _check_interval(a: float, b: float) -> Tuple[float, float]:
    a, b = float(a), float(b)
    if not (0.0 <= a < b < math.inf):
        raise InvalidParameter(f"interval [{a}, {b}] violates 0 <= a < b < inf")
    return a, b


@dataclass(frozen=True)
class Condition1:
    holds: bool
    # integral of e^(-eps p t/(p-1)) rho^(1/(1-p)) over [a, b] for p > 1, the sampled
    # sup of e^(-eps t)/rho for p = 1
    norm: float
    certificate: str = ""


@checked(p=at_least(1.0))
def check_condition1(
    rho: RadialWeight,
    p: float,
    a: float,
    b: float,
    *,
    alpha: Optional[float] = None,
    samples_per_unit: int = C.SAMPLES_PER_UNIT,
    tol: float = C.EDGE_QUAD_TOL,
) -> Condition1:
    a, b = _check_interval(a, b)
    eps = rho.epsilon(alpha)
    cert = rho.local_divergence(a, b, p, eps)
    if cert:
        return Condition1(False, math.inf, cert)
    if p == 1:
        log_v, where = log_p1_sup(rho, eps, a, b, samples_per_unit=samples_per_unit)
        detail = f"sup attained near t={where:g}"
    else:
        log_v = log_rp_integral(rho, p, eps, a, b, tol=tol)
        detail = "quadrature"
    if math.isnan(log_v) or log_v >= 709.0:
        return Condition1(False, math.inf, f"local norm non-finite on [{a:g}, {b:g}]")
    return Condition1(True, math.exp(log_v), detail)


def _singular_point(log_f: Callable[[np.ndarray], np.ndarray], rho: RadialWeight, a: float, b: float, per_unit: int) -> float:
    ts = np.union1d(np.linspace(a, b, max(2, int(math.ceil((b - a) * per_unit)) + 1)), rho.breakpoints(a, b))
    with np.errstate(over="ignore", divide="ignore"):
        return float(ts[int(np.argmax(log_f(ts)))])


def _shell_pieces(c: float, r_out: float, r_in: float, a: float, b: float) -> List[Tuple[float, float]]:
    pieces = [(max(a, c - r_out), c - r_in), (c + r_in, min(b, c + r_out))]
    return [(lo, hi) for lo, hi in pieces if hi > lo]


def _shell_witness(rho: RadialWeight, p: float, eps: float, a: float, b: float, depth: int, per_unit: int, tol: float):
    """
    Shells I_k around the blow-up point with integral of w above 2^k. On I_k the density
    h_k = e^(-eps t/(p-1)) rho^(1/(1-p)) / W_k has line integral 1 and energy W_k^(1-p).
    """
    log_w = lambda t: rho.rp_log_integrand(t, p, eps)
    c = _singular_point(log_w, rho, a, b, per_unit)
    r_out = max(c - a, b - c)
    shells, masses = [], []
    for k in range(1, depth + 1):
        r_in = r_out / 2.0
        while True:
            pieces = _shell_pieces(c, r_out, r_in, a, b)
            logs = [integrate_log(log_w, lo, hi, tol=tol, points=rho.breakpoints(lo, hi), strict=False)
                    for lo, hi in pieces]
            log_W = float(np.logaddexp.reduce(logs)) if logs else -math.inf
            if log_W > k * math.log(2.0):
                break
            r_in /= 2.0
            if r_in < MIN_SHELL_RADIUS:
                raise ShellExhaustion(
                    f"only {k - 1} shells around t={c:g} before the radius fell below {MIN_SHELL_RADIUS:g}",
                    shells=k - 1,
                )
        shells.append((c - r_out, c - r_in, c + r_in, c + r_out))
        masses.append(log_W)
        logger.debug(f"shell {k}: {r_in:.3g} <= |t - {c:g}| < {r_out:.3g}, log W = {log_W:.4g}")
        r_out = r_in
    energies = [math.exp((1.0 - p) * lw) for lw in masses]
    return c, shells, [1.0] * len(shells), energies, {"log_shell_integrals": masses}


def _level_set_witness(rho: RadialWeight, eps: float, a: float, b: float, depth: int, per_unit: int):
    """
    Level sets G_k where e^(-eps t)/rho lies in (2^k, 2^(k+1)], k >= 1. The density
    chi_G / (integral of e^(-eps t) over G) has line integral 1 and energy below 2^-k.
    """
    log_f = lambda t: rho.p1_log_integrand(t, eps)
    c = _singular_point(log_f, rho, a, b, per_unit)
    near = np.geomspace(MIN_SHELL_RADIUS, max(b - a, 1.0), 4000)
    ts = np.union1d(np.linspace(a, b, max(2, int(math.ceil((b - a) * per_unit)) + 1)),
                    np.concatenate([c - near, c + near]))
    ts = ts[(ts >= a) & (ts <= b)]
    # Voronoi cell widths of a nonuniform grid
    mids = np.concatenate([[ts[0]], (ts[1:] + ts[:-1]) / 2.0, [ts[-1]]])
    widths = np.diff(mids)
    with np.errstate(over="ignore", divide="ignore"):
        levels = np.floor(log_f(ts) / math.log(2.0))
        rho_vals = np.exp(rho.log(ts))
    ds = widths * np.exp(-eps * ts)

    found, energies, shells = [], [], []
    for k in np.unique(levels[np.isfinite(levels) & (levels >= 1)]):
        mask = levels == k
        line = float(np.sum(ds[mask]))
        if line <= 0.0:
            continue
        found.append(int(k))
        energies.append(float(np.sum(widths[mask] * rho_vals[mask])) / line)
        shells.append((float(ts[mask].min()), float(ts[mask].max())))
        if len(found) == depth:
            break
    if len(found) < depth:
        raise ShellExhaustion(f"only {len(found)} nonempty level sets on the sampling grid", shells=len(found))
    return c, shells, [1.0] * depth, energies, {"levels": found}


@checked(p=at_least(1.0), depth=greater_than(0))
def witness_zero_modulus(
    rho: RadialWeight,
    p: float,
    a: float,
    b: float,
    depth: int = C.MODULUS_DEPTH,
    *,
    alpha: Optional[float] = None,
    samples_per_unit: int = C.SAMPLES_PER_UNIT,
    tol: float = C.EDGE_QUAD_TOL,
) -> ModulusCertificate:
    """
    Density phi on the vertical geodesic through heights [a, b] with infinite line
    integral and finite p-energy. Partial sums are cumulative over shells.
    """
    a, b = _check_interval(a, b)
    cond = check_condition1(rho, p, a, b, alpha=alpha, samples_per_unit=samples_per_unit, tol=tol)
    if cond.holds:
        raise PreconditionFailure(
            f"local integrability holds on [{a:g}, {b:g}] (norm {cond.norm:.6g}); no zero-modulus witness exists"
        )
    eps = rho.epsilon(alpha)
    if p > 1:
        c, shells, lines, energies, extra = _shell_witness(rho, p, eps, a, b, int(depth), samples_per_unit, tol)
        kind = "shells"
    else:
        c, shells, lines, energies, extra = _level_set_witness(rho, eps, a, b, int(depth), samples_per_unit)
        kind = "level sets"
    logger.info(f"zero-modulus witness for {rho.describe()}: {len(shells)} {kind} around t={c:g}")
    return ModulusCertificate(
        verdict=ModulusVerdict.ZERO_WITNESS,
        p=float(p),
        interval=(a, b),
        shells=[tuple(float(x) for x in s) for s in shells],
        line_partial_sums=np.cumsum(lines).tolist(),
        energy_partial_sums=np.cumsum(energies).tolist(),
        curve=f"vertical geodesic from height {a:g} to {b:g}",
        diagnostics={"center": c, "kind": kind, "condition": cond.certificate, **extra},
    )


PointFunction = Callable[[EdgePoint], float]


@dataclass(frozen=True)
class HolderCheck:
    lhs: float        # line integral of phi ds
    energy: float     # integral of phi^p d mu along the curve
    rhs: float        # energy^(1/p)
    constant: float   # Hölder constant of the curve
    # lhs / (constant * rhs); at most one. Invariant under scaling phi and nu.
    ratio: float
    # lhs / rhs, the constant the data actually needed
    empirical: float
    ball_mass_floor: float  # min nu(B_v) / nu(Z) over the curve's vertices

    @property
    def holds(self) -> bool:
        return self.ratio <= 1.0 + 1e-8


def _check_curve(filling: Filling, curve: Sequence[int]) -> List[int]:
    if not curve:
        raise InvalidParameter("curve needs at least one edge")
    eids = [int(e) for e in curve]
    for e0, e1 in zip(eids, eids[1:]):
        x, y = filling.edge(e0), filling.edge(e1)
        if not {x.a, x.b} & {y.a, y.b}:
            raise InvalidParameter(f"edges {e0} and {e1} do not share a vertex")
    return eids


def _curve_constant(filling: Filling, rho: RadialWeight, p: float, eps: float, eids: List[int], samples: int, tol: float) -> float:
    if p == 1:
        worst = 0.0
        for eid in eids:
            e = filling.edges[eid]
            m = float(filling.masses[e.a] + filling.masses[e.b])
            hs = np.asarray([graph_height(filling, EdgePoint(eid, float(t))) for t in np.linspace(0.0, 1.0, samples)])
            worst = max(worst, float(np.max(np.exp(rho.p1_log_integrand(hs, eps)))) / m)
        return worst
    total = 0.0
    for eid in eids:
        e = filling.edges[eid]
        m = float(filling.masses[e.a] + filling.masses[e.b])
        f = lambda t: math.exp(float(rho.rp_log_integrand(graph_height(filling, EdgePoint(eid, t)), p, eps)))
        total += m ** (1.0 / (1.0 - p)) * integrate(f, 0.0, 1.0, tol=tol, points=[kink(filling, eid)], strict=False).value
    return total ** ((p - 1.0) / p)


@checked(p=at_least(1.0))
def holder_bound_check(
    filling: Filling,
    rho: RadialWeight,
    p: float,
    curve: Sequence[int],
    phi: PointFunction,
    *,
    phi_points: Sequence[float] = (),
    tol: float = C.EDGE_QUAD_TOL,
    samples: int = 257,
) -> HolderCheck:
    """
    Hölder on a finite curve of edges: the line integral of phi ds is at most
    C (integral of phi^p d mu)^(1/p), with C built from the weight and the ball masses
    along the curve. `phi_points` are edge parameters where phi has kinks.
    """
    eids = _check_curve(filling, curve)
    eps = filling.epsilon
    lhs, energy = 0.0, 0.0
    for eid in eids:
        e = filling.edges[eid]
        m = float(filling.masses[e.a] + filling.masses[e.b])
        pts = sorted({kink(filling, eid), *phi_points})

        def line(t, eid=eid):
            x = EdgePoint(eid, t)
            return phi(x) * math.exp(-eps * graph_height(filling, x))

        def mu(t, eid=eid):
            x = EdgePoint(eid, t)
            return phi(x) ** p * rho.value(graph_height(filling, x))

        lhs += integrate(line, 0.0, 1.0, tol=tol, points=pts, strict=False).value
        energy += m * integrate(mu, 0.0, 1.0, tol=tol, points=pts, strict=False).value

    const = _curve_constant(filling, rho, p, eps, eids, samples, tol)
    rhs = energy ** (1.0 / p)
    verts = {v for eid in eids for v in (filling.edges[eid].a, filling.edges[eid].b)}
    floor = min(float(filling.masses[v]) for v in verts) / filling.space.total_mass
    if rhs == 0.0:
        ratio = 0.0 if lhs == 0.0 else math.inf
    else:
        ratio = lhs / (const * rhs) if const > 0 else math.inf
    return HolderCheck(
        lhs=lhs, energy=energy, rhs=rhs, constant=const, ratio=ratio,
        empirical=lhs / rhs if rhs > 0 else math.inf, ball_mass_floor=floor,
    )


def random_edge_function(rng: np.random.Generator, knots: int = 5) -> Tuple[PointFunction, List[float]]:
    """Nonnegative phi, piecewise linear in the edge parameter with random knot values per edge."""
    ts = np.linspace(0.0, 1.0, knots)
    cache = {}

    def phi(x: EdgePoint) -> float:
        vals = cache.get(x.edge)
        if vals is None:
            vals = cache[x.edge] = rng.uniform(0.0, 1.0, knots)
        return float(np.interp(x.t, ts, vals))

    return phi, ts[1:-1].tolist()


@checked(p=at_least(1.0), trials=greater_than(0))
def positive_modulus_bound(
    filling: Filling,
    rho: RadialWeight,
    p: float,
    curve: Sequence[int],
    *,
    trials: int = 100,
    seed: int = 0,
    tol: float = C.EDGE_QUAD_TOL,
) -> ModulusCertificate:
    """
    Runs holder_bound_check on `trials` seeded random densities. Every admissible phi
    has line integral >= 1, so the modulus of the curve is at least C^-p.
    """
    rng = np.random.default_rng(seed)
    eids = _check_curve(filling, curve)
    checks = []
    for _ in range(int(trials)):
        phi, pts = random_edge_function(rng)
        checks.append(holder_bound_check(filling, rho, p, eids, phi, phi_points=pts, tol=tol))
    violations = [c for c in checks if not c.holds]
    if violations:
        logger.warning(f"{len(violations)} of {len(checks)} Hölder trials exceeded the curve constant")
    const = checks[0].constant
    lo = min(float(filling.level(filling.edges[e].a)) for e in eids)
    hi = max(graph_height(filling, EdgePoint(e, kink(filling, e))) for e in eids)
    return ModulusCertificate(
        verdict=ModulusVerdict.POSITIVE_BOUND,
        p=float(p),
        interval=(lo, hi),
        bound=const ** (-p) if 0 < const < math.inf else 0.0,
        curve=f"edges {eids}",
        diagnostics={
            "constant": const,
            "max_ratio": max(c.ratio for c in checks),
            "max_empirical": max(c.empirical for c in checks),
            "violations": len(violations),
            "ball_mass_floor": checks[0].ball_mass_floor,
            "trials": int(trials),
            "seed": int(seed),
        },
    )


def vertical_curve(filling: Filling, xi: int, a: int, b: int) -> List[int]:
    """Edges of the first geodesic ray towards xi between integer heights a < b."""
    if not 0 <= a < b <= filling.levels:
        raise InvalidParameter(f"heights [{a}, {b}] outside [0, {filling.levels}]")
    ray = enumerate_rays(filling, xi, max_rays=1)[0]
    return ray.edges(filling)[a:b]


def probe(
    rho: RadialWeight,
    p: float,
    a: float,
    b: float,
    *,
    depth: int = C.MODULUS_DEPTH,
    alpha: Optional[float] = None,
    samples_per_unit: int = C.SAMPLES_PER_UNIT,
    filling: Optional[Filling] = None,
    trials: int = 100,
    seed: int = 0,
) -> ModulusCertificate:
    """
    Whichever side of the dichotomy holds on [a, b]. The positive side needs a filling
    to run the Hölder trials on; without one it reports the local norm alone.
    """
    cond = check_condition1(rho, p, a, b, alpha=alpha, samples_per_unit=samples_per_unit)
    if not cond.holds:
        return witness_zero_modulus(rho, p, a, b, depth, alpha=alpha, samples_per_unit=samples_per_unit)
    if filling is None:
        return ModulusCertificate(
            verdict=ModulusVerdict.POSITIVE_BOUND, p=float(p), interval=(float(a), float(b)),
            bound=None, curve=f"vertical geodesic from height {a:g} to {b:g}",
            diagnostics={"local_norm": cond.norm, "condition": cond.certificate},
        )
    lo, hi = int(math.floor(a)), max(int(math.ceil(b)), int(math.floor(a)) + 1)
    cert = positive_modulus_bound(filling, rho, p, vertical_curve(filling, 0, lo, min(hi, filling.levels)),
                                  trials=trials, seed=seed)
    cert.diagnostics["local_norm"] = cond.norm
    return cert
