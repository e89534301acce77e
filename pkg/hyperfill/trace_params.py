"""
Regime parameters of a radial weight.

R_{p,rho} = integral over [0, inf) of w(t) = e^(-eps p t/(p-1)) rho(t)^(1/(1-p)) for
p > 1, and the essential supremum of e^(-eps t)/rho(t) for p = 1. calR_{p,rho} is the
supremum of the integrals of w over the cells of a partition of [0, inf) into
unit rho-mass intervals; it equals R when mu(X) is finite or p = 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from . import constants as C
from .errors import HypothesisViolation, InsufficientMass, InvariantViolation, TailUnknown
from .quadrature import integrate_log
from .radial_weight import RadialWeight
from .status_model import ParamValue, RegimeReport
from .utils.checks import at_least, checked, greater_than

logger = logging.getLogger(__name__)


def _log_guard(guard: float) -> float:
    return math.log(guard)


def log_rp_integral(
    rho: RadialWeight, p: float, eps: float, a: float, b: float, *, tol: float = C.EDGE_QUAD_TOL
) -> float:
    """log of the integral of w over [a, b], unit chunk by unit chunk."""
    parts = []
    lo = a
    while lo < b:
        hi = min(b, math.floor(lo) + 1.0)
        parts.append(integrate_log(
            lambda t: rho.rp_log_integrand(t, p, eps), lo, hi,
            tol=tol, points=rho.breakpoints(lo, hi), strict=False,
        ))
        lo = hi
    return float(np.logaddexp.reduce(parts)) if parts else -math.inf


def log_p1_sup(
    rho: RadialWeight, eps: float, a: float, b: float, *, samples_per_unit: int = C.SAMPLES_PER_UNIT
) -> Tuple[float, float]:
    """(log of the sampled sup of e^(-eps t)/rho(t) on [a, b], where it is attained)."""
    n = max(2, int(math.ceil((b - a) * samples_per_unit)) + 1)
    ts = np.union1d(np.linspace(a, b, n), rho.breakpoints(a, b))
    with np.errstate(over="ignore", divide="ignore"):
        logs = rho.p1_log_integrand(ts, eps)
    k = int(np.argmax(logs))
    return float(logs[k]), float(ts[k])


@dataclass(frozen=True)
class Membership:
    member: bool
    certificate: str
    # (a, b, local norm) per unit interval; the local norm is the integral of w (p > 1)
    # or the sampled sup of e^(-eps t)/rho (p = 1)
    local_norms: Tuple[Tuple[float, float, float], ...] = ()
    diverging: Optional[Tuple[float, float]] = None
    # sampled heights where rho sits at the density floor; norms there stand in for divergence
    floor_hits: Tuple[float, ...] = ()


# rho within a factor 1e3 of DENSITY_FLOOR counts as floored
_FLOOR_LOG = math.log(C.DENSITY_FLOOR) + math.log(1e3)
# families given by samples or pieces, where a floored value stands in for a zero
FLOORED_FAMILIES = ("custom", "piecewise")


def _floor_hit(rho: RadialWeight, a: float, b: float, samples_per_unit: int) -> Optional[float]:
    n = max(2, int(math.ceil((b - a) * samples_per_unit)) + 1)
    ts = np.union1d(np.linspace(a, b, n), rho.breakpoints(a, b))
    hit = np.flatnonzero(np.asarray(rho.log(ts)) <= _FLOOR_LOG)
    return float(ts[hit[0]]) if hit.size else None


def _local_norm(rho: RadialWeight, p: float, eps: float, a: float, b: float, samples_per_unit: int, tol: float):
    """(norm, diverging certificate or "")."""
    cert = rho.local_divergence(a, b, p, eps)
    if cert:
        return math.inf, cert
    if p == 1:
        log_v, _ = log_p1_sup(rho, eps, a, b, samples_per_unit=samples_per_unit)
    else:
        log_v = log_rp_integral(rho, p, eps, a, b, tol=tol)
    if not math.isfinite(log_v) and log_v > 0:
        return math.inf, f"local norm non-finite on [{a:g}, {b:g}]"
    return (math.exp(log_v) if log_v < 709.0 else math.inf), ""


@checked(p=at_least(1.0), horizon=greater_than(0.0))
def fp_membership(
    rho: RadialWeight,
    p: float,
    horizon: float = C.DEFAULT_T_MAX,
    *,
    alpha: Optional[float] = None,
    samples_per_unit: int = C.SAMPLES_PER_UNIT,
    tol: float = C.EDGE_QUAD_TOL,
) -> Membership:
    """
    Local test of the admissibility class: e^(-eps p t)/rho in L^(1/(p-1)) on bounded
    sets for p > 1, e^(-eps t)/rho locally bounded for p = 1, checked on unit
    intervals covering [0, horizon].
    """
    eps = rho.epsilon(alpha)
    norms = []
    floored: List[float] = []
    a = 0.0
    while a < horizon:
        b = min(horizon, a + 1.0)
        norm, cert = _local_norm(rho, p, eps, a, b, samples_per_unit, tol)
        norms.append((a, b, norm))
        if cert:
            logger.info(f"{rho.describe()} fails admissibility on [{a:g}, {b:g}]: {cert}")
            return Membership(False, cert, tuple(norms), (a, b), tuple(floored))
        hit = _floor_hit(rho, a, b, samples_per_unit) if rho.family in FLOORED_FAMILIES else None
        if hit is not None:
            floored.append(hit)
            logger.warning(
                f"{rho.describe()} reaches the density floor {C.DENSITY_FLOOR:g} near t={hit:.6g}; "
                f"the local norm {norm:.6g} on [{a:g}, {b:g}] is finite only through the floor"
            )
        a = b
    certificate = f"finite local norms on [0, {horizon:g}]"
    if floored:
        certificate += f"; rho floored near t={', '.join(f'{t:.6g}' for t in floored)}"
    return Membership(True, certificate, tuple(norms), floor_hits=tuple(floored))


@checked(p=at_least(1.0), t_max=greater_than(0.0))
def param_R(
    rho: RadialWeight,
    p: float,
    t_max: float = C.DEFAULT_T_MAX,
    tol: float = C.EDGE_QUAD_TOL,
    *,
    alpha: Optional[float] = None,
    strict: bool = False,
    overflow_guard: float = C.OVERFLOW_GUARD,
    samples_per_unit: int = C.SAMPLES_PER_UNIT,
) -> ParamValue:
    """
    R_{p,rho}: quadrature on [0, t_max] plus the family's analytic tail. With an
    unknown tail the body is returned as a flagged lower bound, or TailUnknown is
    raised when strict.
    """
    eps = rho.epsilon(alpha)
    log_guard = _log_guard(overflow_guard)

    cert = rho.local_divergence(0.0, t_max, p, eps)
    if cert:
        return ParamValue.inf(cert)

    if p == 1:
        log_body, where = log_p1_sup(rho, eps, 0.0, t_max, samples_per_unit=samples_per_unit)
        if log_body > log_guard:
            return ParamValue.inf(f"overflow guard: e^(-eps t)/rho > {overflow_guard:g} at t={where:g}")
        tail = rho.p1_tail(t_max, eps)
        body = math.exp(log_body)
        provenance = "sup over samples"
    else:
        parts = []
        a = 0.0
        while a < t_max:
            b = min(t_max, a + 1.0)
            parts.append(log_rp_integral(rho, p, eps, a, b, tol=tol))
            if np.logaddexp.reduce(parts) > log_guard:
                return ParamValue.inf(f"overflow guard: partial integral > {overflow_guard:g} on [0, {b:g}]")
            a = b
        body = math.exp(float(np.logaddexp.reduce(parts)))
        tail = rho.rp_tail(t_max, p, eps)
        provenance = "quadrature"

    if tail is None:
        msg = f"R_{{{p:g}}} for {rho.describe()}: tail beyond t={t_max:g} unknown, {body:.6g} is a lower bound"
        if strict:
            raise TailUnknown(msg, lower_bound=body)
        logger.warning(msg)
        return ParamValue(body, infinite=False, provenance=provenance, lower_bound=True)
    if math.isinf(tail.value):
        return ParamValue.inf(tail.certificate)
    if p == 1:
        return ParamValue(max(body, tail.value), provenance=f"{provenance} + {tail.certificate} tail")
    value = body + tail.value
    if value > overflow_guard:
        return ParamValue.inf(f"overflow guard: {value:.3g}")
    return ParamValue(value, provenance=f"{provenance} + {tail.certificate} tail")


@dataclass(frozen=True)
class UnitMassPartition:
    """Cells O_k = [t_k, t_{k+1}) of unit rho-mass; a leftover partial cell is kept apart."""
    breakpoints: Tuple[float, ...]
    masses: Tuple[float, ...]
    partial_cell: Optional[Tuple[float, float]] = None
    partial_mass: float = 0.0

    @property
    def cells(self) -> List[Tuple[float, float]]:
        return list(zip(self.breakpoints, self.breakpoints[1:]))

    def __len__(self) -> int:
        return len(self.masses)


@checked(max_cells=at_least(1), t_max=greater_than(0.0), tol=greater_than(0.0))
def partition_unit_mass(
    rho: RadialWeight,
    max_cells: int = C.PARTITION_MAX_CELLS,
    t_max: float = C.DEFAULT_T_MAX,
    tol: float = C.PARTITION_TOL,
) -> UnitMassPartition:
    """Breakpoints with F(t_{k+1}) - F(t_k) = 1, F the cumulative rho-mass from 0."""
    total = rho.mass(0.0, t_max)
    if total < 1.0:
        raise InsufficientMass(f"{rho.describe()}: mass {total:.6g} < 1 on [0, {t_max:g}]")

    bps = [0.0]
    masses: List[float] = []
    partial = None
    partial_mass = 0.0
    while len(masses) < max_cells:
        lo = bps[-1]
        rest = rho.mass(lo, t_max)
        if rest < 1.0:
            if rest > 0.0:
                partial, partial_mass = (lo, t_max), rest
            break
        step = 1.0
        hi = min(t_max, lo + step)
        while rho.mass(lo, hi) < 1.0:
            step *= 2.0
            hi = min(t_max, lo + step)
        # brentq's xtol is in t; scale it so the mass error stays below tol
        scale = max(1.0, float(np.max(rho(np.linspace(lo, hi, 33)))))
        t_next = brentq(
            lambda t: rho.mass(lo, t) - 1.0, lo, hi,
            xtol=max(tol / scale * 0.01, 1e-300), rtol=4.0 * np.finfo(float).eps, maxiter=500,
        )
        bps.append(float(t_next))
        masses.append(rho.mass(lo, t_next))

    logger.debug(f"unit-mass partition of {rho.describe()}: {len(masses)} cells up to t={bps[-1]:.6g}")
    return UnitMassPartition(tuple(bps), tuple(masses), partial, partial_mass)


def mu_finite(rho: RadialWeight) -> Optional[bool]:
    """mu(X) < inf iff the integral of rho over [0, inf) is finite; None when the tail is unknown."""
    if rho.tail == "integrable":
        return True
    if rho.tail == "nonintegrable":
        return False
    return None


FLAT = "flat"
NONINCREASING = "nonincreasing"
INCREASING = "increasing"
SETTLING = "settling"
MIXED = "mixed"

# consecutive cell ratio above which an increasing tail counts as geometric growth
GROWTH_RATIO = 1.5


def _tail_trend(values: List[float]) -> Optional[str]:
    """
    Direction of the second half of the cell values: FLAT, NONINCREASING, SETTLING
    (increasing by steps that at least halve), INCREASING, or MIXED. None when fewer
    than three cells are left to judge.
    """
    tail = np.asarray(values[len(values) // 2:])
    if tail.size < 3:
        return None
    if np.ptp(tail) <= 1e-6 * np.max(np.abs(tail)):
        return FLAT
    d = np.diff(tail)
    if np.all(d <= 1e-12 * np.abs(tail[:-1]) + 1e-300):
        return NONINCREASING
    if np.all(d >= 0):
        if d.size >= 2 and np.all(d[1:] <= 0.5 * d[:-1]):
            return SETTLING
        return INCREASING
    return MIXED


@dataclass(frozen=True)
class CalRResult:
    value: ParamValue
    cell_values: Tuple[float, ...] = ()
    trend: Optional[str] = None
    partition: Optional[UnitMassPartition] = field(default=None, repr=False)

    @property
    def monotone(self) -> Optional[bool]:
        if self.trend is None:
            return None
        return self.trend != MIXED

    @property
    def resolved(self) -> bool:
        """False while the cell integrals are still climbing without a recognisable rate."""
        return not (self.trend == INCREASING and self.value.finite)


@checked(p=at_least(1.0))
def param_calR(
    rho: RadialWeight,
    p: float,
    max_cells: int = C.PARTITION_MAX_CELLS,
    t_max: float = C.DEFAULT_T_MAX,
    tol: float = C.EDGE_QUAD_TOL,
    *,
    alpha: Optional[float] = None,
    overflow_guard: float = C.OVERFLOW_GUARD,
    samples_per_unit: int = C.SAMPLES_PER_UNIT,
) -> CalRResult:
    """Supremum over unit rho-mass cells of the cell integral of w; R when p = 1 or mu(X) < inf."""
    if p == 1 or mu_finite(rho) is True:
        return CalRResult(param_R(
            rho, p, t_max, tol, alpha=alpha, overflow_guard=overflow_guard, samples_per_unit=samples_per_unit,
        ))
    eps = rho.epsilon(alpha)
    try:
        part = partition_unit_mass(rho, max_cells, t_max)
    except InsufficientMass:
        if mu_finite(rho) is None:
            return CalRResult(param_R(rho, p, t_max, tol, alpha=alpha, overflow_guard=overflow_guard))
        raise

    log_guard = _log_guard(overflow_guard)
    values: List[float] = []
    for k, (a, b) in enumerate(part.cells, start=1):
        cert = rho.local_divergence(a, b, p, eps)
        if cert:
            return CalRResult(ParamValue.inf(f"cell {k}: {cert}"), tuple(values), None, part)
        log_v = log_rp_integral(rho, p, eps, a, b, tol=tol)
        if log_v > log_guard:
            values.append(math.inf)
            return CalRResult(
                ParamValue.inf(f"overflow guard: cell {k} = [{a:.6g}, {b:.6g}) integral > {overflow_guard:g}"),
                tuple(values), None, part,
            )
        values.append(math.exp(log_v))

    trend = _tail_trend(values)
    best = max(values)
    n = len(values)
    if trend == INCREASING:
        tail = np.asarray(values[n // 2:])
        growth = float(np.min(tail[1:] / tail[:-1]))
        if growth >= GROWTH_RATIO:
            return CalRResult(
                ParamValue.inf(
                    f"trend: cell integrals grow by a factor >= {growth:.3g} over cells {n - tail.size + 1}..{n}"
                ),
                tuple(values), trend, part,
            )
        logger.warning(f"calR cells of {rho.describe()} still increase after {n} cells; {best:.6g} is a lower bound")
    elif trend in (MIXED, SETTLING):
        logger.warning(f"calR cells of {rho.describe()} have a {trend} tail; sup is a lower bound")
    return CalRResult(
        ParamValue(best, provenance=f"sup over {n} cells", lower_bound=trend not in (FLAT, NONINCREASING)),
        tuple(values), trend, part,
    )


@checked(p=at_least(1.0))
def classify_regime(
    rho: RadialWeight,
    p: float,
    alpha: Optional[float] = None,
    *,
    t_max: float = C.DEFAULT_T_MAX,
    max_cells: int = C.PARTITION_MAX_CELLS,
    tol: float = C.EDGE_QUAD_TOL,
    overflow_guard: float = C.OVERFLOW_GUARD,
    samples_per_unit: int = C.SAMPLES_PER_UNIT,
) -> RegimeReport:
    eps = rho.epsilon(alpha)
    alpha = math.exp(eps)
    member = fp_membership(rho, p, min(t_max, 16.0), alpha=alpha, samples_per_unit=samples_per_unit, tol=tol)
    if not member.member:
        raise HypothesisViolation(f"{rho.describe()} is not admissible for p={p:g}: {member.certificate}")

    R = param_R(rho, p, t_max, tol, alpha=alpha, overflow_guard=overflow_guard, samples_per_unit=samples_per_unit)
    calR = param_calR(
        rho, p, max_cells, t_max, tol, alpha=alpha, overflow_guard=overflow_guard, samples_per_unit=samples_per_unit,
    )
    finite_mu = mu_finite(rho)
    if R.finite and not R.lower_bound and calR.value.infinite:
        raise InvariantViolation(f"R = {R.value:.6g} finite but calR flagged infinite for {rho.describe()}")

    report = RegimeReport(
        rho=rho.describe(), p=float(p), alpha=alpha, mu_finite=finite_mu,
        R=R, calR=calR.value,
        traces_exist_N=calR.value.finite if calR.resolved else None,
        traces_exist_dotN=R.finite,
        zero_trace=finite_mu is False and calR.value.finite and calR.resolved,
        membership=member.certificate,
        cell_values=list(calR.cell_values),
        cells_monotone=calR.monotone,
        cells_trend=calR.trend,
    )
    logger.info(f"regime {report.rho}, p={p:g}: mu finite={finite_mu}, R={R.value:.6g}, calR={calR.value.value:.6g}")
    return report
