"""
Thin layer over scipy.integrate.quad.

Integration warnings are captured and turned into QuadratureFailure when the error
estimate misses the requested tolerance; callers probing for divergence pass
strict=False and inspect the returned estimate instead.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from . import constants as C
from .errors import QuadratureFailure

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    clean: bool  # no IntegrationWarning and error within tolerance


def _inner_points(points: Optional[Iterable[float]], a: float, b: float) -> List[float]:
    if not points:
        return []
    return sorted({float(p) for p in points if a < p < b})


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    *,
    tol: float = C.EDGE_QUAD_TOL,
    points: Optional[Sequence[float]] = None,
    limit: int = C.QUAD_LIMIT,
    strict: bool = True,
) -> QuadResult:
    """
    Integral of f over [a, b]. Interior `points` split the interval so kinks and
    jumps never sit inside a QUADPACK panel.
    """
    if a == b:
        return QuadResult(0.0, 0.0, True)
    if a > b:
        r = integrate(f, b, a, tol=tol, points=points, limit=limit, strict=strict)
        return QuadResult(-r.value, r.error, r.clean)

    cuts = [a] + _inner_points(points, a, b) + [b]
    total = 0.0
    error = 0.0
    clean = True
    for lo, hi in zip(cuts, cuts[1:]):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", IntegrationWarning)
            with np.errstate(over="ignore", under="ignore"):
                value, err = quad(f, lo, hi, epsabs=tol, epsrel=tol, limit=limit)
        bound = 10.0 * max(tol, tol * abs(value))
        if not math.isfinite(value) or (caught and err > bound):
            clean = False
            if strict:
                msg = caught[0].message if caught else "non-finite value"
                raise QuadratureFailure(
                    f"quadrature on [{lo:.6g}, {hi:.6g}] missed tol {tol:g}: estimate {value:.6g} +/- {err:.3g} ({msg})"
                )
        total += value
        error += err
    return QuadResult(total, error, clean)


def integrate_log(
    log_f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    tol: float = C.EDGE_QUAD_TOL,
    points: Optional[Sequence[float]] = None,
    strict: bool = True,
    grid: int = 65,
) -> float:
    """
    Integral of exp(log_f) over [a, b], returned as its logarithm.

    The integrand is rescaled by its largest value on a probe grid so that
    super-exponential weights (e^(t^2), e^(t^2/(p-1))) stay representable.
    """
    if b <= a:
        return -math.inf
    probe = np.linspace(a, b, grid)
    if points:
        probe = np.union1d(probe, [p for p in points if a <= p <= b])
    with np.errstate(over="ignore", divide="ignore"):
        shift = float(np.max(log_f(probe)))
    if not math.isfinite(shift):
        return shift

    def scaled(t: float) -> float:
        return float(np.exp(log_f(np.asarray([t]))[0] - shift))

    r = integrate(scaled, a, b, tol=tol, points=points, strict=strict)
    if r.value <= 0:
        return -math.inf
    return shift + math.log(r.value)
