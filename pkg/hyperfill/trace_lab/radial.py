"""
Radial functions u(x) = U(|x|) on the filling together with a density q such that
g(x) = q(|x|) is an upper gradient with respect to ds = e^(-eps|x|) d|x|, i.e.
|U(s) - U(t)| <= |integral from s to t of q(h) e^(-eps h) dh|.

Densities are carried as log q so the super-exponential profiles of the
counterexamples stay representable.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, roots_legendre

from .. import constants as C
from ..errors import InvalidParameter, ParseError
from ..filling_builder import Filling
from ..quadrature import integrate, integrate_log
from ..radial_weight import RadialWeight
from ..uniform_geometry import EdgePoint, graph_height

NEG_INF = -math.inf


@dataclass(frozen=True, eq=False)
class RadialFunction:
    tag: str
    profile: Callable[[float], float]
    log_density: Callable[[float], float]
    breakpoints: Tuple[float, ...] = ()
    # heights where U attains its designed zeros and peaks; always sampled by trace detection
    landmarks: Tuple[float, ...] = ()
    params: Dict[str, Any] = field(default_factory=dict)
    _memo: Optional[Callable[[float], float]] = field(default=None, init=False, repr=False, compare=False)

    radial = True

    def __post_init__(self):
        object.__setattr__(self, "_memo", functools.lru_cache(maxsize=1 << 16)(self.profile))

    def U(self, t: float) -> float:
        return float(self._memo(float(t)))

    def q(self, t: float) -> float:
        lq = self.log_density(float(t))
        return 0.0 if lq == NEG_INF else math.exp(min(lq, 709.0))

    def value_at(self, filling: Filling, x: EdgePoint) -> float:
        return self.U(graph_height(filling, x))

    def vertex_value(self, filling: Filling, vid: int) -> float:
        return self.U(float(filling.level(vid)))

    def breakpoints_in(self, a: float, b: float) -> list:
        return [s for s in self.breakpoints if a < s < b]

    def landmarks_in(self, a: float, b: float) -> list:
        return [s for s in self.landmarks if a <= s <= b]


def ds_mass(u: RadialFunction, eps: float, a: float, b: float, *, tol: float = C.EDGE_QUAD_TOL) -> float:
    """Integral of q(t) e^(-eps t) over [a, b], the variation budget of U there."""
    if b <= a:
        return 0.0
    log_v = integrate_log(
        lambda t: np.array([u.log_density(float(s)) - eps * float(s) for s in np.atleast_1d(t)]),
        a, b, tol=tol, points=u.breakpoints_in(a, b), strict=False,
    )
    return 0.0 if log_v == NEG_INF else math.exp(min(log_v, 709.0))


def profile_energy(
    u: RadialFunction, rho: RadialWeight, p: float, a: float, b: float, *, tol: float = C.EDGE_QUAD_TOL
) -> float:
    """Integral of q(t)^p rho(t) over [a, b]."""
    if b <= a:
        return 0.0
    log_v = integrate_log(
        lambda t: np.array([p * u.log_density(float(s)) for s in np.atleast_1d(t)]) + rho.log(t),
        a, b, tol=tol, points=u.breakpoints_in(a, b) + rho.breakpoints(a, b), strict=False,
    )
    return 0.0 if log_v == NEG_INF else math.exp(min(log_v, 709.0))


def profile_lp(
    u: RadialFunction, rho: RadialWeight, p: float, a: float, b: float, *, tol: float = C.EDGE_QUAD_TOL
) -> float:
    """Integral of |U(t)|^p rho(t) over [a, b]."""
    pts = u.breakpoints_in(a, b) + u.landmarks_in(a, b) + rho.breakpoints(a, b)
    return integrate(lambda t: abs(u.U(t)) ** p * rho.value(t), a, b, tol=tol, points=pts, strict=False).value


class LogWeightGrid:
    """
    Integrals of a positive weight exp(log_w) on [a, b], from Gauss-Legendre rules on a
    fine grid. Everything stays in log space; partial integrals never subtract.
    """

    def __init__(
        self,
        log_w: Callable[[np.ndarray], np.ndarray],
        a: float,
        b: float,
        *,
        points: Sequence[float] = (),
        per_unit: int = 64,
        nodes: int = 16,
    ):
        self.log_w = log_w
        self.a, self.b = float(a), float(b)
        n = max(2, int(math.ceil((b - a) * per_unit)) + 1)
        inner = [s for s in points if a < s < b]
        self.grid = np.union1d(np.linspace(a, b, n), inner)
        x, wts = roots_legendre(nodes)
        self._x, self._logw = x, np.log(wts)
        self.log_cells = self._log_pieces(self.grid[:-1], self.grid[1:])

    def _log_pieces(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        lo, hi = np.atleast_1d(lo), np.atleast_1d(hi)
        half = (hi - lo) / 2.0
        mid = (hi + lo) / 2.0
        ts = mid[:, None] + half[:, None] * self._x[None, :]
        with np.errstate(divide="ignore", over="ignore"):
            vals = self.log_w(ts.ravel()).reshape(ts.shape)
            out = logsumexp(vals + self._logw[None, :], axis=1) + np.log(np.where(half > 0, half, 1.0))
        return np.where(half > 0, out, NEG_INF)

    def log_integral(self, s: float, t: float) -> float:
        """log of the integral over [s, t], a <= s <= t <= b."""
        if t <= s:
            return NEG_INF
        g = self.grid
        i = int(np.searchsorted(g, s, side="right"))   # first node > s
        j = int(np.searchsorted(g, t, side="left")) - 1  # last node < t
        if i > j:
            return float(self._log_pieces(np.array([s]), np.array([t]))[0])
        parts = [
            float(self._log_pieces(np.array([s]), np.array([g[i]]))[0]),
            float(self._log_pieces(np.array([g[j]]), np.array([t]))[0]),
        ]
        if j > i:
            parts.append(float(logsumexp(self.log_cells[i:j])))
        return float(logsumexp(parts))

    def prefix(self) -> np.ndarray:
        """log of the integral from a to every grid node."""
        return np.concatenate([[NEG_INF], np.logaddexp.accumulate(self.log_cells)])

    def log_integral_from_start(self, t: float, prefix: Optional[np.ndarray] = None) -> float:
        pre = self.prefix() if prefix is None else prefix
        g = self.grid
        j = int(np.searchsorted(g, t, side="right")) - 1
        j = min(max(j, 0), len(g) - 1)
        if t <= g[j]:
            return float(pre[j])
        return float(np.logaddexp(pre[j], self._log_pieces(np.array([g[j]]), np.array([t]))[0]))


def constant_function(c: float) -> RadialFunction:
    return RadialFunction(
        tag="constant", profile=lambda t, c=float(c): c, log_density=lambda t: NEG_INF, params={"c": float(c)},
    )


def smooth_exponential(
    c: float, terms: Sequence[Tuple[float, float]], alpha: float
) -> RadialFunction:
    """
    U(t) = c + sum a_i e^(-lam_i t), q(t) = |U'(t)| e^(eps t). Rates must be positive;
    the tail of a slow term moves by about e^(-lam n) at height n, so small rates need
    deep fillings before the trace detector settles.
    """
    terms = [(float(a), float(lam)) for a, lam in terms]
    bad = [lam for _, lam in terms if not lam > 0]
    if bad:
        raise InvalidParameter(f"smooth profile rates must be > 0, got {bad}")
    eps = math.log(alpha)
    coef = np.asarray([a for a, _ in terms])
    rates = np.asarray([lam for _, lam in terms])

    def profile(t: float) -> float:
        return float(c + np.sum(coef * np.exp(-rates * t)))

    def log_density(t: float) -> float:
        slope = abs(float(np.sum(-coef * rates * np.exp(-rates * t))))
        return math.log(slope) + eps * t if slope > 0 else NEG_INF

    return RadialFunction(
        tag="smooth", profile=profile, log_density=log_density,
        params={"c": float(c), "terms": [list(tm) for tm in terms], "alpha": float(alpha)},
    )


def random_smooth(rng: np.random.Generator, alpha: float) -> RadialFunction:
    k = int(rng.integers(1, 4))
    terms = [(float(rng.uniform(-1.0, 1.0)), float(rng.uniform(1.5, 3.0))) for _ in range(k)]
    return smooth_exponential(float(rng.uniform(-1.0, 1.0)), terms, alpha)


def default_smooth(alpha: float, rate: float = 1.0) -> RadialFunction:
    """U(t) = 1 - e^(-rate t)."""
    return smooth_exponential(1.0, [(-1.0, rate)], alpha)


def profile_table(
    heights: Sequence[float],
    values: Sequence[float],
    density: Optional[Sequence[float]] = None,
    *,
    alpha: Optional[float] = None,
) -> RadialFunction:
    """
    Piecewise linear U through (heights, values), constant beyond the last height.
    Without an explicit ds-density column, q is |slope| e^(eps t), which needs alpha.
    """
    h = np.asarray(heights, dtype=float)
    v = np.asarray(values, dtype=float)
    if h.ndim != 1 or h.shape != v.shape or h.size < 2:
        raise ParseError("profile table needs matching 'heights' and 'values' of length >= 2")
    if h[0] != 0.0 or np.any(np.diff(h) <= 0):
        raise ParseError("profile heights must start at 0 and increase strictly")
    if density is not None:
        d = np.asarray(density, dtype=float)
        if d.shape != h.shape or np.any(d < 0):
            raise ParseError("profile density must match heights and be nonnegative")

        def log_density(t: float) -> float:
            val = float(np.interp(t, h, d, right=0.0))
            return math.log(val) if val > 0 else NEG_INF
    else:
        if alpha is None:
            raise ParseError("profile table without 'density' needs alpha")
        eps = math.log(alpha)
        slopes = np.abs(np.diff(v) / np.diff(h))

        def log_density(t: float) -> float:
            i = int(np.searchsorted(h, t, side="right")) - 1
            if i >= slopes.size or slopes[i] == 0:
                return NEG_INF
            return math.log(slopes[i]) + eps * t

    return RadialFunction(
        tag="table",
        profile=lambda t: float(np.interp(t, h, v)),
        log_density=log_density,
        breakpoints=tuple(float(x) for x in h),
        params={"heights": h.tolist(), "values": v.tolist(), "density": None if density is None else list(density)},
    )
