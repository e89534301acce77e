"""
Radial weights rho: [0, inf) -> (0, inf) for the lifted measure.

Each family evaluates log(rho) on numpy arrays and, where it can, supplies closed
forms for rho-masses and for the tail of the regime integrand
e^(-eps p t/(p-1)) rho(t)^(1/(1-p)). A tail that is provably infinite is returned
as math.inf together with a certificate string; a tail nobody knows is None.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import erfc

from . import constants as C
from .errors import InvalidParameter, ParseError
from .quadrature import integrate

logger = logging.getLogger(__name__)

TAIL_FLAGS = ("integrable", "nonintegrable", "unknown")
FAMILIES = (
    "bbs", "example11", "constant", "exp_rate", "piecewise", "custom",
    "critical", "dip", "spike_gap", "exploding",
)


@dataclass(frozen=True)
class TailBound:
    value: float
    certificate: str = ""


def _exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def _exp_linear_integral(c0: float, slope: float, length: float) -> float:
    """Integral of exp(c0 + slope s) for s in [0, length]; length may be inf."""
    if math.isinf(length):
        if slope < 0:
            return _exp(c0) / -slope
        return math.inf
    if slope == 0.0:
        return _exp(c0) * length
    if slope > 0:
        # factor out the right end so expm1 never overflows
        return _exp(c0 + slope * length) * -math.expm1(-slope * length) / slope
    return _exp(c0) * -math.expm1(slope * length) / -slope


class _Family:
    tail = "unknown"

    def log_rho(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def breakpoints(self, a: float, b: float) -> List[float]:
        return []

    def mass(self, a: float, b: float) -> Optional[float]:
        return None

    def rp_tail(self, T: float, p: float, eps: float) -> Optional[TailBound]:
        return None

    def p1_tail(self, T: float, eps: float) -> Optional[TailBound]:
        """Supremum of e^(-eps t)/rho(t) over [T, inf), when known."""
        return None

    def local_divergence(self, a: float, b: float, p: float, eps: float) -> Optional[str]:
        return None


class _LogLinear(_Family):
    """
    Piecewise log-linear rho: on [s_i, s_{i+1}) log rho(t) = c_i + k_i (t - s_i);
    the last piece extends to infinity unless `certificate` describes how the
    pattern continues beyond the last listed piece.
    """

    def __init__(
        self,
        pieces: Sequence[Tuple[float, float, float]],
        certificate: str = "",
        certificate_p: Optional[float] = None,
        periodic_mass: bool = False,
    ):
        if not pieces or float(pieces[0][0]) != 0.0:
            raise InvalidParameter("piecewise weight must start at t = 0")
        starts = [float(s) for s, _, _ in pieces]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise InvalidParameter("piece starts must be strictly increasing")
        self.starts = np.asarray(starts)
        self.c0 = np.asarray([float(c) for _, c, _ in pieces])
        self.slopes = np.asarray([float(k) for _, _, k in pieces])
        self.certificate = certificate
        self.certificate_p = certificate_p
        # pattern continues with unit-mass cells beyond the listed pieces
        self.periodic_mass = periodic_mass
        if periodic_mass:
            self.tail = "nonintegrable"
        else:
            self.tail = "integrable" if self.slopes[-1] < 0 else "nonintegrable"

    def _piece(self, t: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self.starts, t, side="right") - 1, 0, None)

    def log_rho(self, t):
        t = np.asarray(t, dtype=float)
        i = self._piece(t)
        return self.c0[i] + self.slopes[i] * (t - self.starts[i])

    def breakpoints(self, a, b):
        return [float(s) for s in self.starts if a < s < b]

    def _pieces_over(self, a: float, b: float):
        i = int(self._piece(np.asarray([a]))[0])
        n = len(self.starts)
        while i < n:
            lo = max(a, float(self.starts[i]))
            hi = float(self.starts[i + 1]) if i + 1 < n else math.inf
            hi = min(hi, b)
            if lo >= hi:
                if hi >= b:
                    break
                i += 1
                continue
            c_lo = float(self.c0[i] + self.slopes[i] * (lo - self.starts[i]))
            yield lo, hi, c_lo, float(self.slopes[i])
            if hi >= b:
                break
            i += 1

    def mass(self, a, b):
        if math.isinf(b) and self.periodic_mass:
            return math.inf
        return float(sum(_exp_linear_integral(c, k, hi - lo) for lo, hi, c, k in self._pieces_over(a, b)))

    def rp_tail(self, T, p, eps):
        if self.certificate:
            if self.certificate_p is not None and abs(p - self.certificate_p) < 1e-12:
                return TailBound(math.inf, self.certificate)
            return None
        total = 0.0
        for lo, hi, c, k in self._pieces_over(T, math.inf):
            # log integrand = -eps p t/(p-1) - log rho/(p-1), linear on the piece
            c_rp = (-eps * p * lo - c) / (p - 1.0)
            k_rp = (-eps * p - k) / (p - 1.0)
            part = _exp_linear_integral(c_rp, k_rp, hi - lo)
            if math.isinf(part):
                return TailBound(math.inf, f"integrand nondecreasing on [{lo:g}, inf)")
            total += part
        return TailBound(total, "closed form")

    def p1_tail(self, T, eps):
        if self.periodic_mass:
            return None
        best = 0.0
        for lo, hi, c, k in self._pieces_over(T, math.inf):
            slope = -eps - k
            if math.isinf(hi):
                if slope > 0:
                    return TailBound(math.inf, f"e^(-eps t)/rho increasing on [{lo:g}, inf)")
                best = max(best, _exp(-eps * lo - c))
            else:
                best = max(best, _exp(-eps * lo - c), _exp(-eps * hi - c - k * (hi - lo)))
        return TailBound(best, "closed form")


class _Example11(_Family):
    tail = "integrable"

    def __init__(self, p: float, eps: float):
        self.beta = eps * p

    def log_rho(self, t):
        t = np.asarray(t, dtype=float)
        return -t * t - self.beta * t

    def mass(self, a, b):
        h = self.beta / 2.0
        scale = math.exp(h * h) * math.sqrt(math.pi) / 2.0
        upper = 0.0 if math.isinf(b) else float(erfc(b + h))
        return scale * (float(erfc(a + h)) - upper)

    def rp_tail(self, T, p, eps):
        # (t^2 + beta t - eps p t)/(p-1) is eventually increasing for every p > 1
        return TailBound(math.inf, "integrand grows like e^(t^2/(p-1))")

    def p1_tail(self, T, eps):
        return TailBound(math.inf, "e^(-eps t)/rho grows like e^(t^2)")


class _Dip(_Family):
    tail = "integrable"

    def __init__(self, p: float, eps: float, center: float):
        self.p = p
        self.eps = eps
        self.center = center
        self.order = 2.0 * (p - 1.0) if p > 1 else 1.0

    def log_rho(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            dip = self.order * np.log(np.abs(t - self.center))
        return np.maximum(dip, math.log(C.DENSITY_FLOOR)) - self.eps * self.p * t

    def breakpoints(self, a, b):
        return [self.center] if a < self.center < b else []

    def local_divergence(self, a, b, p, eps):
        if not a <= self.center <= b:
            return None
        if p == 1:
            return f"e^(-eps t)/rho unbounded near t={self.center:g}"
        gamma = self.order / (p - 1.0)
        if gamma >= 1.0:
            return f"integrand ~ |t-{self.center:g}|^(-{gamma:g}) is not integrable near t={self.center:g}"
        return None

    def rp_tail(self, T, p, eps):
        if p > 1 and abs(p - self.p) < 1e-15 and abs(eps - self.eps) < 1e-15 and T > self.center:
            # integrand is exactly |t - c|^-2
            return TailBound(1.0 / (T - self.center), "closed form")
        return None

    def p1_tail(self, T, eps):
        if T <= self.center + 1.0:
            return None
        # log(e^(-eps t)/rho) = (eps_own p_own - eps) t - order log|t - c|
        rate = self.eps * self.p - eps
        if rate > 1e-15:
            return TailBound(math.inf, "e^(-eps t)/rho grows exponentially")
        return TailBound(_exp(rate * T) * (T - self.center) ** -self.order, "closed form")


class _Custom(_Family):
    def __init__(self, ts: Sequence[float], values: Sequence[float], tail: str):
        t = np.asarray(ts, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ParseError("custom weight needs matching 't' and 'rho' sample lists of length >= 2")
        if np.any(np.diff(t) <= 0) or t[0] != 0.0:
            raise ParseError("custom weight samples must start at t=0 and increase strictly")
        if np.any(v <= 0):
            raise InvalidParameter("custom weight must be strictly positive")
        self.t = t
        self.log_v = np.log(v)
        self.tail = tail

    def log_rho(self, t):
        return np.interp(np.asarray(t, dtype=float), self.t, self.log_v)

    def breakpoints(self, a, b):
        return [float(s) for s in self.t if a < s < b]


@dataclass(frozen=True, eq=False)
class RadialWeight:
    """
    Descriptor of rho. `params` round-trips through the RadialWeight document;
    the evaluator behind it is built once by the factory functions below.
    """

    family: str
    params: Dict[str, Any]
    tail: str
    _impl: _Family = field(repr=False, compare=False)

    @property
    def alpha(self) -> Optional[float]:
        a = self.params.get("alpha")
        return None if a is None else float(a)

    def epsilon(self, alpha: Optional[float] = None) -> float:
        """eps = log(alpha); a weight built for one alpha refuses another."""
        own = self.alpha
        if alpha is None:
            if own is None:
                raise InvalidParameter(f"{self.family} weight needs an explicit alpha")
            return math.log(own)
        if own is not None and abs(own - float(alpha)) > 1e-12:
            raise InvalidParameter(f"{self.family} weight was built for alpha={own}, not {alpha}")
        if float(alpha) <= 1.0:
            raise InvalidParameter(f"alpha={alpha} violates > 1.0")
        return math.log(float(alpha))

    def log(self, t):
        return self._impl.log_rho(t)

    def __call__(self, t):
        with np.errstate(under="ignore", over="ignore"):
            v = np.exp(self._impl.log_rho(t))
        return float(v) if np.ndim(v) == 0 else v

    def value(self, t: float) -> float:
        return float(np.exp(self._impl.log_rho(np.asarray([t]))[0]))

    def breakpoints(self, a: float, b: float) -> List[float]:
        return self._impl.breakpoints(a, b)

    def mass(self, a: float, b: float, tol: float = C.EDGE_QUAD_TOL) -> float:
        """Integral of rho over [a, b], closed form when the family has one."""
        closed = self._impl.mass(a, b)
        if closed is not None:
            return closed
        if math.isinf(b):
            if self.tail == "nonintegrable":
                return math.inf
            raise InvalidParameter(f"{self.family} weight has no closed-form tail mass")
        return integrate(self.value, a, b, tol=tol, points=self.breakpoints(a, b)).value

    def rp_log_integrand(self, t, p: float, eps: float):
        """log of e^(-eps p t/(p-1)) rho(t)^(1/(1-p)), p > 1."""
        t = np.asarray(t, dtype=float)
        return (-eps * p * t - self._impl.log_rho(t)) / (p - 1.0)

    def p1_log_integrand(self, t, eps: float):
        """log of e^(-eps t)/rho(t)."""
        t = np.asarray(t, dtype=float)
        return -eps * t - self._impl.log_rho(t)

    def rp_tail(self, T: float, p: float, eps: float) -> Optional[TailBound]:
        return self._impl.rp_tail(T, p, eps)

    def p1_tail(self, T: float, eps: float) -> Optional[TailBound]:
        return self._impl.p1_tail(T, eps)

    def local_divergence(self, a: float, b: float, p: float, eps: float) -> Optional[str]:
        return self._impl.local_divergence(a, b, p, eps)

    def describe(self) -> str:
        inner = ",".join(f"{k}={v:g}" if isinstance(v, (int, float)) else f"{k}=..." for k, v in self.params.items())
        return f"{self.family}:{inner}" if inner else self.family

    def to_document(self) -> Dict[str, Any]:
        return {"family": self.family, "params": dict(self.params), "tail": self.tail}


def _log_linear(family: str, params: Dict[str, Any], pieces, certificate: str = "", periodic_mass: bool = False) -> RadialWeight:
    impl = _LogLinear(pieces, certificate=certificate, certificate_p=params.get("p"), periodic_mass=periodic_mass)
    return RadialWeight(family, params, impl.tail, impl)


def constant(c: float = 1.0) -> RadialWeight:
    if c <= 0:
        raise InvalidParameter(f"c={c} violates > 0")
    return _log_linear("constant", {"c": float(c)}, [(0.0, math.log(c), 0.0)])


def exp_rate(lam: float) -> RadialWeight:
    """rho(t) = e^(-lam t); lam <= 0 gives a nonintegrable weight (lam = -1 is e^t)."""
    return _log_linear("exp_rate", {"lam": float(lam)}, [(0.0, 0.0, -float(lam))])


def bbs(theta: float, p: float, alpha: float) -> RadialWeight:
    """rho(t) = e^(-eps p (1 - theta) t)."""
    if not 0.0 < theta < 1.0:
        raise InvalidParameter(f"theta={theta} violates in (0, 1)")
    eps = math.log(alpha)
    return _log_linear(
        "bbs", {"theta": float(theta), "p": float(p), "alpha": float(alpha)},
        [(0.0, 0.0, -eps * p * (1.0 - theta))],
    )


def critical(p: float, alpha: float) -> RadialWeight:
    """rho(t) = e^(-eps p t): the regime integrand is identically 1."""
    eps = math.log(alpha)
    return _log_linear(
        "critical", {"p": float(p), "alpha": float(alpha)}, [(0.0, 0.0, -eps * p)],
    )


def example11(p: float, alpha: float) -> RadialWeight:
    """rho(t) = e^(-t^2 - eps p t)."""
    impl = _Example11(float(p), math.log(alpha))
    return RadialWeight("example11", {"p": float(p), "alpha": float(alpha)}, impl.tail, impl)


def dip(p: float, alpha: float, center: float = 1.0) -> RadialWeight:
    """
    rho(t) = |t - c|^(2(p-1)) e^(-eps p t) for p > 1 and |t - c| e^(-eps t) for p = 1,
    floored at DENSITY_FLOOR so it stays positive.
    """
    impl = _Dip(float(p), math.log(alpha), float(center))
    return RadialWeight("dip", {"p": float(p), "alpha": float(alpha), "center": float(center)}, impl.tail, impl)


def spike_gap(
    p: float, alpha: float, gap: float = 1.0, height: float = math.e, extent: float = 200.0, max_exponent: int = 12,
) -> RadialWeight:
    """
    Gaps of length `gap` where rho = e^(-eps p t), the j-th followed by a spike of
    height height^j and rho-mass 1. Exponents stop growing at `max_exponent`, where
    the spike width height^-j is still resolvable next to t. Every unit-mass cell
    carries about `gap` of regime integrand, so the cell supremum is finite while
    the full integral is not.
    """
    if gap <= 0 or height <= 1 or max_exponent < 1:
        raise InvalidParameter("spike_gap needs gap > 0, height > 1 and max_exponent >= 1")
    eps = math.log(alpha)
    pieces = []
    s = 0.0
    j = 1
    while s < extent:
        log_h = min(j, max_exponent) * math.log(height)
        pieces.append((s, -eps * p * s, -eps * p))
        pieces.append((s + gap, log_h, 0.0))
        s += gap + math.exp(-log_h)
        j += 1
    return _log_linear(
        "spike_gap",
        {"p": float(p), "alpha": float(alpha), "gap": float(gap), "height": float(height),
         "max_exponent": int(max_exponent)},
        pieces, certificate=f"integrand identically 1 on a gap of length {gap:g} in every period",
        periodic_mass=True,
    )


def exploding(p: float, alpha: float, dip_fraction: float = 0.5, extent: int = 200) -> RadialWeight:
    """
    Unit rho-mass cells [k-1, k). The first `dip_fraction` of cell k carries
    rho = 16^(-k(p-1)) e^(-eps p t), so the cell's regime integral is about
    dip_fraction * 16^k; the rest is a constant topping the cell up to mass 1.
    """
    if p <= 1:
        raise InvalidParameter(f"p={p} violates > 1")
    eps = math.log(alpha)
    ell = float(dip_fraction)
    pieces = []
    for k in range(1, int(extent) + 1):
        s = float(k - 1)
        c = -eps * p * s - k * (p - 1.0) * math.log(16.0)
        low_mass = _exp_linear_integral(c, -eps * p, ell)
        top = (1.0 - low_mass) / (1.0 - ell)
        pieces.append((s, c, -eps * p))
        pieces.append((s + ell, math.log(top), 0.0))
    return _log_linear(
        "exploding", {"p": float(p), "alpha": float(alpha), "dip_fraction": ell},
        pieces, certificate="cell integrals grow like 16^k", periodic_mass=True,
    )


def piecewise(pieces: Sequence[Sequence[float]], tail: Optional[str] = None) -> RadialWeight:
    """Pieces [start, log_rho_at_start, log_slope]; the last piece extends to infinity."""
    w = _log_linear("piecewise", {"pieces": [list(map(float, pc)) for pc in pieces]}, [tuple(pc) for pc in pieces])
    if tail is not None and tail != w.tail:
        logger.warning(f"declared tail {tail!r} disagrees with last piece; using {w.tail!r}")
    return w


def custom(ts: Sequence[float], values: Sequence[float], tail: str = "unknown") -> RadialWeight:
    if tail not in TAIL_FLAGS:
        raise ParseError(f"tail must be one of {TAIL_FLAGS}, got {tail!r}")
    impl = _Custom(ts, values, tail)
    return RadialWeight("custom", {"t": list(map(float, ts)), "rho": list(map(float, values))}, tail, impl)


def from_document(doc: Dict[str, Any]) -> RadialWeight:
    """{"family": ..., "params": {...}, "tail": ...}"""
    if not isinstance(doc, dict) or "family" not in doc:
        raise ParseError("RadialWeight document needs a 'family'")
    family = doc["family"]
    params = dict(doc.get("params") or {})
    try:
        if family == "constant":
            w = constant(params.get("c", 1.0))
        elif family == "exp_rate":
            w = exp_rate(params["lam"])
        elif family == "bbs":
            w = bbs(params["theta"], params["p"], params["alpha"])
        elif family == "critical":
            w = critical(params["p"], params["alpha"])
        elif family == "example11":
            w = example11(params["p"], params["alpha"])
        elif family == "dip":
            w = dip(params["p"], params["alpha"], params.get("center", 1.0))
        elif family == "spike_gap":
            w = spike_gap(params["p"], params["alpha"], params.get("gap", 1.0), params.get("height", math.e),
                          max_exponent=int(params.get("max_exponent", 12)))
        elif family == "exploding":
            w = exploding(params["p"], params["alpha"], params.get("dip_fraction", 0.5))
        elif family == "piecewise":
            w = piecewise(params["pieces"], doc.get("tail"))
        elif family == "custom":
            w = custom(params["t"], params["rho"], doc.get("tail", "unknown"))
        else:
            raise ParseError(f"unknown family {family!r}; expected one of {FAMILIES}")
    except KeyError as e:
        raise ParseError(f"{family} weight is missing parameter {e.args[0]!r}") from None
    declared = doc.get("tail")
    if declared is not None and declared not in TAIL_FLAGS:
        raise ParseError(f"tail must be one of {TAIL_FLAGS}, got {declared!r}")
    return w
