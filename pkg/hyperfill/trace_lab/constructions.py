"""
Radial functions whose traces misbehave in each regime where the parameters are infinite.

Most of them are tents: on a cell [a, b] with a positive weight w and W = integral of
w over the cell, U climbs from 0 to 1 while the first half of W accrues and falls back
to 0 over the second half, with ds-density q = 2 w e^(eps t)/W. The ds-mass of every
tent is 2 and its energy integral of q^p rho is 2^p W^(1-p) whenever
w^p e^(eps p t) rho = w, which holds for w = e^(-eps p t/(p-1)) rho^(1/(1-p)).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .. import constants as C
from ..errors import ConstructionFailure, HorizonExhausted, RegimeMismatch
from ..radial_weight import RadialWeight, example11
from ..trace_params import mu_finite, param_calR, param_R, partition_unit_mass
from ..utils.checks import at_least, checked, greater_than
from .radial import NEG_INF, LogWeightGrid, RadialFunction

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)


def _rp_log_weight(rho: RadialWeight, p: float, eps: float) -> Callable[[np.ndarray], np.ndarray]:
    if p == 1:
        return lambda t: rho.p1_log_integrand(t, eps)
    return lambda t: rho.rp_log_integrand(t, p, eps)


def _flat(t: np.ndarray) -> np.ndarray:
    return np.zeros_like(np.asarray(t, dtype=float))


def _tent_function(
    tag: str,
    cells: Sequence[Tuple[float, float]],
    log_w: Callable[[np.ndarray], np.ndarray],
    eps: float,
    params: dict,
    points: Sequence[float] = (),
) -> RadialFunction:
    starts = np.asarray([a for a, _ in cells])
    ends = np.asarray([b for _, b in cells])
    grid = LogWeightGrid(log_w, float(starts[0]), float(ends[-1]), points=list(points) + list(starts) + list(ends))

    log_W = np.array([grid.log_integral(a, b) for a, b in cells])
    peaks = []
    for (a, b), lw in zip(cells, log_W):
        peaks.append(brentq(lambda t: math.exp(grid.log_integral(a, t) - lw) - 0.5, a, b, xtol=1e-14))
    peaks = np.asarray(peaks)

    def cell_of(t: float) -> int:
        k = int(np.searchsorted(starts, t, side="right")) - 1
        if k < 0 or t >= ends[k]:
            return -1
        return k

    def profile(t: float) -> float:
        k = cell_of(t)
        if k < 0:
            return 0.0
        r = math.exp(grid.log_integral(float(starts[k]), t) - log_W[k])
        return 1.0 - abs(1.0 - 2.0 * r)

    def log_density(t: float) -> float:
        k = cell_of(t)
        if k < 0:
            return NEG_INF
        return LOG2 + float(log_w(np.asarray([t]))[0]) + eps * t - float(log_W[k])

    params = dict(params)
    params["cells"] = len(cells)
    params["log_cell_weights"] = log_W.tolist()
    logger.debug(f"{tag}: {len(cells)} tents on [{starts[0]:.6g}, {ends[-1]:.6g}]")
    return RadialFunction(
        tag=tag,
        profile=profile,
        log_density=log_density,
        breakpoints=tuple(sorted(set(starts.tolist()) | set(ends.tolist()))),
        landmarks=tuple(sorted(set(starts.tolist()) | set(peaks.tolist()) | set(ends.tolist()))),
        params=params,
    )


def tent_peaks(u: RadialFunction) -> List[float]:
    """Heights where a tent profile reaches 1."""
    return [t for t in u.landmarks if u.U(t) > 0.5]


def level_set_intervals(
    rho: RadialWeight,
    eps: float,
    t_max: float,
    *,
    samples_per_unit: int = C.SAMPLES_PER_UNIT,
    max_length: float = 1.0,
) -> List[Tuple[float, float, int]]:
    """
    Disjoint increasing intervals I_k, k = 1, 2, ..., each inside the sampled level set
    E_k = {e^(-eps t)/rho(t) >= 2^k} and of length at most max_length.
    """
    ts = np.union1d(np.linspace(0.0, t_max, int(t_max * samples_per_unit) + 1), rho.breakpoints(0.0, t_max))
    with np.errstate(over="ignore", divide="ignore"):
        levels = rho.p1_log_integrand(ts, eps)
    out: List[Tuple[float, float, int]] = []
    start, k = 0, 1
    while start < ts.size:
        hit = np.flatnonzero(levels[start:] >= k * LOG2)
        if hit.size == 0:
            break
        i = start + int(hit[0])
        miss = np.flatnonzero(levels[i:] < k * LOG2)
        j = ts.size if miss.size == 0 else i + int(miss[0])
        a = float(ts[i])
        b = min(float(ts[j - 1]), a + max_length)
        if b <= a:
            start = j
            continue
        out.append((a, b, k))
        k += 1
        start = int(np.searchsorted(ts, b, side="right"))
    return out


@dataclass(frozen=True)
class _Staircase:
    intervals: Tuple[Tuple[float, float], ...]
    eps: float

    def profile(self, t: float) -> float:
        total = 0.0
        for a, b in self.intervals:
            if t >= b:
                total += 1.0
            elif t > a:
                total += (t - a) / (b - a)
                break
            else:
                break
        return total

    def log_density(self, t: float) -> float:
        for a, b in self.intervals:
            if a <= t < b:
                return self.eps * t - math.log(b - a)
            if t < a:
                break
        return NEG_INF


def _require_infinite_R(rho: RadialWeight, p: float, alpha: Optional[float], t_max: float, name: str):
    R = param_R(rho, p, t_max, alpha=alpha)
    if R.finite:
        raise RegimeMismatch(f"{name} needs R_{{{p:g}}} = inf, got {R.value:.6g} for {rho.describe()}")
    return R


@checked(p=at_least(1.0), t_max=greater_than(0.0))
def build_divergent(
    rho: RadialWeight,
    p: float,
    *,
    alpha: Optional[float] = None,
    t_max: float = C.DEFAULT_T_MAX,
    samples_per_unit: int = C.SAMPLES_PER_UNIT,
) -> RadialFunction:
    """
    u with finite homogeneous norm that tends to +inf at the boundary.

    p > 1: U = log(1 + I(t)), I the primitive of the regime integrand w, so
    q = w e^(eps t)/(1 + I) and the energy is the integral of dI/(1 + I)^p.
    p = 1: U climbs by 1 across each level-set interval I_k.
    """
    eps = rho.epsilon(alpha)
    R = _require_infinite_R(rho, p, alpha, t_max, "build_divergent")
    params = {"rho": rho.describe(), "p": float(p), "t_max": float(t_max), "R": R.provenance}

    if p == 1:
        found = level_set_intervals(rho, eps, t_max, samples_per_unit=samples_per_unit)
        if len(found) < 3:
            raise ConstructionFailure(f"only {len(found)} level-set intervals on [0, {t_max:g}]")
        stairs = _Staircase(tuple((a, b) for a, b, _ in found), eps)
        ends = [x for a, b, _ in found for x in (a, b)]
        return RadialFunction(
            tag="divergent", profile=stairs.profile, log_density=stairs.log_density,
            breakpoints=tuple(ends), landmarks=tuple(ends), params=params,
        )

    log_w = _rp_log_weight(rho, p, eps)
    grid = LogWeightGrid(log_w, 0.0, t_max, points=rho.breakpoints(0.0, t_max))
    prefix = grid.prefix()

    def log_I(t: float) -> float:
        return grid.log_integral_from_start(min(max(t, 0.0), t_max), prefix)

    def profile(t: float) -> float:
        return float(np.logaddexp(0.0, log_I(t)))

    def log_density(t: float) -> float:
        if t > t_max:
            return NEG_INF
        return float(log_w(np.asarray([t]))[0]) + eps * t - float(np.logaddexp(0.0, log_I(t)))

    return RadialFunction(
        tag="divergent", profile=profile, log_density=log_density,
        breakpoints=tuple(rho.breakpoints(0.0, t_max)), params=params,
    )


@checked(t_max=greater_than(0.0))
def build_oscillator_p1(
    rho: RadialWeight,
    *,
    alpha: Optional[float] = None,
    t_max: float = C.DEFAULT_T_MAX,
    samples_per_unit: int = C.SAMPLES_PER_UNIT,
) -> RadialFunction:
    """
    p = 1: tents on intervals I_k inside E_k = {e^(-eps t)/rho >= 2^k}, with
    q = 2 e^(eps t)/|I_k|. On E_k, rho e^(eps t) <= 2^-k, so the cell's share of the
    integral of q rho is at most 2^(1-k).
    """
    eps = rho.epsilon(alpha)
    _require_infinite_R(rho, 1.0, alpha, t_max, "build_oscillator_p1")
    found = level_set_intervals(rho, eps, t_max, samples_per_unit=samples_per_unit)
    if len(found) < 3:
        raise ConstructionFailure(f"only {len(found)} level-set intervals on [0, {t_max:g}]")
    cells = [(a, b) for a, b, _ in found]
    rho_masses = [rho.mass(a, b) for a, b in cells]
    for (a, b, k), m in zip(found, rho_masses):
        if m > 2.0 ** -k * (1.0 + 1e-9):
            raise ConstructionFailure(f"I_{k} = [{a:.6g}, {b:.6g}] has rho-mass {m:.3g} > 2^-{k}")
    return _tent_function(
        "oscillator_p1", cells, _flat, eps,
        {"rho": rho.describe(), "p": 1.0, "levels": [k for _, _, k in found], "rho_masses": rho_masses},
    )


def _greedy_cells(grid: LogWeightGrid, t_max: float, max_cells: int) -> List[Tuple[float, float]]:
    """[t_j, t_{j+1}) with the integral of w over the cell equal to 2^j."""
    cells: List[Tuple[float, float]] = []
    t = grid.a
    j = 1
    while len(cells) < max_cells:
        target = j * LOG2
        i = int(np.searchsorted(grid.grid, t, side="right"))
        if i >= grid.grid.size:
            break
        head = grid.log_integral(t, float(grid.grid[i]))
        acc = np.logaddexp(head, np.concatenate([[NEG_INF], np.logaddexp.accumulate(grid.log_cells[i:])]))
        hit = np.flatnonzero(acc >= target)
        if hit.size == 0:
            break
        m = i + int(hit[0])
        lo = t if m == i else float(grid.grid[m - 1])
        hi = float(grid.grid[m])
        t_next = brentq(lambda s: math.expm1(grid.log_integral(t, s) - target), lo, hi, xtol=1e-14) if lo < hi else hi
        if t_next > t_max:
            break
        cells.append((t, t_next))
        t = t_next
        j += 1
    return cells


@checked(p=greater_than(1.0), t_max=greater_than(0.0), max_cells=at_least(1))
def build_oscillator_pg1(
    rho: RadialWeight,
    p: float,
    *,
    alpha: Optional[float] = None,
    t_max: float = C.DEFAULT_T_MAX,
    max_cells: int = 1000,
) -> RadialFunction:
    """
    p > 1, mu(X) < inf, R = inf: greedy cells [t_j, t_{j+1}) carrying 2^j of the
    regime integrand, one tent per cell. The energy of cell j is 2^p 2^(j(1-p)).
    """
    eps = rho.epsilon(alpha)
    _require_infinite_R(rho, p, alpha, t_max, "build_oscillator_pg1")
    if mu_finite(rho) is not True:
        raise RegimeMismatch(f"build_oscillator_pg1 needs mu(X) < inf; {rho.describe()} has tail {rho.tail!r}")
    log_w = _rp_log_weight(rho, p, eps)
    grid = LogWeightGrid(log_w, 0.0, t_max, points=rho.breakpoints(0.0, t_max))
    cells = _greedy_cells(grid, t_max, max_cells)
    if len(cells) < 3:
        raise HorizonExhausted(f"only {len(cells)} greedy cells fit in [0, {t_max:g}]", cells=len(cells))
    return _tent_function(
        "oscillator_pg1", cells, log_w, eps,
        {"rho": rho.describe(), "p": float(p),
         "energy_bounds": [2.0 ** p * 2.0 ** (j * (1.0 - p)) for j in range(1, len(cells) + 1)]},
        points=rho.breakpoints(0.0, t_max),
    )


def _pick_subcell(
    rho: RadialWeight, grid: LogWeightGrid, s: float, e: float, k: int
) -> Tuple[float, float]:
    """Sub-cell of rho-mass 2^-k inside [s, e) whose regime integral is largest."""
    nodes = grid.grid[(grid.grid >= s) & (grid.grid <= e)]
    nodes = np.union1d(nodes, [s, e])
    mids = (nodes[:-1] + nodes[1:]) / 2.0
    F = np.array([rho.mass(s, m) for m in mids])
    idx = np.clip((F * 2.0 ** k).astype(np.int64), 0, 2 ** k - 1)
    logs = grid._log_pieces(nodes[:-1], nodes[1:])
    acc = np.full(2 ** k, NEG_INF)
    np.logaddexp.at(acc, idx, logs)
    best = int(np.argmax(acc))
    share = 2.0 ** -k

    def cut(level: float) -> float:
        if level <= 0.0:
            return s
        if level >= 1.0:
            return e
        return brentq(lambda x: rho.mass(s, x) - level, s, e, xtol=1e-14)

    return cut(best * share), cut((best + 1) * share)


@checked(p=greater_than(1.0), t_max=greater_than(0.0))
def build_oscillator_calR(
    rho: RadialWeight,
    p: float,
    *,
    alpha: Optional[float] = None,
    t_max: float = C.DEFAULT_T_MAX,
    max_cells: int = C.PARTITION_MAX_CELLS,
    max_tents: int = 24,
) -> RadialFunction:
    """
    p > 1, mu(X) = inf, calR = inf: among the unit rho-mass cells pick O_k whose regime
    integral exceeds 4^k, split it into 2^k pieces of rho-mass 2^-k, and put a tent on
    a piece carrying more than 2^k. Tent k has energy below 2^p 2^(k(1-p)).
    """
    eps = rho.epsilon(alpha)
    if mu_finite(rho) is not False:
        raise RegimeMismatch(f"build_oscillator_calR needs mu(X) = inf; {rho.describe()} has tail {rho.tail!r}")
    calR = param_calR(rho, p, max_cells, t_max, alpha=alpha)
    if calR.value.finite:
        raise RegimeMismatch(f"build_oscillator_calR needs calR = inf, got {calR.value.value:.6g}")

    part = partition_unit_mass(rho, max_cells, t_max)
    log_w = _rp_log_weight(rho, p, eps)
    end = part.breakpoints[-1]
    grid = LogWeightGrid(log_w, 0.0, end, points=list(part.breakpoints) + rho.breakpoints(0.0, end))

    tents: List[Tuple[float, float]] = []
    k = 1
    for s, e in part.cells:
        if len(tents) >= max_tents or k > 20:
            break
        if grid.log_integral(s, e) <= k * math.log(4.0):
            continue
        a, b = _pick_subcell(rho, grid, s, e, k)
        if grid.log_integral(a, b) <= k * LOG2:
            raise ConstructionFailure(f"no sub-cell of [{s:.6g}, {e:.6g}) carries more than 2^{k}")
        tents.append((a, b))
        k += 1
    if len(tents) < 3:
        raise ConstructionFailure(f"only {len(tents)} cells exceed 4^k among {len(part)} unit-mass cells")
    return _tent_function(
        "oscillator_calR", tents, log_w, eps,
        {"rho": rho.describe(), "p": float(p),
         "energy_bounds": [2.0 ** p * 2.0 ** (k * (1.0 - p)) for k in range(1, len(tents) + 1)]},
        points=rho.breakpoints(0.0, end),
    )


@dataclass(frozen=True)
class Example11:
    rho: RadialWeight
    u: RadialFunction


@checked(p=at_least(1.0), alpha=greater_than(1.0), cells=at_least(3))
def build_example11(p: float, alpha: float = 2.0, *, cells: int = 24) -> Example11:
    """
    rho(t) = e^(-t^2 - eps p t) with a tent on every [n, n+1): U(n) = 0 and U = 1 at
    the point where half of the cell's weight e^(t^2/(p-1)) (e^(t^2) for p = 1) has
    accrued. Cell n contributes 2^p W_n^(1-p) <= 2^p e^(-n^2) to the energy.
    """
    rho = example11(p, alpha)
    eps = rho.epsilon()
    u = _tent_function(
        "example11", [(float(n), float(n + 1)) for n in range(cells)], _rp_log_weight(rho, p, eps), eps,
        {"p": float(p), "alpha": float(alpha)},
    )
    return Example11(rho=rho, u=u)
