"""
Verification matrix: for each scenario, the regime parameters predict whether every
function of finite norm has a trace, and the trace lab observes test functions on a
truncated filling. A row agrees when the observation matches the prediction.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .config_schema import FillingConfig, VerifyConfig
from .documents import parse_rho_spec, parse_space_spec
from .errors import HyperfillError, ParseError
from .filling_builder import Filling, build_filling, build_nets
from .modulus_probe import check_condition1, positive_modulus_bound, vertical_curve, witness_zero_modulus
from .radial_weight import RadialWeight
from .status_model import RegimeReport, TraceStatus
from .trace_lab import constructions
from .trace_lab.radial import RadialFunction, default_smooth, random_smooth, smooth_exponential
from .trace_lab.traces import SobolevNorms, sobolev_norms, trace_T, trace_tilde
from .trace_params import classify_regime

logger = logging.getLogger(__name__)

TRACE = "trace"
MODULUS = "modulus"

# converged traces in a zero-trace regime must vanish to this accuracy
ZERO_TOL = 1e-3
# |trace_tilde - trace_T| allowed where both converge
TILDE_TOL = 1e-3
# top-level contribution to the |u|^p integral below which a norm counts as settled
NORM_TAIL_TOL = 1e-6
# band an oscillating counterexample must show on every ray
OSCILLATION_BAND = 0.9


@dataclass(frozen=True)
class Scenario:
    name: str
    rho: str
    p: float
    alpha: float = 2.0
    kind: str = TRACE
    # modulus rows: heights [a, b] probed, and the weight the Hölder side runs on
    interval: Tuple[float, float] = (0.0, 2.0)
    positive_rho: str = "bbs:theta=0.5,p=2"


BUILTIN_SCENARIOS: Tuple[Scenario, ...] = (
    Scenario("bbs-0.5", "bbs:theta=0.5,p=2", 2.0),
    Scenario("bbs-0.25", "bbs:theta=0.25,p=2", 2.0),
    Scenario("constant", "constant:c=1", 2.0),
    Scenario("example11-p2", "example11:p=2", 2.0),
    Scenario("example11-p1", "example11:p=1", 1.0),
    Scenario("critical", "critical:p=2", 2.0),
    Scenario("spike-gap", "spike_gap:p=2,gap=1", 2.0),
    Scenario("dip-modulus", "dip:p=2,center=1", 2.0, kind=MODULUS),
)


@dataclass
class VerificationRow:
    scenario: str
    rho: str
    p: float
    alpha: float
    mu_finite: Optional[bool] = None
    R: Optional[float] = None
    calR: Optional[float] = None
    predicted: str = ""
    observed: str = ""
    agree: bool = False
    checks: Dict[str, bool] = field(default_factory=dict)
    error: Optional[str] = None


@dataclass
class VerificationMatrix:
    rows: List[VerificationRow] = field(default_factory=list)

    @property
    def all_agree(self) -> bool:
        return bool(self.rows) and all(r.agree for r in self.rows)

    def summary(self) -> List[str]:
        lines = [f"{'scenario':<14} {'mu<inf':<7} {'R':>10} {'calR':>10}  agree  observed"]
        for r in self.rows:
            mu = "?" if r.mu_finite is None else ("yes" if r.mu_finite else "no")
            fmt = lambda v: "-" if v is None else f"{v:10.4g}"
            lines.append(f"{r.scenario:<14} {mu:<7} {fmt(r.R):>10} {fmt(r.calR):>10}  {'yes' if r.agree else 'NO':<5}  "
                         f"{r.error or r.observed}")
        return lines


class _FillingCache:
    def __init__(self, cfg: VerifyConfig):
        self.cfg = cfg
        self.space = parse_space_spec(cfg.space)
        self._fillings: Dict[float, Filling] = {}

    def get(self, alpha: float) -> Filling:
        if alpha not in self._fillings:
            fc = FillingConfig(alpha=alpha, tau=self.cfg.tau, levels=self.cfg.levels)
            nets = build_nets(self.space, fc.alpha, fc.levels)
            self._fillings[alpha] = build_filling(self.space, nets, fc.tau)
        return self._fillings[alpha]


def _smooth_functions(cfg: VerifyConfig, alpha: float, vanishing: bool) -> List[RadialFunction]:
    """
    Smooth test functions. In a zero-trace regime the draws mix profiles with limit 0
    and profiles with a nonzero limit; only the first kind keeps a bounded norm there.
    """
    rng = np.random.default_rng(cfg.seed)
    if not vanishing:
        return [default_smooth(alpha, rate=2.0)] + [random_smooth(rng, alpha) for _ in range(cfg.random_functions)]
    out = [smooth_exponential(0.0, [(1.0, 2.0)], alpha), default_smooth(alpha, rate=2.0)]
    for _ in range(cfg.random_functions):
        c = 0.0 if rng.random() < 0.5 else float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0))
        out.append(smooth_exponential(c, [(float(rng.uniform(-1.0, 1.0)), float(rng.uniform(1.5, 3.0)))], alpha))
    return out


def _norm_settles(norms: SobolevNorms) -> bool:
    """The |u|^p part of the norm stops growing: the top level contributes next to nothing."""
    return bool(norms.lp_by_level) and norms.lp_by_level[-1] <= NORM_TAIL_TOL


def _observe_smooth(
    filling: Filling, rho: RadialWeight, p: float, functions: List[RadialFunction], cfg: VerifyConfig, vanishing: bool
) -> Tuple[Dict[str, bool], str]:
    tc = cfg.trace
    finite = converged = tilde = zero = True
    worst_gap = 0.0
    bounded = 0
    for u in functions:
        norms = sobolev_norms(filling, rho, u, p, tol=cfg.quadrature.tol)
        finite &= math.isfinite(norms.N_norm)
        settles = _norm_settles(norms)
        bounded += settles
        for xi in range(filling.space.size):
            v = trace_T(u, filling, xi, max_rays=tc.max_rays, tol=tc.tol, window=tc.window,
                        samples_per_edge=tc.samples_per_edge, oscillation_factor=tc.oscillation_factor)
            if not (v.converged and v.ray_independent):
                converged = False
                continue
            t = trace_tilde(u, filling, xi, tol=tc.tol, window=tc.window)
            if t.verdict.converged:
                gap = abs(t.verdict.value - v.value)
                worst_gap = max(worst_gap, gap)
                tilde &= gap <= TILDE_TOL
            if vanishing and settles:
                zero &= abs(v.value) <= ZERO_TOL
    checks = {"norms_finite": finite, "traces_converge": converged, "tilde_agrees": tilde}
    if vanishing:
        checks["traces_vanish"] = zero and bounded > 0
    observed = (f"{len(functions)} smooth functions: "
                + ("all converged, ray-independent" if converged else "some trace failed to converge")
                + (f", traces 0 for all {bounded} of bounded norm" if vanishing and zero else "")
                + f"; max |tilde - T| = {worst_gap:.2g}")
    return checks, observed


def _observe_no_trace(filling: Filling, rho: RadialWeight, p: float, u: RadialFunction, cfg: VerifyConfig,
                      expect: TraceStatus) -> Tuple[Dict[str, bool], str]:
    tc = cfg.trace
    norms = sobolev_norms(filling, rho, u, p, tol=cfg.quadrature.tol)
    statuses, bands, tildes = set(), [], []
    for xi in range(filling.space.size):
        v = trace_T(u, filling, xi, max_rays=tc.max_rays, tol=tc.tol, window=tc.window,
                    samples_per_edge=tc.samples_per_edge, oscillation_factor=tc.oscillation_factor)
        statuses.add(v.status)
        bands.extend(r.limsup - r.liminf for r in v.rays)
        tildes.append(trace_tilde(u, filling, xi, tol=tc.tol, window=tc.window).verdict)
    checks = {
        "norm_finite": math.isfinite(norms.dotN_norm),
        f"every_ray_{expect.label}": statuses == {expect},
    }
    observed = f"{u.tag}: trace_T {sorted(s.label for s in statuses)}"
    if expect is TraceStatus.OSCILLATING:
        checks["band"] = min(bands) >= OSCILLATION_BAND
        observed += f", min band {min(bands):.3g}"
    if u.tag == "example11":
        checks["tilde_zero"] = all(t.converged and abs(t.value) == 0.0 for t in tildes)
        observed += ", u~ = 0" if checks["tilde_zero"] else ", u~ nonzero"
    return checks, observed


def _counterexample(rho: RadialWeight, scenario: Scenario, report: RegimeReport, cfg: VerifyConfig):
    """Function of finite norm without a trace in a regime where the parameter is infinite."""
    t_max = cfg.quadrature.t_max
    if rho.family == "example11":
        return constructions.build_example11(scenario.p, scenario.alpha).u, TraceStatus.OSCILLATING
    if report.mu_finite is False and scenario.p > 1 and report.calR.infinite:
        return (constructions.build_oscillator_calR(rho, scenario.p, alpha=scenario.alpha, t_max=t_max),
                TraceStatus.OSCILLATING)
    return constructions.build_divergent(rho, scenario.p, alpha=scenario.alpha, t_max=t_max), TraceStatus.DIVERGED


def _run_trace_row(scenario: Scenario, cfg: VerifyConfig, fillings: _FillingCache) -> VerificationRow:
    rho = parse_rho_spec(scenario.rho, scenario.alpha)
    q = cfg.quadrature
    report = classify_regime(rho, scenario.p, scenario.alpha, t_max=q.t_max, tol=q.tol,
                             overflow_guard=q.overflow_guard, samples_per_unit=q.samples_per_unit)
    row = VerificationRow(
        scenario=scenario.name, rho=rho.describe(), p=scenario.p, alpha=scenario.alpha,
        mu_finite=report.mu_finite, R=report.R.value, calR=report.calR.value, predicted=report.prediction,
    )
    if report.traces_exist_N is None:
        row.checks["calR_resolved"] = False
        row.observed = "not observed: " + report.prediction
        return row
    filling = fillings.get(scenario.alpha)
    observations = []
    if report.traces_exist_N:
        checks, obs = _observe_smooth(filling, rho, scenario.p, _smooth_functions(cfg, scenario.alpha, report.zero_trace),
                                      cfg, report.zero_trace)
        row.checks.update(checks)
        observations.append(obs)
        if not report.traces_exist_dotN:
            u = constructions.build_divergent(rho, scenario.p, alpha=scenario.alpha, t_max=q.t_max)
            checks, obs = _observe_no_trace(filling, rho, scenario.p, u, cfg, TraceStatus.DIVERGED)
            row.checks.update({f"dotN_{k}": v for k, v in checks.items()})
            observations.append("homogeneous " + obs)
    else:
        u, expect = _counterexample(rho, scenario, report, cfg)
        checks, obs = _observe_no_trace(filling, rho, scenario.p, u, cfg, expect)
        row.checks.update(checks)
        observations.append(obs)
    row.observed = "; ".join(observations)
    row.agree = all(row.checks.values())
    return row


def _run_modulus_row(scenario: Scenario, cfg: VerifyConfig, fillings: _FillingCache) -> VerificationRow:
    a, b = scenario.interval
    rho = parse_rho_spec(scenario.rho, scenario.alpha)
    row = VerificationRow(scenario=scenario.name, rho=rho.describe(), p=scenario.p, alpha=scenario.alpha,
                          predicted=f"zero modulus through [{a:g}, {b:g}]; positive modulus for {scenario.positive_rho}")
    cond = check_condition1(rho, scenario.p, a, b, alpha=scenario.alpha)
    cert = witness_zero_modulus(rho, scenario.p, a, b, cfg.modulus.depth, alpha=scenario.alpha)
    depth = cfg.modulus.depth
    row.checks["condition_fails"] = not cond.holds
    row.checks["shells_found"] = len(cert.shells) >= depth
    row.checks["line_sum_grows"] = cert.line_partial_sums[-1] >= depth
    row.checks["energy_bounded"] = cert.energy_partial_sums[-1] < 1.0

    positive = parse_rho_spec(scenario.positive_rho, scenario.alpha)
    row.checks["positive_condition_holds"] = check_condition1(positive, scenario.p, a, b, alpha=scenario.alpha).holds
    filling = fillings.get(scenario.alpha)
    curve = vertical_curve(filling, 0, 0, min(3, filling.levels))
    bound = positive_modulus_bound(filling, positive, scenario.p, curve, trials=100, seed=cfg.seed)
    row.checks["holder_trials_pass"] = bound.diagnostics["violations"] == 0 and math.isfinite(bound.diagnostics["max_ratio"])
    row.observed = (f"{len(cert.shells)} shells, line sum {cert.line_partial_sums[-1]:g}, "
                    f"energy {cert.energy_partial_sums[-1]:.3g}; Hölder max ratio {bound.diagnostics['max_ratio']:.3g}")
    row.agree = all(row.checks.values())
    return row


RUNNERS: Dict[str, Callable[[Scenario, VerifyConfig, _FillingCache], VerificationRow]] = {
    TRACE: _run_trace_row,
    MODULUS: _run_modulus_row,
}


def scenario_from_document(doc: Dict[str, Any]) -> Scenario:
    try:
        return Scenario(
            name=str(doc["name"]), rho=str(doc["rho"]), p=float(doc["p"]), alpha=float(doc.get("alpha", 2.0)),
            kind=str(doc.get("kind", TRACE)), interval=tuple(doc.get("interval", (0.0, 2.0))),
            positive_rho=str(doc.get("positive_rho", "bbs:theta=0.5,p=2")),
        )
    except KeyError as e:
        raise ParseError(f"scenario document is missing {e.args[0]!r}") from None


def _run_row(sc: Scenario, cfg: VerifyConfig, fillings: _FillingCache) -> VerificationRow:
    logger.info(f"scenario {sc.name}: {sc.rho}, p={sc.p:g}")
    try:
        return RUNNERS[sc.kind](sc, cfg, fillings)
    except (HyperfillError, ArithmeticError, LookupError, ValueError) as e:
        logger.warning(f"scenario {sc.name} failed: {type(e).__name__}: {e}")
        return VerificationRow(scenario=sc.name, rho=sc.rho, p=sc.p, alpha=sc.alpha, error=f"{type(e).__name__}: {e}")


def _run_isolated(sc: Scenario, cfg: VerifyConfig) -> VerificationRow:
    """Worker entry point; each process builds its own fillings."""
    return _run_row(sc, cfg, _FillingCache(cfg))


def run_verification(cfg: Optional[VerifyConfig] = None, scenarios: Optional[List[Scenario]] = None) -> VerificationMatrix:
    """
    Rows run concurrently in worker processes and are reported in scenario order; a
    failing scenario is recorded as a disagreeing row.
    """
    cfg = cfg or VerifyConfig()
    chosen = list(scenarios or BUILTIN_SCENARIOS)
    if cfg.scenarios:
        chosen = [s for s in chosen if s.name in cfg.scenarios]
    workers = cfg.workers or min(len(chosen), os.cpu_count() or 1)
    if workers <= 1 or len(chosen) <= 1:
        fillings = _FillingCache(cfg)
        rows = [_run_row(sc, cfg, fillings) for sc in chosen]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_isolated, chosen, [cfg] * len(chosen)))

    matrix = VerificationMatrix()
    for row in rows:
        if not row.agree and row.error is None:
            logger.warning(f"scenario {row.scenario}: prediction and observation disagree ({row.checks})")
        matrix.rows.append(row)
    return matrix


def scenario_list(doc: Any) -> List[Scenario]:
    if not isinstance(doc, list):
        raise ParseError("scenarios document must be a list")
    return [scenario_from_document(d) for d in doc]
