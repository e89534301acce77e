from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum, auto
from typing import Any, Dict, List, Optional, Tuple


class TraceStatus(Enum):
    CONVERGED = auto()
    OSCILLATING = auto()
    DIVERGED = auto()
    UNDETERMINED = auto()

    @property
    def label(self) -> str:
        return self.name.lower()


class ModulusVerdict(Enum):
    POSITIVE_BOUND = auto()
    ZERO_WITNESS = auto()

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class ParamValue:
    value: float
    infinite: bool = False
    # where the number came from: "quadrature", "closed form", "overflow guard", a certificate
    provenance: str = "quadrature"
    # True when only [0, t_max] could be evaluated and the tail is unknown
    lower_bound: bool = False

    @classmethod
    def inf(cls, provenance: str) -> "ParamValue":
        return cls(value=math.inf, infinite=True, provenance=provenance)

    @property
    def finite(self) -> bool:
        return not self.infinite


@dataclass(frozen=True)
class RayTrace:
    """Samples of u along one ray and the verdict drawn from them."""
    label: str
    status: TraceStatus
    value: Optional[float] = None
    liminf: Optional[float] = None
    limsup: Optional[float] = None
    sign: int = 0  # +1 / -1 for diverged
    depth: int = 0
    heights: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()


@dataclass
class TraceVerdict:
    status: TraceStatus
    value: Optional[float] = None
    liminf: Optional[float] = None
    limsup: Optional[float] = None
    sign: int = 0
    depth: int = 0
    xi: Optional[int] = None
    # None for single-ray verdicts
    ray_independent: Optional[bool] = None
    rays: List[RayTrace] = field(default_factory=list)
    detail: str = ""

    @property
    def converged(self) -> bool:
        return self.status is TraceStatus.CONVERGED

    @property
    def band(self) -> float:
        if self.liminf is None or self.limsup is None:
            return 0.0
        return self.limsup - self.liminf


@dataclass
class RegimeReport:
    rho: str
    p: float
    alpha: float
    mu_finite: Optional[bool]
    R: ParamValue
    calR: ParamValue
    # calR < inf  <=>  every u in N^{1,p} has a trace; None while the cell integrals still climb
    traces_exist_N: Optional[bool] = False
    # R < inf  <=>  every u in the homogeneous space has a trace
    traces_exist_dotN: bool = False
    # mu(X) = inf and calR < inf: the trace vanishes almost everywhere
    zero_trace: bool = False
    membership: str = ""
    cell_values: List[float] = field(default_factory=list)
    cells_monotone: Optional[bool] = None
    cells_trend: Optional[str] = None

    @property
    def prediction(self) -> str:
        if self.traces_exist_N is None:
            return f"calR unresolved: cell integrals still increasing after {len(self.cell_values)} cells"
        if not self.traces_exist_N:
            return "calR = inf: some u in N^{1,p} has no trace"
        if self.zero_trace:
            return "traces exist and vanish"
        if not self.traces_exist_dotN:
            return "traces exist on N^{1,p}; some homogeneous u has none"
        return "traces exist"


@dataclass
class ModulusCertificate:
    verdict: ModulusVerdict
    p: float
    interval: Tuple[float, float]
    bound: Optional[float] = None
    # shell (or level-set) intervals, one per witness term
    shells: List[Tuple[float, float]] = field(default_factory=list)
    line_partial_sums: List[float] = field(default_factory=list)
    energy_partial_sums: List[float] = field(default_factory=list)
    curve: str = ""
    diagnostics: Dict[str, Any] = field(default_factory=dict)
