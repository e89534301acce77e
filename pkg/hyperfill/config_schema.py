from dataclasses import dataclass, field
from typing import List, Optional

from . import constants as C


@dataclass
class FillingConfig:
    """
    Construction parameters of a hyperbolic filling.
    alpha > 1 sets the net scale alpha^-n, tau > 1 inflates balls for the edge rule.
    """
    alpha: float = 2.0
    tau: float = 1.5
    levels: int = 8


@dataclass
class QuadratureConfig:
    """
    Tolerances for edge integrals and improper integrals over [0, inf).
    """
    tol: float = C.EDGE_QUAD_TOL
    # Improper integrals are evaluated on [0, t_max] plus an analytic tail when the
    # weight family provides one.
    t_max: float = C.DEFAULT_T_MAX
    limit: int = C.QUAD_LIMIT
    # Partial values above this are reported as +inf with provenance "overflow".
    overflow_guard: float = C.OVERFLOW_GUARD
    # Dense sampling density for essential suprema (p = 1).
    samples_per_unit: int = C.SAMPLES_PER_UNIT


@dataclass
class PartitionConfig:
    max_cells: int = C.PARTITION_MAX_CELLS
    tol: float = C.PARTITION_TOL


@dataclass
class TraceConfig:
    """
    Convergence detector for traces along rays.
    A ray converges when its last `window` integer-height samples agree within tol;
    it oscillates when the tail band exceeds oscillation_factor * tol.
    """
    tol: float = C.TRACE_TOL
    window: int = C.TRACE_WINDOW
    max_rays: int = C.MAX_RAYS
    oscillation_factor: float = C.OSCILLATION_FACTOR
    samples_per_edge: int = C.SAMPLES_PER_EDGE

    @property
    def oscillation_threshold(self) -> float:
        return self.oscillation_factor * self.tol


@dataclass
class ModulusConfig:
    depth: int = C.MODULUS_DEPTH
    samples_per_unit: int = C.SAMPLES_PER_UNIT


@dataclass
class VerifyConfig:
    """
    Settings for the built-in verification matrix.
    `space` uses the compact spec syntax understood by hyperfill.documents.
    """
    seed: int = 0
    # Ray depth used for trace observation. Oscillators need at least a dozen levels.
    levels: int = 14
    space: str = "cantor:depth=4,scale=0.9"
    tau: float = 1.5
    random_functions: int = 20
    # Worker processes for the rows; 0 uses one per row up to the CPU count, 1 runs inline.
    workers: int = 0
    # Restrict to these scenario names; None runs the whole built-in list.
    scenarios: Optional[List[str]] = None
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    trace: TraceConfig = field(default_factory=TraceConfig)
    modulus: ModulusConfig = field(default_factory=ModulusConfig)
