from .constructions import (
    Example11,
    build_divergent,
    build_example11,
    build_oscillator_calR,
    build_oscillator_p1,
    build_oscillator_pg1,
    level_set_intervals,
    tent_peaks,
)
from .radial import RadialFunction, constant_function, default_smooth, profile_table, smooth_exponential
from .traces import (
    check_upper_gradient,
    classify_samples,
    majorant,
    sobolev_norms,
    trace_along_ray,
    trace_lp_bound,
    trace_on_edge_union,
    trace_T,
    trace_tilde,
)

__all__ = [
    "Example11",
    "RadialFunction",
    "build_divergent",
    "build_example11",
    "build_oscillator_calR",
    "build_oscillator_p1",
    "build_oscillator_pg1",
    "check_upper_gradient",
    "classify_samples",
    "constant_function",
    "default_smooth",
    "level_set_intervals",
    "majorant",
    "profile_table",
    "smooth_exponential",
    "sobolev_norms",
    "tent_peaks",
    "trace_T",
    "trace_along_ray",
    "trace_lp_bound",
    "trace_on_edge_union",
    "trace_tilde",
]
