"""
hyperfill

Hyperbolic fillings of finitely sampled compact metric spaces, the uniformized
metric and lifted measures on them, regime parameters of radial weights, and a
trace lab that checks when Sobolev functions on the filling have boundary values.
"""

__all__ = [
    "space_core",
    "filling_builder",
    "uniform_geometry",
    "radial_weight",
    "weighted_measure",
    "trace_params",
    "trace_lab",
    "modulus_probe",
    "documents",
    "reports",
    "cli",
]

__version__ = "0.1.0"
