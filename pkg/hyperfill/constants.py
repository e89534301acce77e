"""
Numeric defaults shared across hyperfill.
Avoid hard-coded tolerances and horizons in the individual modules.
"""

# Point-set capacity
MAX_POINTS = 10**6
MAX_CANTOR_DEPTH = 14
TRIANGLE_EXHAUSTIVE_LIMIT = 10**5   # triples checked exhaustively, random beyond
TRIANGLE_SAMPLE_COUNT = 10**5
METRIC_ATOL = 1e-12                 # symmetry / triangle slack for float input

# Quadrature
EDGE_QUAD_TOL = 1e-10               # absolute tolerance per edge integral
QUAD_LIMIT = 200                    # QUADPACK subdivision limit
DEFAULT_T_MAX = 80.0                # horizon for improper integrals over [0, inf)
OVERFLOW_GUARD = 1e12               # partial values above this are flagged infinite
SAMPLES_PER_UNIT = 4096             # dense sampling for essential suprema (p = 1)

# Unit-mass partition
PARTITION_TOL = 1e-12
PARTITION_MAX_CELLS = 200

# Trace detection
TRACE_TOL = 1e-4
TRACE_WINDOW = 5                    # consecutive integer heights in the Cauchy window
OSCILLATION_FACTOR = 10.0           # oscillation threshold = factor * tol
SAMPLES_PER_EDGE = 8                # dyadic heights sampled per ray edge
MAX_RAYS = 64

# Modulus probe
MODULUS_DEPTH = 8
DENSITY_FLOOR = 1e-300              # positive floor for fixtures that "vanish"

# Doubling diagnostics
DOUBLING_WARN_RATIO = 64.0

# Root of the filling
ROOT_LEVEL = 0
