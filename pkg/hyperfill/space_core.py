"""
Finitely sampled compact metric spaces (Z, d, nu).

A sample carries all of the mass of nu on its points, so statements that hold for
nu-almost every boundary point are checked on every sample point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree
from scipy.spatial.distance import pdist

from . import constants as C
from .errors import CapacityExceeded, InvalidParameter, InvariantViolation, ParseError
from .utils.checks import checked, greater_than, in_open_interval

logger = logging.getLogger(__name__)

METRIC_MODES = ("euclidean", "matrix")


@dataclass(frozen=True, eq=False)
class MetricSpaceSample:
    """
    Immutable finite sample of Z.

    Exactly one of `coordinates` (metric == "euclidean") or `matrix`
    (metric == "matrix") is set. Distances are served row by row so that large
    Euclidean samples never materialise an n x n matrix.
    """

    metric: str
    weights: np.ndarray
    base_index: int = 0
    coordinates: Optional[np.ndarray] = None
    matrix: Optional[np.ndarray] = None
    label: str = ""
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    @cached_property
    def diameter(self) -> float:
        if self.size < 2:
            return 0.0
        if self.matrix is not None:
            return float(np.max(self.matrix))
        return _euclidean_diameter(self.coordinates)

    def row(self, i: int) -> np.ndarray:
        """Distances from point i to every sample point."""
        if self.matrix is not None:
            return self.matrix[i]
        diff = self.coordinates - self.coordinates[i]
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))

    def distance(self, i: int, j: int) -> float:
        if self.matrix is not None:
            return float(self.matrix[i, j])
        return float(np.linalg.norm(self.coordinates[i] - self.coordinates[j]))

    def validate_index(self, i: int) -> int:
        i = int(i)
        if not 0 <= i < self.size:
            raise InvalidParameter(f"point index {i} outside [0, {self.size})")
        return i


def _euclidean_diameter(coords: np.ndarray) -> float:
    if coords.shape[1] == 1:
        return float(np.ptp(coords[:, 0]))
    pts = coords
    if coords.shape[0] > 3 and coords.shape[1] == 2:
        try:
            pts = coords[ConvexHull(coords).vertices]
        except QhullError:
            # collinear input, hull is degenerate
            pts = coords
    if pts.shape[0] > 20000:
        lo = coords.min(axis=0)
        hi = coords.max(axis=0)
        logger.warning(f"diameter of {pts.shape[0]} points bounded by bounding box")
        return float(np.linalg.norm(hi - lo))
    return float(np.max(pdist(pts)))


def _min_separation(coords: np.ndarray) -> float:
    if coords.shape[0] < 2:
        return float("inf")
    if coords.shape[1] == 1:
        return float(np.min(np.diff(np.sort(coords[:, 0]))))
    d, _ = cKDTree(coords).query(coords, k=2)
    return float(np.min(d[:, 1]))


def _check_weights(weights: np.ndarray, n: int) -> None:
    if weights.shape != (n,):
        raise ParseError(f"expected {n} weights, got shape {weights.shape}")
    if not np.all(np.isfinite(weights)):
        raise InvariantViolation("nonpositive weight: non-finite entry")
    bad = np.flatnonzero(weights <= 0)
    if bad.size:
        raise InvariantViolation(f"nonpositive weight at index {int(bad[0])}: {weights[bad[0]]}")


def _check_matrix(matrix: np.ndarray, rng_seed: int = 0) -> None:
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise ParseError(f"distance matrix must be square, got {matrix.shape}")
    if not np.allclose(matrix, matrix.T, atol=C.METRIC_ATOL, rtol=0.0):
        i, j = np.unravel_index(np.argmax(np.abs(matrix - matrix.T)), matrix.shape)
        raise InvariantViolation(f"asymmetric matrix at ({i}, {j}): {matrix[i, j]} != {matrix[j, i]}")
    if np.any(np.abs(np.diag(matrix)) > C.METRIC_ATOL):
        raise InvariantViolation("asymmetric matrix: nonzero diagonal")
    off = matrix[~np.eye(n, dtype=bool)]
    if off.size and np.min(off) <= 0:
        raise InvariantViolation("nonpositive distance between distinct points")

    if n**3 <= C.TRIANGLE_EXHAUSTIVE_LIMIT:
        for k in range(n):
            via_k = matrix[:, [k]] + matrix[[k], :]
            bad = matrix > via_k + C.METRIC_ATOL
            if np.any(bad):
                i, j = np.argwhere(bad)[0]
                raise InvariantViolation(
                    f"triangle failure: {matrix[i, j]:.12g} > {via_k[i, j]:.12g} "
                    f"(points {i}, {j} via {k})"
                )
        return

    rng = np.random.default_rng(rng_seed)
    i, j, k = rng.integers(0, n, size=(3, C.TRIANGLE_SAMPLE_COUNT))
    lhs = matrix[i, j]
    rhs = matrix[i, k] + matrix[k, j]
    bad = np.flatnonzero(lhs > rhs + C.METRIC_ATOL)
    if bad.size:
        b = bad[0]
        raise InvariantViolation(
            f"triangle failure: {lhs[b]:.12g} > {rhs[b]:.12g} (points {i[b]}, {j[b]} via {k[b]})"
        )
    logger.info(f"triangle inequality checked on {C.TRIANGLE_SAMPLE_COUNT} random triples of {n} points")


def make_space(
    metric: str,
    weights: Sequence[float],
    *,
    coordinates: Optional[Sequence[Sequence[float]]] = None,
    matrix: Optional[Sequence[Sequence[float]]] = None,
    base_index: int = 0,
    label: str = "",
    params: Optional[Dict[str, Any]] = None,
) -> MetricSpaceSample:
    """Validate raw arrays and wrap them in a MetricSpaceSample."""
    if metric not in METRIC_MODES:
        raise ParseError(f"metric must be one of {METRIC_MODES}, got {metric!r}")
    w = np.asarray(weights, dtype=float)

    if metric == "euclidean":
        if coordinates is None:
            raise ParseError("euclidean metric requires points")
        coords = np.asarray(coordinates, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] == 0:
            raise ParseError(f"points must be a nonempty list of coordinate lists, got shape {coords.shape}")
        if coords.shape[0] > C.MAX_POINTS:
            raise CapacityExceeded(f"{coords.shape[0]} points exceed {C.MAX_POINTS}")
        _check_weights(w, coords.shape[0])
        if _min_separation(coords) <= 0:
            raise InvariantViolation("nonpositive distance between distinct points (duplicate coordinates)")
        space = MetricSpaceSample(metric, w, base_index, coordinates=coords, label=label, params=params or {})
    else:
        if matrix is None:
            raise ParseError("matrix metric requires a distance matrix")
        mat = np.asarray(matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] == 0:
            raise ParseError(f"matrix must be a nonempty square list of lists, got shape {mat.shape}")
        if mat.shape[0] > C.MAX_POINTS:
            raise CapacityExceeded(f"{mat.shape[0]} points exceed {C.MAX_POINTS}")
        _check_weights(w, mat.shape[0])
        _check_matrix(mat)
        space = MetricSpaceSample(metric, w, base_index, matrix=mat, label=label, params=params or {})

    if not 0 <= base_index < space.size:
        raise InvariantViolation(f"base_index {base_index} outside [0, {space.size})")
    if space.diameter >= 1.0:
        raise InvariantViolation(f"diam >= 1: diam Z = {space.diameter:.12g}")
    if space.size >= 2 and space.diameter <= 0:
        raise InvariantViolation("diam Z must be positive")
    logger.debug(f"space {label or metric}: {space.size} points, diam {space.diameter:.6g}, mass {space.total_mass:.6g}")
    return space


def load_space(doc: Dict[str, Any]) -> MetricSpaceSample:
    """
    Build a sample from a space description document:
    {"metric": "euclidean"|"matrix", "points": [[x, (y)], ...] or "matrix": [[..]],
     "weights": [..], "base_index": int}. Missing weights default to uniform 1/n.
    """
    if not isinstance(doc, dict):
        raise ParseError(f"space document must be an object, got {type(doc).__name__}")
    metric = doc.get("metric")
    if metric not in METRIC_MODES:
        raise ParseError(f"metric must be one of {METRIC_MODES}, got {metric!r}")
    key = "points" if metric == "euclidean" else "matrix"
    if key not in doc:
        raise ParseError(f"{metric} space document is missing {key!r}")
    try:
        n = len(doc[key])
        weights = doc.get("weights")
        if weights is None:
            weights = [1.0 / n] * n
        base = int(doc.get("base_index", 0))
        if metric == "euclidean":
            return make_space(metric, weights, coordinates=doc["points"], base_index=base, label=doc.get("label", ""))
        return make_space(metric, weights, matrix=doc["matrix"], base_index=base, label=doc.get("label", ""))
    except (TypeError, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"malformed space document: {e}") from e


@checked(depth=(lambda v: int(v) >= 1, ">= 1"), scale=in_open_interval(0.0, 1.0))
def gen_cantor(depth: int, scale: float = 0.9) -> MetricSpaceSample:
    """
    Endpoints of the middle-thirds construction on [0, scale] after depth - 1
    subdivisions: 2^depth points with mass 2^-depth each, z0 = 0.
    """
    depth = int(depth)
    if depth > C.MAX_CANTOR_DEPTH or 2**depth > C.MAX_POINTS:
        raise CapacityExceeded(f"Cantor depth {depth} gives {2**depth} points (limit depth {C.MAX_CANTOR_DEPTH})")
    left = np.zeros(1)
    length = float(scale)
    for _ in range(depth - 1):
        length /= 3.0
        left = np.concatenate([left, left + 2.0 * length])
    left.sort()
    points = np.empty(2 * left.size)
    points[0::2] = left
    points[1::2] = left + length
    weights = np.full(points.size, 2.0 ** (-depth))
    return make_space(
        "euclidean", weights, coordinates=points[:, None], base_index=0,
        label=f"cantor:depth={depth},scale={scale}", params={"depth": depth, "scale": float(scale)},
    )


@checked(resolution=(lambda v: int(v) >= 2, ">= 2"), scale=in_open_interval(0.0, 1.0))
def gen_grid(dim: int, resolution: int, scale: float) -> MetricSpaceSample:
    """Uniform grid; in dimension 2 the side is scale/sqrt(2) so the diagonal equals scale."""
    if dim not in (1, 2):
        raise InvalidParameter(f"dim={dim!r} violates dim in {{1, 2}}")
    resolution = int(resolution)
    if resolution**dim > C.MAX_POINTS:
        raise CapacityExceeded(f"grid of {resolution}^{dim} points exceeds {C.MAX_POINTS}")
    if dim == 1:
        coords = np.linspace(0.0, scale, resolution)[:, None]
    else:
        axis = np.linspace(0.0, scale / np.sqrt(2.0), resolution)
        xx, yy = np.meshgrid(axis, axis, indexing="ij")
        coords = np.column_stack([xx.ravel(), yy.ravel()])
    weights = np.full(coords.shape[0], 1.0 / coords.shape[0])
    return make_space(
        "euclidean", weights, coordinates=coords, base_index=0,
        label=f"grid:dim={dim},resolution={resolution},scale={scale}",
        params={"dim": dim, "resolution": resolution, "scale": float(scale)},
    )


@checked(radius=greater_than(0.0))
def ball_measure(space: MetricSpaceSample, center: int, radius: float) -> float:
    """nu of the open ball {y : d(y, center) < radius}."""
    center = space.validate_index(center)
    return float(np.sum(space.weights[space.row(center) < radius]))


@dataclass(frozen=True)
class DoublingReport:
    ratio: float
    center: int
    radius: float
    per_radius: Dict[float, float]


def verify_doubling(space: MetricSpaceSample, radii: List[float]) -> DoublingReport:
    """Largest nu(B(x, 2r)) / nu(B(x, r)) over every sample point x and supplied r."""
    if not radii:
        raise InvalidParameter("radii must be nonempty")
    r = np.asarray(sorted(float(x) for x in radii))
    if np.any(r <= 0):
        raise InvalidParameter(f"radii must be positive, got {radii}")

    per_radius = {float(x): 1.0 for x in r}
    best = (1.0, space.base_index, float(r[0]))
    for x in range(space.size):
        row = space.row(x)
        # mass inside radius r for every requested r, and 2r
        order = np.argsort(row)
        cum = np.cumsum(space.weights[order])
        sorted_d = row[order]
        inner = cum[np.searchsorted(sorted_d, r, side="left") - 1]
        outer = cum[np.searchsorted(sorted_d, 2.0 * r, side="left") - 1]
        ratios = outer / inner
        for radius, ratio in zip(r, ratios):
            per_radius[float(radius)] = max(per_radius[float(radius)], float(ratio))
        k = int(np.argmax(ratios))
        if ratios[k] > best[0]:
            best = (float(ratios[k]), x, float(r[k]))

    if best[0] > C.DOUBLING_WARN_RATIO:
        logger.warning(f"doubling ratio {best[0]:.3g} at point {best[1]}, radius {best[2]:.3g}: measure may not be doubling")
    return DoublingReport(ratio=best[0], center=best[1], radius=best[2], per_radius=per_radius)
