"""
JSON documents and the compact spec strings used on the command line.

    space:  cantor:depth=8,scale=0.9 | grid:dim=2,resolution=5,scale=0.6 | <path>
    rho:    bbs:theta=0.5,p=2 | example11:p=2 | constant:c=1 | exp_rate:lam=1.4 |
            critical:p=2 | dip:p=2,center=1 | spike_gap:p=2,gap=1 | exploding:p=2 | <path>
    u:      smooth[:rate=1] | example11 | divergent | oscillator_p1 | oscillator_pg1 |
            oscillator_calR | <path to a profile table>
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
from enum import Enum
from typing import Any, Dict, Iterable, Optional, Tuple

import networkx as nx
import numpy as np

from . import constants as C
from . import radial_weight as rw
from .errors import ParseError
from .filling_builder import Edge, Filling, NetHierarchy, Vertex, check_nets
from .radial_weight import RadialWeight
from .space_core import MetricSpaceSample, gen_cantor, gen_grid, load_space
from .trace_lab import constructions
from .trace_lab.radial import RadialFunction, default_smooth, profile_table
from .uniform_geometry import GeodesicRay

logger = logging.getLogger(__name__)

FILLING_KEYS = ("alpha", "tau", "space", "nets", "vertices", "edges")
VERTEX_KEYS = ("center", "level", "radius", "mass")
PROFILE_KEYS = ("heights", "values", "density")
RAY_KEYS = ("xi", "vertices")


def _number(text: str) -> Any:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{text!r} is not a number") from None


def parse_spec(text: str) -> Tuple[str, Dict[str, Any]]:
    """'name:k=v,k=v' -> (name, {k: v}); values are numbers."""
    name, _, rest = str(text).strip().partition(":")
    if not name:
        raise ParseError(f"empty spec string {text!r}")
    params: Dict[str, Any] = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ParseError(f"malformed item {item!r} in {text!r}; expected key=value")
        params[key.strip()] = _number(value.strip())
    return name, params


def _warn_unknown(doc: Dict[str, Any], known: Iterable[str], what: str) -> None:
    extra = sorted(set(doc) - set(known))
    if extra:
        logger.warning(f"{what} document: ignoring unknown keys {extra}")


def _require(doc: Any, keys: Iterable[str], what: str) -> None:
    if not isinstance(doc, dict):
        raise ParseError(f"{what} document must be an object, got {type(doc).__name__}")
    missing = [k for k in keys if k not in doc]
    if missing:
        raise ParseError(f"{what} document is missing {missing}")


def read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from e
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror}") from e


def to_jsonable(obj: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(obj, Enum):
        return obj.name.lower()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if not f.name.startswith("_") and f.repr}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def write_json(doc: Any, path: Optional[str] = None) -> str:
    """Serialized document; also written to `path` when given."""
    text = json.dumps(to_jsonable(doc), indent=2, sort_keys=False)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text


# ---------------------------------------------------------------------------
# Spaces
# ---------------------------------------------------------------------------

def space_to_document(space: MetricSpaceSample) -> Dict[str, Any]:
    doc: Dict[str, Any] = {"metric": space.metric, "weights": space.weights.tolist(), "base_index": space.base_index}
    if space.metric == "euclidean":
        doc["points"] = space.coordinates.tolist()
    else:
        doc["matrix"] = space.matrix.tolist()
    if space.label:
        doc["label"] = space.label
    return doc


def parse_space_spec(text: str) -> MetricSpaceSample:
    if os.path.exists(text):
        doc = read_json(text)
        _require(doc, ("metric",), "space")
        _warn_unknown(doc, ("metric", "points", "matrix", "weights", "base_index", "label"), "space")
        return load_space(doc)
    name, params = parse_spec(text)
    try:
        if name == "cantor":
            return gen_cantor(params.get("depth", 8), params.get("scale", 0.9))
        if name == "grid":
            return gen_grid(params.get("dim", 1), params["resolution"], params.get("scale", 0.9))
    except KeyError as e:
        raise ParseError(f"space spec {text!r} is missing {e.args[0]!r}") from None
    raise ParseError(f"unknown space {name!r}; expected cantor, grid or a path")


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------

def parse_rho_spec(text: str, alpha: float) -> RadialWeight:
    """Weight families that need alpha take it from the command line."""
    if os.path.exists(text):
        doc = read_json(text)
        _warn_unknown(doc, ("family", "params", "tail"), "RadialWeight")
        return rw.from_document(doc)
    name, params = parse_spec(text)
    try:
        if name == "constant":
            return rw.constant(params.get("c", 1.0))
        if name == "exp_rate":
            return rw.exp_rate(params["lam"])
        if name == "bbs":
            return rw.bbs(params["theta"], params.get("p", 2.0), alpha)
        if name == "critical":
            return rw.critical(params.get("p", 2.0), alpha)
        if name == "example11":
            return rw.example11(params.get("p", 2.0), alpha)
        if name == "dip":
            return rw.dip(params.get("p", 2.0), alpha, params.get("center", 1.0))
        if name == "spike_gap":
            return rw.spike_gap(params.get("p", 2.0), alpha, params.get("gap", 1.0), params.get("height", math.e),
                                max_exponent=int(params.get("max_exponent", 12)))
        if name == "exploding":
            return rw.exploding(params.get("p", 2.0), alpha)
    except KeyError as e:
        raise ParseError(f"weight spec {text!r} is missing {e.args[0]!r}") from None
    raise ParseError(f"unknown weight {name!r}; expected one of {rw.FAMILIES} or a path")


# ---------------------------------------------------------------------------
# Radial functions
# ---------------------------------------------------------------------------

U_KINDS = ("smooth", "example11", "divergent", "oscillator_p1", "oscillator_pg1", "oscillator_calR")


def load_profile(doc: Dict[str, Any], alpha: Optional[float]) -> RadialFunction:
    _require(doc, ("heights", "values"), "profile")
    _warn_unknown(doc, PROFILE_KEYS, "profile")
    return profile_table(doc["heights"], doc["values"], doc.get("density"), alpha=alpha)


def parse_u_spec(
    text: str,
    *,
    rho: RadialWeight,
    p: float,
    alpha: float,
    t_max: float = C.DEFAULT_T_MAX,
) -> RadialFunction:
    if os.path.exists(text):
        return load_profile(read_json(text), alpha)
    name, params = parse_spec(text)
    if name == "smooth":
        return default_smooth(alpha, rate=float(params.get("rate", 1.0)))
    if name == "example11":
        return constructions.build_example11(p, alpha, cells=int(params.get("cells", 24))).u
    if name == "divergent":
        return constructions.build_divergent(rho, p, alpha=alpha, t_max=t_max)
    if name == "oscillator_p1":
        return constructions.build_oscillator_p1(rho, alpha=alpha, t_max=t_max)
    if name == "oscillator_pg1":
        return constructions.build_oscillator_pg1(rho, p, alpha=alpha, t_max=t_max)
    if name == "oscillator_calR":
        return constructions.build_oscillator_calR(rho, p, alpha=alpha, t_max=t_max)
    raise ParseError(f"unknown function {name!r}; expected one of {U_KINDS} or a path")


# ---------------------------------------------------------------------------
# Fillings and rays
# ---------------------------------------------------------------------------

def filling_to_document(filling: Filling) -> Dict[str, Any]:
    """Vertex objects carry center, level, radius alpha^-level and nu(B_v); space and nets let the filling be rebuilt."""
    return {
        "alpha": filling.alpha,
        "tau": filling.tau,
        "levels": filling.levels,
        "space": space_to_document(filling.space),
        "nets": [list(net) for net in filling.nets.levels],
        "vertices": [
            {"center": z, "level": n, "radius": filling.nets.radius(n), "mass": float(filling.masses[vid])}
            for vid, (z, n) in enumerate(filling.vertices)
        ],
        "edges": [[e.a, e.b, e.kind] for e in filling.edges],
    }


def _vertex_from_document(doc: Any, alpha: float, vid: int) -> Tuple[Vertex, float]:
    _require(doc, VERTEX_KEYS, f"vertex {vid}")
    z, n = int(doc["center"]), int(doc["level"])
    radius, mass = float(doc["radius"]), float(doc["mass"])
    if not math.isclose(radius, alpha ** (-n), rel_tol=1e-9):
        raise ParseError(f"vertex {vid}: radius {radius:g} is not alpha^-{n} = {alpha ** (-n):g}")
    return (z, n), mass


def filling_from_document(doc: Dict[str, Any]) -> Filling:
    """Rebuilds the Filling exactly as stored; nets are re-validated against the space."""
    _require(doc, FILLING_KEYS, "filling")
    _warn_unknown(doc, FILLING_KEYS + ("levels",), "filling")
    try:
        space = load_space(doc["space"])
        alpha = float(doc["alpha"])
        nets = NetHierarchy(alpha, tuple(tuple(int(z) for z in net) for net in doc["nets"]))
        stored = [_vertex_from_document(v, alpha, vid) for vid, v in enumerate(doc["vertices"])]
        edges = tuple(Edge(int(a), int(b), str(kind)) for a, b, kind in doc["edges"])
        tau = float(doc["tau"])
    except (TypeError, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"malformed filling document: {e}") from e
    vertices = tuple(v for v, _ in stored)
    masses = np.asarray([m for _, m in stored], dtype=float)
    check_nets(space, nets)
    expected = tuple((z, n) for n, net in enumerate(nets.levels) for z in net)
    if vertices != expected:
        raise ParseError("vertices do not enumerate the nets in (level, center) order")

    index = {v: i for i, v in enumerate(vertices)}
    edge_index = {(e.a, e.b): i for i, e in enumerate(edges)}
    graph = nx.Graph()
    for vid, (z, n) in enumerate(vertices):
        graph.add_node(vid, center=z, level=n, mass=float(masses[vid]))
    for eid, e in enumerate(edges):
        if not (0 <= e.a < len(vertices) and 0 <= e.b < len(vertices)):
            raise ParseError(f"edge {eid} references a missing vertex")
        graph.add_edge(e.a, e.b, kind=e.kind, eid=eid)
    return Filling(
        space=space, nets=nets, tau=tau, vertices=vertices, masses=masses,
        edges=edges, graph=graph, index=index, edge_index=edge_index,
    )


def ray_to_document(ray: GeodesicRay) -> Dict[str, Any]:
    return {"xi": ray.xi, "vertices": list(ray.vertices)}


def ray_from_document(doc: Dict[str, Any]) -> GeodesicRay:
    _require(doc, RAY_KEYS, "ray")
    _warn_unknown(doc, RAY_KEYS, "ray")
    return GeodesicRay(int(doc["xi"]), tuple(int(v) for v in doc["vertices"]))


def parse_interval(text: str) -> Tuple[float, float]:
    """'a,b' -> (a, b)."""
    parts = [s.strip() for s in str(text).split(",")]
    if len(parts) != 2:
        raise ParseError(f"interval {text!r} must be 'a,b'")
    return float(_number(parts[0])), float(_number(parts[1]))
