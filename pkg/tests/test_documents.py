import json
import math

import numpy as np
import pytest

from hyperfill import radial_weight as rw
from hyperfill.documents import (
    filling_from_document,
    filling_to_document,
    parse_interval,
    parse_rho_spec,
    parse_space_spec,
    parse_spec,
    parse_u_spec,
    ray_from_document,
    ray_to_document,
    read_json,
    space_to_document,
    to_jsonable,
    write_json,
)
from hyperfill.errors import InvariantViolation, ParseError
from hyperfill.filling_builder import build_filling, build_nets
from hyperfill.space_core import gen_cantor
from hyperfill.status_model import ParamValue, TraceStatus
from hyperfill.uniform_geometry import enumerate_rays


def test_parse_spec():
    assert parse_spec("bbs:theta=0.5,p=2") == ("bbs", {"theta": 0.5, "p": 2})
    assert parse_spec("smooth") == ("smooth", {})
    with pytest.raises(ParseError):
        parse_spec("bbs:theta")
    with pytest.raises(ParseError):
        parse_spec("bbs:theta=half")
    with pytest.raises(ParseError):
        parse_spec(":x=1")


def test_jsonable_values():
    doc = to_jsonable({"R": ParamValue.inf("certificate"), "status": TraceStatus.DIVERGED, "x": np.float64(0.5)})
    assert doc["R"]["value"] == "inf"
    assert doc["R"]["infinite"] is True
    assert doc["status"] == "diverged"
    assert doc["x"] == 0.5
    assert to_jsonable(-math.inf) == "-inf"
    assert json.loads(write_json({"a": [1, 2]})) == {"a": [1, 2]}


def test_filling_document_round_trip(tmp_path):
    space = gen_cantor(4, 0.9)
    filling = build_filling(space, build_nets(space, 2.0, 6), 1.5)
    path = tmp_path / "filling.json"
    write_json(filling_to_document(filling), str(path))
    again = filling_from_document(read_json(str(path)))
    assert again.vertices == filling.vertices
    assert again.edges == filling.edges
    assert np.array_equal(again.masses, filling.masses)
    assert again.tau == filling.tau and again.alpha == filling.alpha


def test_filling_document_vertex_objects():
    space = gen_cantor(3, 0.9)
    filling = build_filling(space, build_nets(space, 3.0, 4), 1.5)
    doc = filling_to_document(filling)
    assert "masses" not in doc
    root, last = doc["vertices"][0], doc["vertices"][-1]
    assert root == {"center": space.base_index, "level": 0, "radius": 1.0, "mass": pytest.approx(1.0)}
    assert set(last) == {"center", "level", "radius", "mass"}
    assert last["radius"] == pytest.approx(3.0 ** -last["level"])
    assert [v["mass"] for v in doc["vertices"]] == pytest.approx(filling.masses.tolist())


def test_filling_document_is_validated():
    space = gen_cantor(3, 0.9)
    doc = filling_to_document(build_filling(space, build_nets(space, 2.0, 4), 1.5))
    broken = dict(doc, nets=[[0]] + doc["nets"][1:-1] + [[0]])
    with pytest.raises(InvariantViolation):
        filling_from_document(broken)
    with pytest.raises(ParseError):
        filling_from_document({k: v for k, v in doc.items() if k != "edges"})
    with pytest.raises(ParseError):
        filling_from_document(dict(doc, vertices=doc["vertices"][:-1]))
    wrong_radius = [dict(v, radius=2.0 * v["radius"]) if v["level"] == 2 else v for v in doc["vertices"]]
    with pytest.raises(ParseError, match="radius"):
        filling_from_document(dict(doc, vertices=wrong_radius))
    with pytest.raises(ParseError):
        filling_from_document(dict(doc, vertices=[[v["center"], v["level"]] for v in doc["vertices"]]))


def test_ray_document(cantor_fillings):
    ray = enumerate_rays(cantor_fillings[2.0], 12, max_rays=1)[0]
    assert ray_from_document(ray_to_document(ray)) == ray
    with pytest.raises(ParseError):
        ray_from_document({"xi": 1})


def test_space_specs(tmp_path):
    assert parse_space_spec("cantor:depth=3,scale=0.5").size == 8
    assert parse_space_spec("grid:dim=1,resolution=4").size == 4
    with pytest.raises(ParseError):
        parse_space_spec("grid:dim=1")
    with pytest.raises(ParseError):
        parse_space_spec("sphere:n=2")
    path = tmp_path / "space.json"
    write_json(space_to_document(gen_cantor(2, 0.9)), str(path))
    assert parse_space_spec(str(path)).size == 4


def test_rho_specs(tmp_path):
    assert parse_rho_spec("bbs:theta=0.5,p=2", 2.0).family == "bbs"
    assert parse_rho_spec("constant", 2.0).value(3.0) == 1.0
    assert parse_rho_spec("dip:p=2", 3.0).alpha == 3.0
    with pytest.raises(ParseError):
        parse_rho_spec("bbs:p=2", 2.0)
    with pytest.raises(ParseError):
        parse_rho_spec("gaussian", 2.0)
    path = tmp_path / "rho.json"
    write_json(rw.example11(2.0, 2.0).to_document(), str(path))
    assert parse_rho_spec(str(path), 2.0).family == "example11"


def test_u_specs(tmp_path):
    rho = rw.example11(2.0, 2.0)
    smooth = parse_u_spec("smooth", rho=rho, p=2.0, alpha=2.0)
    assert smooth.tag == "smooth" and smooth.params["terms"] == [[-1.0, 1.0]]
    assert parse_u_spec("smooth:rate=2", rho=rho, p=2.0, alpha=2.0).params["terms"] == [[-1.0, 2.0]]
    assert parse_u_spec("example11:cells=6", rho=rho, p=2.0, alpha=2.0).params["cells"] == 6
    with pytest.raises(ParseError):
        parse_u_spec("wiggle", rho=rho, p=2.0, alpha=2.0)
    path = tmp_path / "profile.json"
    path.write_text(json.dumps({"heights": [0, 1, 2], "values": [0, 1, 0]}))
    u = parse_u_spec(str(path), rho=rho, p=2.0, alpha=2.0)
    assert u.U(1.0) == 1.0


def test_read_json_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        read_json(str(bad))
    with pytest.raises(ParseError):
        read_json(str(tmp_path / "missing.json"))


def test_parse_interval():
    assert parse_interval("0,2") == (0.0, 2.0)
    assert parse_interval(" 0.5 , 1.5 ") == (0.5, 1.5)
    with pytest.raises(ParseError):
        parse_interval("1")
