import json

import numpy as np
import pytest

from affine_dynkin.errors import ConfigError, InadmissibleModel
from affine_dynkin.model import (
    load_model,
    model_fingerprint,
    parse_model,
    serialize_model,
    validate_admissibility,
)

from conftest import AFFINE2D_DOC, CIR_DOC, CIR_JUMP_DOC, OU_DOC


def test_load_cir(cir):
    assert cir.m == 1 and cir.n == 0
    assert cir.b[0] == 0.1
    assert validate_admissibility(cir) == []


def test_load_ou(ou):
    assert ou.m == 0 and ou.n == 1
    assert ou.a[0, 0] == 1.0
    assert validate_admissibility(ou) == []


def test_negative_drift_on_I_rejected():
    doc = {"m": 1, "n": 0, "b": [-0.1], "B": [[-0.5]], "alpha": [[[0.09]]]}
    violations = validate_admissibility(parse_model(doc))
    assert "b_I must be >= 0" in violations
    with pytest.raises(InadmissibleModel, match="b_I"):
        load_model(doc)


def test_constant_diffusion_must_vanish_on_I():
    doc = {"m": 1, "n": 0, "b": [0.1], "B": [[-0.5]], "a": [[0.2]], "alpha": [[[0.09]]]}
    violations = validate_admissibility(parse_model(doc))
    assert "constant diffusion must vanish on I" in violations


def test_alpha_not_psd_detected():
    doc = {"m": 1, "n": 0, "b": [0.1], "B": [[-0.5]], "alpha": [[[-0.01]]]}
    violations = validate_admissibility(parse_model(doc))
    assert "alpha_1 not PSD" in violations


def test_psd_tolerance_accepts_rounded_input():
    # Slightly negative eigenvalue within the relative tolerance must pass.
    eps = 1e-12
    doc = {
        "m": 0,
        "n": 2,
        "b": [0.0, 0.0],
        "B": [[0.0, 0.0], [0.0, 0.0]],
        "a": [[1.0, 1.0], [1.0, 1.0 - eps]],
    }
    assert validate_admissibility(parse_model(doc)) == []


def test_I_J_drift_block_must_vanish():
    doc = dict(AFFINE2D_DOC)
    doc["B"] = [[-0.5, 0.2], [0.3, -1.0]]  # I row depends on J coordinate
    violations = validate_admissibility(parse_model(doc))
    assert any("I x J block" in v for v in violations)


def test_alpha_block_support():
    doc = {
        "m": 2,
        "n": 0,
        "b": [0.1, 0.1],
        "B": [[-0.5, 0.0], [0.0, -0.5]],
        "alpha": [[[0.09, 0.01], [0.01, 0.04]], [[0.0, 0.0], [0.0, 0.09]]],
    }
    violations = validate_admissibility(parse_model(doc))
    assert any("alpha_1" in v and "block" in v for v in violations)


def test_unknown_keys_rejected():
    doc = dict(CIR_DOC)
    doc["sigma"] = 0.3
    with pytest.raises(ConfigError, match="unknown config keys"):
        parse_model(doc)


def test_malformed_json_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_model(path)


def test_jump_schema_round_trip(cir_jump):
    assert cir_jump.max_jump_degree == 6
    assert cir_jump.jumps[1].moment((1,)) == 0.5
    doc = serialize_model(cir_jump)
    again = load_model(doc)
    assert serialize_model(again) == doc


def test_incomplete_jump_table_flagged():
    doc = json.loads(json.dumps(CIR_JUMP_DOC))
    doc["jumps"][0]["moments"] = doc["jumps"][0]["moments"][:3]
    violations = validate_admissibility(parse_model(doc))
    assert any("incomplete" in v for v in violations)


def test_negative_pure_I_jump_moment_flagged():
    doc = json.loads(json.dumps(CIR_JUMP_DOC))
    doc["jumps"][0]["moments"][1]["value"] = -0.2
    violations = validate_admissibility(parse_model(doc))
    assert any("must be >= 0" in v for v in violations)


def test_negative_pure_second_moment_on_J_flagged():
    # xi_k^2 integrates to something nonnegative on any coordinate.
    doc = {
        "m": 1,
        "n": 1,
        "b": [0.1, 0.0],
        "B": [[-0.5, 0.0], [0.0, -1.0]],
        "alpha": [[[0.04, 0.0], [0.0, 0.0]]],
        "jumps": [{
            "index": 1,
            "max_degree": 2,
            "moments": [
                {"alpha": [1, 0], "value": 0.2},
                {"alpha": [0, 1], "value": -0.1},
                {"alpha": [2, 0], "value": 0.1},
                {"alpha": [1, 1], "value": -0.05},
                {"alpha": [0, 2], "value": -0.3},
            ],
        }],
    }
    violations = validate_admissibility(parse_model(doc))
    assert any("pure second moment" in v and "(0, 2)" in v for v in violations)


def test_serialize_load_identity(cir, ou, affine2d, cir_jump):
    for model in (cir, ou, affine2d, cir_jump):
        doc = serialize_model(model)
        assert serialize_model(load_model(doc)) == doc


def test_fingerprint_distinguishes_models(cir, linear_cir, ou):
    prints = {model_fingerprint(m) for m in (cir, linear_cir, ou)}
    assert len(prints) == 3
    assert model_fingerprint(cir) == model_fingerprint(load_model(CIR_DOC))


def test_validation_is_pure(affine2d):
    first = validate_admissibility(affine2d)
    second = validate_admissibility(affine2d)
    assert first == second == []


def test_model_arrays_immutable(cir):
    with pytest.raises(ValueError):
        cir.b[0] = 99.0


def test_out_of_range_jump_index_rejected():
    doc = json.loads(json.dumps(CIR_JUMP_DOC))
    doc["jumps"][0]["index"] = 2
    with pytest.raises(ConfigError, match="index"):
        parse_model(doc)


def test_ou_doc_accepts_defaults():
    # `a` present, `alpha` omitted (m = 0), `jumps` omitted.
    model = parse_model(OU_DOC)
    assert model.alpha == ()
    assert not model.jumps
