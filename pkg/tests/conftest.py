"""Shared fixtures: the standard test models."""

from pathlib import Path

import pytest

from affine_dynkin import load_model

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"

CIR_DOC = {"m": 1, "n": 0, "b": [0.1], "B": [[-0.5]], "alpha": [[[0.09]]]}
LINEAR_CIR_DOC = {"m": 1, "n": 0, "b": [0.0], "B": [[-0.5]], "alpha": [[[0.09]]]}
OU_DOC = {"m": 0, "n": 1, "b": [0.0], "B": [[-1.0]], "a": [[1.0]]}
AFFINE2D_DOC = {
    "m": 1,
    "n": 1,
    "b": [0.1, 0.0],
    "B": [[-0.5, 0.0], [0.3, -1.0]],
    "a": [[0.0, 0.0], [0.0, 0.02]],
    "alpha": [[[0.04, 0.01], [0.01, 0.09]]],
}
LINEAR2D_DOC = {
    "m": 1,
    "n": 1,
    "b": [0.0, 0.0],
    "B": [[-0.5, 0.0], [0.3, -1.0]],
    "alpha": [[[0.04, 0.01], [0.01, 0.09]]],
}
PURE_DRIFT_DOC = {"m": 0, "n": 1, "b": [1.0], "B": [[0.0]]}
ZERO_DOC = {"m": 0, "n": 1, "b": [0.0], "B": [[0.0]]}
CIR_JUMP_DOC = {
    "m": 1,
    "n": 0,
    "b": [0.1],
    "B": [[-0.5]],
    "alpha": [[[0.09]]],
    "jumps": [
        {
            "index": 1,
            "max_degree": 6,
            "compensated": False,
            "moments": [
                {"alpha": [k], "value": 0.5 * 0.2 ** (k - 1)} for k in range(1, 7)
            ],
        }
    ],
}


@pytest.fixture(scope="session")
def cir():
    return load_model(CIR_DOC)


@pytest.fixture(scope="session")
def linear_cir():
    return load_model(LINEAR_CIR_DOC)


@pytest.fixture(scope="session")
def ou():
    return load_model(OU_DOC)


@pytest.fixture(scope="session")
def affine2d():
    return load_model(AFFINE2D_DOC)


@pytest.fixture(scope="session")
def linear2d():
    return load_model(LINEAR2D_DOC)


@pytest.fixture(scope="session")
def pure_drift():
    return load_model(PURE_DRIFT_DOC)


@pytest.fixture(scope="session")
def zero_model():
    return load_model(ZERO_DOC)


@pytest.fixture(scope="session")
def cir_jump():
    return load_model(CIR_JUMP_DOC)
