"""Affine models on the canonical state space R+^m x R^n.

A model is given by its characteristics: constant drift b, linear drift
matrix B (column k is the drift loading of coordinate k), constant
diffusion a, per-coordinate diffusion loadings alpha_i for the first m
coordinates, and optional jump kernels described purely through their
polynomial moment tables.  Kernel index 0 is the state-independent jump
part; index i in 1..m scales with coordinate x_i.

Models are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigError, InadmissibleModel
from .polyalg import MultiIndex, mi_order, monomial_basis

# Eigenvalues are accepted as nonnegative down to -PSD_TOL * max|entry|,
# since configs typically carry rounded decimals.
PSD_TOL = 1e-10


def _frozen_array(values, shape, what: str) -> np.ndarray:
    try:
        arr = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what} is not numeric: {exc}") from None
    if arr.shape != shape:
        raise ConfigError(f"{what} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{what} contains nonfinite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class JumpKernel:
    """Polynomial moment table of a jump measure.

    moments maps each multi-index alpha with 1 <= |alpha| <= max_degree to
    the value of the alpha-mixed moment of the measure.  `compensated`
    declares that first-order moments are already absorbed into the drift.
    """

    max_degree: int
    moments: Mapping[MultiIndex, float]
    compensated: bool = False

    def __post_init__(self):
        if self.max_degree < 1:
            raise ConfigError(f"jump max_degree must be >= 1, got {self.max_degree}")
        clean = {}
        for alpha, value in self.moments.items():
            alpha = tuple(int(a) for a in alpha)
            if any(a < 0 for a in alpha):
                raise ConfigError(f"negative exponent in jump moment index {alpha}")
            order = mi_order(alpha)
            if not 1 <= order <= self.max_degree:
                raise ConfigError(
                    f"jump moment index {alpha} has order {order}, "
                    f"outside 1..{self.max_degree}"
                )
            clean[alpha] = float(value)
        object.__setattr__(self, "moments", clean)

    def moment(self, alpha: MultiIndex) -> float:
        return self.moments.get(tuple(alpha), 0.0)

    def missing_indices(self, d: int) -> list[MultiIndex]:
        """Multi-indices up to max_degree with no table entry."""
        return [
            alpha
            for alpha in monomial_basis(d, self.max_degree)
            if 0 < mi_order(alpha) and alpha not in self.moments
        ]


@dataclass(frozen=True, eq=False)
class AffineModel:
    """Admissible affine characteristics on D = R+^m x R^n."""

    m: int
    n: int
    b: np.ndarray
    B: np.ndarray
    a: np.ndarray
    alpha: tuple[np.ndarray, ...] = ()
    jumps: Mapping[int, JumpKernel] = field(default_factory=dict)

    def __post_init__(self):
        if self.m < 0 or self.n < 0 or self.m + self.n < 1:
            raise ConfigError(f"invalid state split m={self.m}, n={self.n}")
        d = self.d
        object.__setattr__(self, "b", _frozen_array(self.b, (d,), "b"))
        object.__setattr__(self, "B", _frozen_array(self.B, (d, d), "B"))
        object.__setattr__(self, "a", _frozen_array(self.a, (d, d), "a"))
        if len(self.alpha) != self.m:
            raise ConfigError(
                f"expected {self.m} alpha matrices, got {len(self.alpha)}"
            )
        object.__setattr__(
            self,
            "alpha",
            tuple(
                _frozen_array(mat, (d, d), f"alpha_{i + 1}")
                for i, mat in enumerate(self.alpha)
            ),
        )
        jumps = {}
        for idx, kernel in dict(self.jumps).items():
            idx = int(idx)
            if not 0 <= idx <= self.m:
                raise ConfigError(
                    f"jump kernel index {idx} must lie in {{0}} or 1..{self.m}"
                )
            if not isinstance(kernel, JumpKernel):
                raise ConfigError(f"jump entry {idx} is not a JumpKernel")
            for alpha in kernel.moments:
                if len(alpha) != d:
                    raise ConfigError(
                        f"jump moment index {alpha} does not match dimension {d}"
                    )
            jumps[idx] = kernel
        object.__setattr__(self, "jumps", jumps)

    @property
    def d(self) -> int:
        return self.m + self.n

    @property
    def index_I(self) -> range:
        """Positional indices of the nonnegative coordinates."""
        return range(self.m)

    @property
    def index_J(self) -> range:
        """Positional indices of the unconstrained coordinates."""
        return range(self.m, self.d)

    @property
    def max_jump_degree(self) -> int | None:
        """Largest polynomial degree supported by every jump table (None = unbounded)."""
        if not self.jumps:
            return None
        return min(kernel.max_degree for kernel in self.jumps.values())

    def has_constant_part(self) -> bool:
        """True iff any of b, a or the index-0 jump kernel is present."""
        return bool(np.any(self.b != 0.0) or np.any(self.a != 0.0) or 0 in self.jumps)


def _is_psd(mat: np.ndarray) -> bool:
    scale = np.max(np.abs(mat)) if mat.size else 0.0
    if scale == 0.0:
        return True
    eigs = np.linalg.eigvalsh(mat)
    return bool(np.min(eigs) >= -PSD_TOL * scale)


def validate_admissibility(model: AffineModel) -> list[str]:
    """Structural admissibility check; empty list means admissible.

    Violations are returned as data (human-readable strings), never raised.
    """
    out: list[str] = []
    m, d = model.m, model.d
    I, J = model.index_I, model.index_J

    if m and np.any(model.b[: model.m] < 0.0):
        out.append("b_I must be >= 0")
    for k in I:
        for i in I:
            if k != i and model.B[k, i] < 0.0:
                out.append(f"B[{k + 1},{i + 1}] must be >= 0 (off-diagonal I block)")
    for k in I:
        for j in J:
            if model.B[k, j] != 0.0:
                out.append(f"B[{k + 1},{j + 1}] must vanish (I x J block)")

    if not np.allclose(model.a, model.a.T, rtol=0.0, atol=0.0):
        out.append("constant diffusion must be symmetric")
    elif not _is_psd(model.a):
        out.append("constant diffusion not PSD")
    if m and (np.any(model.a[list(I), :] != 0.0) or np.any(model.a[:, list(I)] != 0.0)):
        out.append("constant diffusion must vanish on I")

    for i, mat in enumerate(model.alpha):
        label = f"alpha_{i + 1}"
        if not np.allclose(mat, mat.T, rtol=0.0, atol=0.0):
            out.append(f"{label} must be symmetric")
            continue
        if not _is_psd(mat):
            out.append(f"{label} not PSD")
        block = {i, *J}
        for k in range(d):
            for h in range(d):
                if mat[k, h] != 0.0 and not (k in block and h in block):
                    out.append(f"{label} must vanish outside its {{{i + 1}}} u J block")
                    break
            else:
                continue
            break

    for idx, kernel in sorted(model.jumps.items()):
        label = f"jump kernel {idx}"
        missing = kernel.missing_indices(d)
        if missing:
            out.append(
                f"{label} moment table incomplete: missing {len(missing)} "
                f"indices up to order {kernel.max_degree} (first: {missing[0]})"
            )
        for alpha, value in sorted(kernel.moments.items()):
            pure_I = all(alpha[j] == 0 for j in J)
            if pure_I and value < 0.0:
                out.append(f"{label} moment for alpha={alpha} must be >= 0")
            elif mi_order(alpha) == 2 and max(alpha) == 2 and value < 0.0:
                out.append(f"{label} pure second moment for alpha={alpha} must be >= 0")
    return out


# -- configuration documents -------------------------------------------------

_TOP_KEYS = {"m", "n", "b", "B", "a", "alpha", "jumps"}
_JUMP_KEYS = {"index", "max_degree", "moments", "compensated"}
_MOMENT_KEYS = {"alpha", "value"}


def parse_model(doc: Mapping) -> AffineModel:
    """Build an AffineModel from a configuration mapping (schema check only).

    Admissibility is *not* enforced here; use load_model for that, or call
    validate_admissibility explicitly.
    """
    if not isinstance(doc, Mapping):
        raise ConfigError("model config must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("m", "n", "b", "B"):
        if key not in doc:
            raise ConfigError(f"missing config key {key!r}")
    try:
        m = int(doc["m"])
        n = int(doc["n"])
    except (TypeError, ValueError):
        raise ConfigError("m and n must be integers") from None
    d = m + n
    if d < 1:
        raise ConfigError(f"invalid state split m={m}, n={n}")

    a = doc.get("a", np.zeros((d, d)))
    alpha = doc.get("alpha", [np.zeros((d, d)) for _ in range(m)])
    if not isinstance(alpha, (list, tuple)):
        raise ConfigError("alpha must be an array of matrices")

    jumps: dict[int, JumpKernel] = {}
    for entry in doc.get("jumps", []):
        if not isinstance(entry, Mapping):
            raise ConfigError("each jumps entry must be an object")
        unknown = set(entry) - _JUMP_KEYS
        if unknown:
            raise ConfigError(f"unknown jump entry keys: {sorted(unknown)}")
        for key in ("index", "max_degree", "moments"):
            if key not in entry:
                raise ConfigError(f"jump entry missing key {key!r}")
        idx = int(entry["index"])
        if idx in jumps:
            raise ConfigError(f"duplicate jump kernel index {idx}")
        moments: dict[MultiIndex, float] = {}
        for item in entry["moments"]:
            if not isinstance(item, Mapping) or set(item) - _MOMENT_KEYS:
                raise ConfigError("each moment entry must be {alpha, value}")
            if "alpha" not in item or "value" not in item:
                raise ConfigError("each moment entry must be {alpha, value}")
            key = tuple(int(a_) for a_ in item["alpha"])
            if len(key) != d:
                raise ConfigError(
                    f"jump moment index {key} does not match dimension {d}"
                )
            if key in moments:
                raise ConfigError(f"duplicate jump moment index {key}")
            moments[key] = float(item["value"])
        jumps[idx] = JumpKernel(
            max_degree=int(entry["max_degree"]),
            moments=moments,
            compensated=bool(entry.get("compensated", False)),
        )

    return AffineModel(m=m, n=n, b=doc["b"], B=doc["B"], a=a, alpha=alpha, jumps=jumps)


def load_model(source) -> AffineModel:
    """Load a model from a path, a JSON string, or a mapping.

    Raises ConfigError on parse/schema problems and InadmissibleModel when
    the characteristics violate admissibility.
    """
    if isinstance(source, Mapping):
        doc = source
    else:
        text = None
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read model config: {exc}") from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    model = parse_model(doc)
    violations = validate_admissibility(model)
    if violations:
        raise InadmissibleModel("; ".join(violations))
    return model


def serialize_model(model: AffineModel) -> dict:
    """Canonical JSON-compatible form; load_model(serialize_model(m)) == m."""
    return {
        "m": model.m,
        "n": model.n,
        "b": model.b.tolist(),
        "B": model.B.tolist(),
        "a": model.a.tolist(),
        "alpha": [mat.tolist() for mat in model.alpha],
        "jumps": [
            {
                "index": idx,
                "max_degree": kernel.max_degree,
                "compensated": kernel.compensated,
                "moments": [
                    {"alpha": list(alpha), "value": value}
                    for alpha, value in sorted(kernel.moments.items())
                ],
            }
            for idx, kernel in sorted(model.jumps.items())
        ],
    }


def model_fingerprint(model: AffineModel) -> str:
    """Deterministic hex digest identifying the model's characteristics."""
    payload = json.dumps(serialize_model(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("ascii")).hexdigest()[:16]
