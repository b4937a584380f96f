"""Sparse multivariate polynomial arithmetic.

A polynomial in d variables is stored as a dictionary mapping exponent
tuples (one nonnegative int per variable) to float coefficients:

    x1^2 * x2 + 3   ->   {(2, 1): 1.0, (0, 0): 3.0}

Zero coefficients are never stored; the zero polynomial is the empty map
and has degree 0 by convention.  Values are immutable after construction
and every operation returns a fresh polynomial, so they are safe to share
between threads.

Coordinates are labelled x1..xd in text form; exponent tuples are
positional (index 0 is x1).
"""

from __future__ import annotations

import math
import re
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, PolynomialParseError

MultiIndex = tuple[int, ...]


def mi_order(alpha: MultiIndex) -> int:
    """Total order |alpha| of a multi-index."""
    return sum(alpha)


def mi_add(alpha: MultiIndex, beta: MultiIndex) -> MultiIndex:
    return tuple(a + b for a, b in zip(alpha, beta))


def mi_factorial(alpha: MultiIndex) -> int:
    """alpha! = prod_i alpha_i!"""
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


def mi_binomial(alpha: MultiIndex, beta: MultiIndex) -> int:
    """Product of per-coordinate binomial coefficients C(alpha_i, beta_i)."""
    out = 1
    for a, b in zip(alpha, beta):
        out *= math.comb(a, b)
    return out


def _graded_key(alpha: MultiIndex) -> tuple:
    # Grade first, then lexicographic with x1 > x2 > ... inside a grade.
    return (sum(alpha), tuple(-a for a in alpha))


def _compositions(total: int, parts: int) -> Iterator[MultiIndex]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def monomial_basis(d: int, max_degree: int) -> list[MultiIndex]:
    """All multi-indices of order <= max_degree in graded-lex order.

    The list has C(d + max_degree, max_degree) entries and its order is the
    fixed basis layout used for all matrix representations.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if max_degree < 0:
        raise ValueError(f"max_degree must be >= 0, got {max_degree}")
    out: list[MultiIndex] = []
    for k in range(max_degree + 1):
        out.extend(_compositions(k, d))
    return out


def basis_positions(basis: Sequence[MultiIndex]) -> dict[MultiIndex, int]:
    """Map each basis multi-index to its position."""
    return {alpha: j for j, alpha in enumerate(basis)}


class Polynomial:
    """Immutable sparse polynomial over R^d with float coefficients."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Mapping[MultiIndex, float] | None = None):
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {dim}")
        clean: dict[MultiIndex, float] = {}
        if terms:
            for alpha, coeff in terms.items():
                alpha = tuple(int(a) for a in alpha)
                if len(alpha) != dim:
                    raise DimensionMismatch(
                        f"exponent tuple {alpha} does not match dimension {dim}"
                    )
                if any(a < 0 for a in alpha):
                    raise ValueError(f"negative exponent in {alpha}")
                c = float(coeff)
                if c != 0.0:
                    clean[alpha] = c
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "Polynomial":
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, value: float) -> "Polynomial":
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def variable(cls, dim: int, index: int) -> "Polynomial":
        """The coordinate polynomial x_{index+1} (positional index)."""
        if not 0 <= index < dim:
            raise ValueError(f"variable index {index} out of range for dim {dim}")
        alpha = [0] * dim
        alpha[index] = 1
        return cls(dim, {tuple(alpha): 1.0})

    @classmethod
    def monomial(cls, alpha: MultiIndex, coeff: float = 1.0) -> "Polynomial":
        return cls(len(alpha), {tuple(alpha): coeff})

    # -- structure ---------------------------------------------------------

    @property
    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(alpha) for alpha in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient_max(self) -> float:
        """Max-norm of the coefficient map (0 for the zero polynomial)."""
        if not self.terms:
            return 0.0
        return max(abs(c) for c in self.terms.values())

    def sorted_terms(self) -> list[tuple[MultiIndex, float]]:
        return sorted(self.terms.items(), key=lambda kv: _graded_key(kv[0]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    __hash__ = None

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "Polynomial") -> "Polynomial":
        if not isinstance(other, Polynomial):
            return NotImplemented
        if self.dim != other.dim:
            raise DimensionMismatch(f"dim {self.dim} != dim {other.dim}")
        out = dict(self.terms)
        for alpha, c in other.terms.items():
            out[alpha] = out.get(alpha, 0.0) + c
        return Polynomial(self.dim, out)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.dim, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, float)):
            return Polynomial(
                self.dim, {a: c * float(other) for a, c in self.terms.items()}
            )
        if not isinstance(other, Polynomial):
            return NotImplemented
        if self.dim != other.dim:
            raise DimensionMismatch(f"dim {self.dim} != dim {other.dim}")
        out: dict[MultiIndex, float] = {}
        for a1, c1 in self.terms.items():
            for a2, c2 in other.terms.items():
                key = mi_add(a1, a2)
                out[key] = out.get(key, 0.0) + c1 * c2
        return Polynomial(self.dim, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        out = Polynomial.constant(self.dim, 1.0)
        for _ in range(n):
            out = out * self
        return out

    def differentiate(self, alpha: MultiIndex) -> "Polynomial":
        """Mixed partial derivative of order alpha (exact)."""
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.dim:
            raise DimensionMismatch(
                f"derivative index {alpha} does not match dimension {self.dim}"
            )
        out: dict[MultiIndex, float] = {}
        for beta, c in self.terms.items():
            if any(b < a for a, b in zip(alpha, beta)):
                continue
            # Falling-factorial factor, computed as one exact integer.
            factor = 1
            for a, b in zip(alpha, beta):
                factor *= math.perm(b, a)
            key = tuple(b - a for a, b in zip(alpha, beta))
            out[key] = out.get(key, 0.0) + c * factor
        return Polynomial(self.dim, out)

    def evaluate(self, x: Sequence[float]) -> float:
        if len(x) != self.dim:
            raise DimensionMismatch(
                f"point of length {len(x)} does not match dimension {self.dim}"
            )
        xs = [float(v) for v in x]
        total = 0.0
        for alpha, c in self.sorted_terms():
            term = c
            for v, a in zip(xs, alpha):
                if a:
                    term *= v**a
            total += term
        return total

    def evaluate_array(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at many points at once; points has shape (n, dim)."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise DimensionMismatch(
                f"points of shape {pts.shape} do not match dimension {self.dim}"
            )
        if not self.terms:
            return np.zeros(pts.shape[0])
        max_exp = [0] * self.dim
        for alpha in self.terms:
            for i, a in enumerate(alpha):
                max_exp[i] = max(max_exp[i], a)
        powers = []
        for i in range(self.dim):
            col = np.ones((pts.shape[0], max_exp[i] + 1))
            for k in range(1, max_exp[i] + 1):
                col[:, k] = col[:, k - 1] * pts[:, i]
            powers.append(col)
        out = np.zeros(pts.shape[0])
        for alpha, c in self.sorted_terms():
            term = np.full(pts.shape[0], c)
            for i, a in enumerate(alpha):
                if a:
                    term = term * powers[i][:, a]
            out += term
        return out

    # -- basis coordinates ---------------------------------------------------

    def coefficient_vector(self, basis: Sequence[MultiIndex]) -> np.ndarray:
        pos = basis_positions(tuple(basis))
        vec = np.zeros(len(basis))
        for alpha, c in self.terms.items():
            if alpha not in pos:
                raise ValueError(f"term {alpha} lies outside the basis")
            vec[pos[alpha]] = c
        return vec

    @classmethod
    def from_coefficients(
        cls, dim: int, basis: Sequence[MultiIndex], vec: np.ndarray
    ) -> "Polynomial":
        return cls(dim, {alpha: float(v) for alpha, v in zip(basis, vec)})

    # -- text form -----------------------------------------------------------

    def render(self) -> str:
        return render_polynomial(self)

    def __repr__(self) -> str:
        return f"Polynomial({self.dim}, {self.render()!r})"


# -- module-level operation aliases ----------------------------------------


def add(p: Polynomial, q: Polynomial) -> Polynomial:
    return p + q


def multiply(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def differentiate(p: Polynomial, alpha: MultiIndex) -> Polynomial:
    return p.differentiate(alpha)


def evaluate(p: Polynomial, x: Sequence[float]) -> float:
    return p.evaluate(x)


# -- rendering and parsing ---------------------------------------------------


def _render_monomial(alpha: MultiIndex) -> str:
    parts = []
    for i, a in enumerate(alpha):
        if a == 1:
            parts.append(f"x{i + 1}")
        elif a > 1:
            parts.append(f"x{i + 1}^{a}")
    return " ".join(parts)


def render_monomial(alpha: MultiIndex) -> str:
    """Monomial label for headers and reports ("1" for the constant)."""
    return _render_monomial(alpha) or "1"


def render_polynomial(p: Polynomial) -> str:
    """Render as "c * x1^a1 x2^a2 ..." terms, highest grade first."""
    if not p.terms:
        return "0"
    pieces = []
    for alpha, c in reversed(p.sorted_terms()):
        mono = _render_monomial(alpha)
        body = f"{abs(c):.17g}" + (f" * {mono}" if mono else "")
        if not pieces:
            pieces.append(("-" if c < 0 else "") + body)
        else:
            pieces.append(("- " if c < 0 else "+ ") + body)
    return " ".join(pieces)


_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_VARIABLE = re.compile(r"x(\d*)(?:\^(-?\d+))?")


def parse_polynomial(text: str, dim: int) -> Polynomial:
    """Parse the CLI polynomial grammar, e.g. "2.5*x1^3*x2 - x1 + 1".

    Whitespace-insensitive.  A bare "x" is accepted as an alias for "x1".
    """
    s = re.sub(r"\s+", "", text)
    if not s:
        raise PolynomialParseError("empty polynomial string")
    terms: dict[MultiIndex, float] = {}
    pos = 0
    while pos < len(s):
        sign = 1.0
        while pos < len(s) and s[pos] in "+-":
            if s[pos] == "-":
                sign = -sign
            pos += 1
        if pos >= len(s):
            raise PolynomialParseError(f"dangling sign in {text!r}")
        coeff = sign
        got_number = False
        match = _NUMBER.match(s, pos)
        if match:
            coeff *= float(match.group(0))
            pos = match.end()
            got_number = True
        alpha = [0] * dim
        got_var = False
        while pos < len(s):
            if s[pos] == "*":
                if not (got_number or got_var):
                    break
                pos += 1
                continue
            match = _VARIABLE.match(s, pos)
            if not match:
                break
            idx = int(match.group(1)) if match.group(1) else 1
            if not 1 <= idx <= dim:
                raise PolynomialParseError(
                    f"coordinate x{idx} out of range for dimension {dim}"
                )
            exp = int(match.group(2)) if match.group(2) else 1
            if exp < 0:
                raise PolynomialParseError(f"negative exponent in {text!r}")
            alpha[idx - 1] += exp
            pos = match.end()
            got_var = True
        if not (got_number or got_var):
            raise PolynomialParseError(f"unparsable input near {s[pos:]!r}")
        key = tuple(alpha)
        terms[key] = terms.get(key, 0.0) + coeff
    return Polynomial(dim, terms)
