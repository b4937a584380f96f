"""Application of the extended generator to polynomials, exactly.

For an admissible model the generator acts on a smooth f as

    A f(x) = <b + B x, grad f> + 1/2 Tr((a + sum_i x_i alpha_i) D^2 f)
             + sum_i (x_i or 1) * sum_{|g| >= 2} m_{i,g} d^g f / g!

where the jump integrals reduce to finitely many moments m_{i,g} on
polynomial test functions, so no quadrature is involved.  Uncompensated
first-order jump moments are folded into the drift.  On polynomials of
degree <= N the generator restricts to a square matrix in the graded-lex
monomial basis, which is what the exact semigroup exponentiates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DegreeOverflow, DimensionMismatch, InadmissibleModel
from .model import AffineModel, JumpKernel, model_fingerprint, validate_admissibility
from .polyalg import (
    MultiIndex,
    Polynomial,
    basis_positions,
    mi_factorial,
    mi_order,
    monomial_basis,
    render_monomial,
)

MAX_CUMULANT_ORDER = 16


def _require_admissible(model: AffineModel) -> None:
    violations = validate_admissibility(model)
    if violations:
        raise InadmissibleModel("; ".join(violations))


def _require_degree(model: AffineModel, degree: int) -> None:
    cap = model.max_jump_degree
    if cap is not None and degree > cap:
        raise DegreeOverflow(
            f"degree {degree} exceeds the jump moment tables (N_max = {cap})"
        )


def _unit(d: int, k: int) -> MultiIndex:
    alpha = [0] * d
    alpha[k] = 1
    return tuple(alpha)


def _pair(d: int, k: int, h: int) -> MultiIndex:
    alpha = [0] * d
    alpha[k] += 1
    alpha[h] += 1
    return tuple(alpha)


def _jump_taylor(kernel: JumpKernel, f: Polynomial) -> Polynomial:
    """sum over 2 <= |g| <= deg f of m_g * d^g f / g! (first order excluded)."""
    d = f.dim
    out = Polynomial.zero(d)
    for gamma in monomial_basis(d, min(f.degree, kernel.max_degree)):
        if mi_order(gamma) < 2:
            continue
        m = kernel.moment(gamma)
        if m == 0.0:
            continue
        out = out + f.differentiate(gamma) * (m / mi_factorial(gamma))
    return out


def _effective_drift_column(model: AffineModel, i: int) -> np.ndarray:
    """Drift loading of slice i, with uncompensated jump means folded in."""
    d = model.d
    vec = np.array(model.b if i == 0 else model.B[:, i - 1], dtype=np.float64)
    kernel = model.jumps.get(i)
    if kernel is not None and not kernel.compensated:
        vec = vec + np.array([kernel.moment(_unit(d, k)) for k in range(d)])
    return vec


def _apply_unchecked(model: AffineModel, f: Polynomial) -> Polynomial:
    d = model.d
    out = Polynomial.zero(d)

    grad = [f.differentiate(_unit(d, k)) for k in range(d)]
    b_eff = _effective_drift_column(model, 0)
    drift_cols = [_effective_drift_column(model, i) for i in range(1, d + 1)]
    for k in range(d):
        if grad[k].is_zero():
            continue
        if b_eff[k] != 0.0:
            out = out + grad[k] * b_eff[k]
        for l in range(d):
            coeff = drift_cols[l][k]
            if coeff != 0.0:
                out = out + Polynomial.variable(d, l) * grad[k] * coeff

    for k in range(d):
        for h in range(d):
            second = None
            if model.a[k, h] != 0.0:
                second = f.differentiate(_pair(d, k, h))
                out = out + second * (0.5 * model.a[k, h])
            for i, mat in enumerate(model.alpha):
                if mat[k, h] != 0.0:
                    if second is None:
                        second = f.differentiate(_pair(d, k, h))
                    out = out + Polynomial.variable(d, i) * second * (0.5 * mat[k, h])

    for idx, kernel in sorted(model.jumps.items()):
        jump = _jump_taylor(kernel, f)
        if jump.is_zero():
            continue
        if idx == 0:
            out = out + jump
        else:
            out = out + Polynomial.variable(d, idx - 1) * jump
    return out


def apply_generator(model: AffineModel, f: Polynomial) -> Polynomial:
    """Apply the extended generator to a polynomial test function."""
    if f.dim != model.d:
        raise DimensionMismatch(f"polynomial dim {f.dim} != model dim {model.d}")
    _require_admissible(model)
    _require_degree(model, f.degree)
    return _apply_unchecked(model, f)


def apply_generator_slice(model: AffineModel, i: int, f: Polynomial) -> Polynomial:
    """The Levy-type slice i of the generator, without the x_i factor.

    Slice 0 collects the state-independent characteristics; slice i in
    1..d the loadings of coordinate x_i, so that

        apply_generator(f) = slice_0(f) + sum_i x_i * slice_i(f).
    """
    d = model.d
    if f.dim != d:
        raise DimensionMismatch(f"polynomial dim {f.dim} != model dim {model.d}")
    if not 0 <= i <= d:
        raise ValueError(f"slice index {i} out of range 0..{d}")
    _require_admissible(model)
    _require_degree(model, f.degree)

    out = Polynomial.zero(d)
    drift = _effective_drift_column(model, i)
    for k in range(d):
        if drift[k] != 0.0:
            out = out + f.differentiate(_unit(d, k)) * drift[k]
    diff = None
    if i == 0:
        diff = model.a
    elif i <= model.m:
        diff = model.alpha[i - 1]
    if diff is not None:
        for k in range(d):
            for h in range(d):
                if diff[k, h] != 0.0:
                    out = out + f.differentiate(_pair(d, k, h)) * (0.5 * diff[k, h])
    kernel = model.jumps.get(i)
    if kernel is not None:
        out = out + _jump_taylor(kernel, f)
    return out


def generator_power(model: AffineModel, f: Polynomial, k: int) -> Polynomial:
    """A^k f by repeated application; A^0 f = f."""
    if k < 0:
        raise ValueError(f"power must be >= 0, got {k}")
    if f.dim != model.d:
        raise DimensionMismatch(f"polynomial dim {f.dim} != model dim {model.d}")
    _require_admissible(model)
    _require_degree(model, f.degree)
    out = f
    for _ in range(k):
        out = _apply_unchecked(model, out)
    return out


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Matrix of the generator on polynomials of degree <= N.

    Column j holds the coefficient vector of A applied to the j-th basis
    monomial; the basis is graded-lex, so layouts are reproducible.
    """

    dim: int
    N: int
    basis: tuple[MultiIndex, ...]
    entries: np.ndarray
    model_hash: str
    constant_free: bool

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_expm_cache", {})

    @property
    def dim_basis(self) -> int:
        return len(self.basis)

    def positions(self) -> dict[MultiIndex, int]:
        return basis_positions(self.basis)

    def vector(self, f: Polynomial) -> np.ndarray:
        if f.dim != self.dim:
            raise DimensionMismatch(f"polynomial dim {f.dim} != basis dim {self.dim}")
        if f.degree > self.N:
            raise DegreeOverflow(
                f"degree {f.degree} exceeds the basis degree N = {self.N}"
            )
        return f.coefficient_vector(self.basis)

    def polynomial(self, vec: np.ndarray) -> Polynomial:
        return Polynomial.from_coefficients(self.dim, self.basis, vec)

    def to_csv(self, path) -> None:
        """Row-major dump with the rendered basis monomials as header."""
        header = ",".join(render_monomial(alpha) for alpha in self.basis)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(header + "\n")
            for row in self.entries:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def generator_matrix(model: AffineModel, N: int) -> GeneratorMatrix:
    """Assemble the generator matrix on the degree <= N basis."""
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    _require_admissible(model)
    _require_degree(model, N)
    d = model.d
    basis = tuple(monomial_basis(d, N))
    pos = basis_positions(basis)
    entries = np.zeros((len(basis), len(basis)))
    for j, alpha in enumerate(basis):
        image = _apply_unchecked(model, Polynomial.monomial(alpha))
        for beta, coeff in image.terms.items():
            if beta not in pos:
                raise AssertionError(
                    f"generator image of {alpha} left the degree-{N} basis at {beta}"
                )
            entries[pos[beta], j] = coeff
    return GeneratorMatrix(
        dim=d,
        N=N,
        basis=basis,
        entries=entries,
        model_hash=model_fingerprint(model),
        constant_free=not model.has_constant_part(),
    )


# -- cumulants ----------------------------------------------------------------


@dataclass(frozen=True)
class CumulantTable:
    """Cumulants kappa_alpha for 1 <= |alpha| <= max_order."""

    d: int
    max_order: int
    values: Mapping[MultiIndex, float]

    def __post_init__(self):
        object.__setattr__(
            self, "values", {tuple(k): float(v) for k, v in self.values.items()}
        )

    def cumulant(self, alpha: MultiIndex) -> float:
        return self.values.get(tuple(alpha), 0.0)


def _first_active(alpha: MultiIndex) -> int:
    for j, a in enumerate(alpha):
        if a > 0:
            return j
    raise ValueError("multi-index of order 0 has no active coordinate")


def _split_binomials(alpha_prime: MultiIndex):
    """All beta <= alpha_prime with the product-binomial weight C(alpha', beta)."""
    ranges = [range(a + 1) for a in alpha_prime]
    for beta in itertools.product(*ranges):
        weight = 1
        for a, b_ in zip(alpha_prime, beta):
            weight *= math.comb(a, b_)
        yield tuple(beta), weight


def moments_to_cumulants(moments, max_order: int | None = None) -> CumulantTable:
    """Cumulants from raw moments via the log of the moment series.

    `moments` is either a mapping multi-index -> moment (must contain the
    order-0 entry 1) or a MomentTable-like object exposing d, max_order and
    values.  Writing M(u) = sum m_a u^a / a! and K = log M, the recursion

        kappa_a = m_a - sum_{b < a'} C(a', b) kappa_{b+e_j} m_{a'-b},
        a' = a - e_j,

    is evaluated in graded order, with exact integer binomial weights.
    """
    if isinstance(moments, Mapping):
        values = {tuple(k): float(v) for k, v in moments.items()}
        if not values:
            raise ValueError("empty moment table")
        d = len(next(iter(values)))
        if max_order is None:
            max_order = max(mi_order(a) for a in values)
    else:
        values = {tuple(k): float(v) for k, v in moments.values.items()}
        d = moments.d
        if max_order is None:
            max_order = moments.max_order
    if max_order > MAX_CUMULANT_ORDER:
        raise ValueError(
            f"max_order {max_order} exceeds the supported cap {MAX_CUMULANT_ORDER}"
        )
    zero = (0,) * d
    if abs(values.get(zero, 0.0) - 1.0) > 1e-12:
        raise ValueError("moment table must be normalized with order-0 moment 1")
    values[zero] = 1.0

    kappa: dict[MultiIndex, float] = {}
    for alpha in monomial_basis(d, max_order):
        if mi_order(alpha) == 0:
            continue
        if alpha not in values:
            raise ValueError(f"missing moment entry for {alpha}")
        j = _first_active(alpha)
        alpha_prime = tuple(a - (1 if idx == j else 0) for idx, a in enumerate(alpha))
        total = values[alpha]
        for beta, weight in _split_binomials(alpha_prime):
            if beta == alpha_prime:
                continue
            kappa_idx = tuple(
                b + (1 if idx == j else 0) for idx, b in enumerate(beta)
            )
            rest = tuple(a - b_ for a, b_ in zip(alpha_prime, beta))
            total -= weight * kappa[kappa_idx] * values[rest]
        kappa[alpha] = total
    return CumulantTable(d=d, max_order=max_order, values=kappa)


def cumulants_to_moments(cumulants: CumulantTable) -> dict[MultiIndex, float]:
    """Inverse of moments_to_cumulants (same recursion, solved forward)."""
    d = cumulants.d
    values: dict[MultiIndex, float] = {(0,) * d: 1.0}
    for alpha in monomial_basis(d, cumulants.max_order):
        if mi_order(alpha) == 0:
            continue
        j = _first_active(alpha)
        alpha_prime = tuple(a - (1 if idx == j else 0) for idx, a in enumerate(alpha))
        total = 0.0
        for beta, weight in _split_binomials(alpha_prime):
            kappa_idx = tuple(
                b + (1 if idx == j else 0) for idx, b in enumerate(beta)
            )
            rest = tuple(a - b_ for a, b_ in zip(alpha_prime, beta))
            total += weight * cumulants.cumulant(kappa_idx) * values[rest]
        values[alpha] = total
    return values


def levy_generator_apply(cumulants: CumulantTable, f: Polynomial) -> Polynomial:
    """Generator of a Levy process acting on a polynomial.

    L f(y) = sum over 1 <= |a| <= deg f of kappa_a * d^a f(y) / a!, which is
    exact on polynomials; the degree drops by at least one.
    """
    if f.dim != cumulants.d:
        raise DimensionMismatch(
            f"polynomial dim {f.dim} != cumulant dim {cumulants.d}"
        )
    if f.degree > cumulants.max_order:
        raise DegreeOverflow(
            f"cumulant table of order {cumulants.max_order} cannot drive "
            f"a degree-{f.degree} polynomial"
        )
    out = Polynomial.zero(f.dim)
    for alpha in monomial_basis(f.dim, f.degree):
        if mi_order(alpha) == 0:
            continue
        k = cumulants.cumulant(alpha)
        if k == 0.0:
            continue
        out = out + f.differentiate(alpha) * (k / mi_factorial(alpha))
    return out
