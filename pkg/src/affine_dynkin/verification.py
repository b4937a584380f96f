"""Operator-identity sweeps behind the `verify` command.

Each check produces one row (identity, model, param, deviation, tolerance,
pass); a suite is a fixed grid of checks over test functions, times and
points.  Suites:

  identities  - commutation A P_t = P_t A, the semigroup law, and the
                Richardson ratio of the time derivative against A P_t f.
  derivatives - Levy-decomposition checks: the space-derivative
                representation and the moment-level convolution identity
                (zero constant characteristics required).
  bounds      - Gronwall growth of the weight function under the exact
                semigroup, and remainder-vs-envelope comparisons.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedOperation
from .generator import GeneratorMatrix, generator_matrix
from .model import AffineModel
from .polyalg import Polynomial, mi_order, monomial_basis, render_monomial
from .runtime import worker_count
from .semigroup import (
    BoundCertificate,
    convolution_identity_check,
    derivative_representation,
    dynkin_expand,
    exact_semigroup,
    growth_constant,
    remainder,
    remainder_bound,
    transition_matrix,
    weight_norm,
)

SUITES = ("identities", "derivatives", "bounds", "all")

COMMUTATION_TOL = 1e-10
SEMIGROUP_LAW_TOL = 1e-11
KOLMOGOROV_RATIO_TOL = 0.8
DERIVATIVE_TOL = 1e-8
CONVOLUTION_TOL = 1e-9
GRONWALL_TOL = 1e-9

_T_GRID = (0.1, 1.0, 2.0)
_LAW_S_GRID = (0.1, 0.7)
_DERIV_T_GRID = (0.1, 0.5, 1.0)
_CONV_T_GRID = (0.25, 1.0)
_CONV_XY = ((1.0, 2.0), (0.5, 0.5))
_GRONWALL_T_GRID = (0.5, 1.0)
_GRONWALL_X_GRID = (0.5, 1.0, 2.0)
_REMAINDER_T_GRID = tuple(0.4 * 2.0**-j for j in range(7))

_FLOOR = 1e-12


@dataclass(frozen=True)
class IdentityRow:
    identity: str
    model: str
    param: str
    deviation: float
    tolerance: float
    passed: bool


def _row(identity, model_name, param, deviation, tolerance) -> IdentityRow:
    return IdentityRow(
        identity=identity,
        model=model_name,
        param=param,
        deviation=float(deviation),
        tolerance=float(tolerance),
        passed=bool(deviation <= tolerance),
    )


def _test_functions(d: int, max_degree: int) -> list[Polynomial]:
    return [
        Polynomial.monomial(alpha)
        for alpha in monomial_basis(d, max_degree)
        if mi_order(alpha) > 0
    ]


def _rel(dev: float, scale: float) -> float:
    return dev / scale if scale > 0.0 else dev


def _suite_degree(model: AffineModel) -> int:
    cap = model.max_jump_degree
    return 4 if cap is None else min(4, cap)


def suite_identities(model: AffineModel, name: str, G: GeneratorMatrix) -> list[IdentityRow]:
    rows: list[IdentityRow] = []
    funcs = _test_functions(model.d, G.N)
    for f in funcs:
        label = f"f={render_monomial(next(iter(f.terms)))}"
        vec = G.vector(f)
        for t in _T_GRID:
            E = transition_matrix(G, t)
            left = G.entries @ (E @ vec)
            right = E @ (G.entries @ vec)
            scale = max(np.max(np.abs(left)), np.max(np.abs(right)))
            rows.append(
                _row(
                    "commutation",
                    name,
                    f"{label};t={t:g}",
                    _rel(float(np.max(np.abs(left - right))), scale),
                    COMMUTATION_TOL,
                )
            )
        for s in _LAW_S_GRID:
            for t in _T_GRID:
                whole = transition_matrix(G, s + t) @ vec
                split = transition_matrix(G, s) @ (transition_matrix(G, t) @ vec)
                scale = max(np.max(np.abs(whole)), np.max(np.abs(split)))
                rows.append(
                    _row(
                        "semigroup_law",
                        name,
                        f"{label};s={s:g};t={t:g}",
                        _rel(float(np.max(np.abs(whole - split))), scale),
                        SEMIGROUP_LAW_TOL,
                    )
                )
        # Central finite difference of t -> e^{tG} f should converge at
        # second order to e^{tG} G f: halving delta divides the error by 4.
        t, delta = 1.0, 1e-3
        target = transition_matrix(G, t) @ (G.entries @ vec)

        def fd_error(dl: float) -> float:
            fd = (transition_matrix(G, t + dl) @ vec - transition_matrix(G, t - dl) @ vec) / (
                2.0 * dl
            )
            return float(np.max(np.abs(fd - target)))

        err, err_half = fd_error(delta), fd_error(delta / 2.0)
        scale = max(1.0, float(np.max(np.abs(target))))
        if err_half <= _FLOOR * scale:
            deviation = 0.0
        else:
            deviation = abs(err / err_half - 4.0)
        rows.append(
            _row(
                "kolmogorov_fd_ratio",
                name,
                f"{label};t={t:g};delta={delta:g}",
                deviation,
                KOLMOGOROV_RATIO_TOL,
            )
        )
    return rows


def suite_derivatives(model: AffineModel, name: str, G: GeneratorMatrix) -> list[IdentityRow]:
    if model.has_constant_part():
        raise UnsupportedOperation(
            "derivatives suite requires zero constant characteristics"
        )
    rows: list[IdentityRow] = []
    funcs = _test_functions(model.d, G.N)
    for f in funcs:
        label = f"f={render_monomial(next(iter(f.terms)))}"
        for i in range(1, model.d + 1):
            for t in _DERIV_T_GRID:
                rep = derivative_representation(model, G, f, t, i)
                alpha = [0] * model.d
                alpha[i - 1] = 1
                direct = exact_semigroup(G, f, t).differentiate(tuple(alpha))
                diff = rep - direct
                scale = max(rep.coefficient_max(), direct.coefficient_max())
                rows.append(
                    _row(
                        "derivative_representation",
                        name,
                        f"{label};i={i};t={t:g}",
                        _rel(diff.coefficient_max(), scale),
                        DERIVATIVE_TOL,
                    )
                )
    for t in _CONV_T_GRID:
        for x, y in _CONV_XY:
            deviation = convolution_identity_check(G, t, min(4, G.N), x, y)
            rows.append(
                _row(
                    "convolution_identity",
                    name,
                    f"k={min(4, G.N)};t={t:g};x={x:g};y={y:g}",
                    deviation,
                    CONVOLUTION_TOL,
                )
            )
    return rows


def suite_bounds(model: AffineModel, name: str, G: GeneratorMatrix) -> list[IdentityRow]:
    rows: list[IdentityRow] = []
    etas = [eta for eta in (1, 2) if 2 * eta <= G.N]
    certs: dict[int, BoundCertificate] = {
        eta: growth_constant(model, eta) for eta in etas
    }
    for eta, cert in certs.items():
        for t in _GRONWALL_T_GRID:
            for point in _gronwall_points(model.d):
                F = cert.weight
                lhs = exact_semigroup(G, F, t).evaluate(point)
                rhs = np.exp(cert.K * t) * F.evaluate(point)
                rows.append(
                    _row(
                        "gronwall_growth",
                        name,
                        f"eta={eta};t={t:g};x={_fmt_point(point)}",
                        max(0.0, lhs - rhs),
                        GRONWALL_TOL,
                    )
                )
    if 1 in certs and G.N >= 2:
        f = _bounds_test_function(model.d)
        cert = certs[1]
        f_norm = weight_norm(f, 1, model.m)
        for nu in (1, 2):
            expansion = dynkin_expand(model, f, nu)
            for t in _REMAINDER_T_GRID:
                rem = abs(remainder(G, expansion, t, 1.0))
                env = remainder_bound(cert, f_norm, nu, t, 1.0)
                rows.append(
                    _row(
                        "remainder_bound",
                        name,
                        f"nu={nu};t={t:g}",
                        max(0.0, rem - env),
                        0.0,
                    )
                )
    return rows


def _bounds_test_function(d: int) -> Polynomial:
    f = Polynomial.zero(d)
    for i in range(d):
        x = Polynomial.variable(d, i)
        f = f + x * x + x
    return f


def _gronwall_points(d: int) -> list[np.ndarray]:
    return [np.array(p) for p in itertools.product(_GRONWALL_X_GRID, repeat=d)]


def _fmt_point(point: np.ndarray) -> str:
    return "|".join(f"{v:g}" for v in point)


def run_suite(model: AffineModel, name: str, suite: str) -> list[IdentityRow]:
    """Run one suite (or all of them) and return its rows in fixed order."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    G = generator_matrix(model, _suite_degree(model))
    parts = ("identities", "derivatives", "bounds") if suite == "all" else (suite,)
    builders = {
        "identities": suite_identities,
        "derivatives": suite_derivatives,
        "bounds": suite_bounds,
    }
    tasks = [(builders[part], part) for part in parts]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        chunks = list(pool.map(lambda item: item[0](model, name, G), tasks))
    rows: list[IdentityRow] = []
    for chunk in chunks:
        rows.extend(chunk)
    return rows
