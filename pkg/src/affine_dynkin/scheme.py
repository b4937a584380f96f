"""Weak time stepping: operator schemes, Euler Monte Carlo and order audits.

The deterministic scheme is the truncated exponential Q_h = sum_{k<=nu}
(hG)^k / k! acting on test-function coefficients; composing it N times and
comparing against e^{TG} exposes the weak order directly, without
sampling noise.  The telescoping audit decomposes the global error into
propagated one-step errors exactly.  The Monte Carlo side is a
full-truncation Euler scheme driven by a counter-based generator with one
stream per path, so estimates do not depend on batch partitioning.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError, HashMismatch, UnsupportedOperation
from .generator import GeneratorMatrix, generator_matrix, _require_admissible
from .model import AffineModel
from .polyalg import MultiIndex, Polynomial
from .runtime import worker_count
from .semigroup import _as_point, exact_semigroup, transition_matrix

DETERMINISTIC = "deterministic_dynkin"
EULER_MC = "euler_mc"

# Errors below this are considered rounding noise and excluded from order fits.
ERROR_FLOOR = 1e-13

_MC_BATCH = 1 << 15
# Shift a 53-bit uniform off 0 so the inverse normal CDF stays finite.
_UNIFORM_SHIFT = 2.0**-54


@dataclass(frozen=True)
class SchemeConfig:
    """Run parameters for stepping schemes and convergence studies."""

    kind: str
    T: float
    x0: object
    nu: int | None = None
    steps: int | None = None
    h_grid: tuple[float, ...] | None = None
    paths: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in (DETERMINISTIC, EULER_MC):
            raise ConfigError(f"unknown scheme kind {self.kind!r}")
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise ConfigError(f"horizon T must be positive, got {self.T}")
        if self.steps is not None and self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.h_grid is not None:
            grid = tuple(float(h) for h in self.h_grid)
            if any(h <= 0.0 for h in grid):
                raise ConfigError("h_grid entries must be positive")
            object.__setattr__(self, "h_grid", grid)
        if self.kind == EULER_MC:
            if self.paths is None or self.paths < 1:
                raise ConfigError("euler_mc needs paths >= 1")
            if self.seed is None:
                raise ConfigError("euler_mc needs an explicit seed")
        if self.kind == DETERMINISTIC and self.nu is not None and self.nu < 0:
            raise ConfigError(f"nu must be >= 0, got {self.nu}")


# -- deterministic operator scheme ---------------------------------------------


@dataclass(frozen=True, eq=False)
class StepOperator:
    """One-step operator Q_h = sum_{k<=nu} (hG)^k / k! on the monomial basis."""

    dim: int
    N: int
    basis: tuple[MultiIndex, ...]
    entries: np.ndarray
    h: float
    nu: int
    model_hash: str

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def vector(self, f: Polynomial) -> np.ndarray:
        return f.coefficient_vector(self.basis)

    def polynomial(self, vec: np.ndarray) -> Polynomial:
        return Polynomial.from_coefficients(self.dim, self.basis, vec)


def step_operator(G: GeneratorMatrix, h: float, nu: int) -> StepOperator:
    """Truncated-exponential step; (Q_h - e^{hG}) f = O(h^{nu+1})."""
    if h <= 0.0 or not math.isfinite(h):
        raise ValueError(f"step size must be positive, got {h}")
    if nu < 0:
        raise ValueError(f"nu must be >= 0, got {nu}")
    n = G.dim_basis
    acc = np.eye(n)
    term = np.eye(n)
    for k in range(1, nu + 1):
        term = term @ (h * G.entries) / k
        acc = acc + term
    return StepOperator(
        dim=G.dim,
        N=G.N,
        basis=G.basis,
        entries=acc,
        h=float(h),
        nu=nu,
        model_hash=G.model_hash,
    )


def propagate(Q: StepOperator, N: int, f: Polynomial) -> Polynomial:
    """Q_h^N f by binary matrix powering."""
    if N < 1:
        raise ValueError(f"step count must be >= 1, got {N}")
    power = np.linalg.matrix_power(Q.entries, N)
    return Q.polynomial(power @ Q.vector(f))


@dataclass(frozen=True)
class TelescopingAudit:
    """Per-step propagated local errors and their exact sum."""

    per_step: tuple[float, ...]
    total: float
    direct: float


def telescoping_audit(
    G: GeneratorMatrix, Q: StepOperator, N: int, f: Polynomial, x0
) -> TelescopingAudit:
    """Decompose the global stepping error into one-step contributions.

    Step k contributes Q_h^{N-k} (e^{hG} - Q_h) e^{(k-1)hG} f evaluated at
    x0; the terms sum (exactly, up to rounding) to the direct difference
    e^{TG} f(x0) - Q_h^N f(x0) with T = N h.
    """
    if Q.model_hash != G.model_hash:
        raise HashMismatch("step operator and generator matrix differ in model")
    if N < 1:
        raise ValueError(f"step count must be >= 1, got {N}")
    point = _as_point(x0, G.dim)
    eval_vec = np.array([float(np.prod(point**np.array(a))) for a in G.basis])
    fvec = G.vector(f)
    E_h = transition_matrix(G, Q.h)

    q_pows = [np.eye(G.dim_basis)]
    for _ in range(N - 1):
        q_pows.append(q_pows[-1] @ Q.entries)

    per_step = []
    p_vec = fvec
    for k in range(1, N + 1):
        local = E_h @ p_vec - Q.entries @ p_vec
        per_step.append(float(eval_vec @ (q_pows[N - k] @ local)))
        p_vec = E_h @ p_vec
    total = float(sum(per_step))
    exact_val = float(eval_vec @ (transition_matrix(G, N * Q.h) @ fvec))
    scheme_val = float(eval_vec @ (q_pows[-1] @ (Q.entries @ fvec)))
    return TelescopingAudit(
        per_step=tuple(per_step), total=total, direct=exact_val - scheme_val
    )


# -- Euler Monte Carlo ----------------------------------------------------------


def _normal_block(seed: int, first_path: int, n_paths: int, steps: int, d: int):
    """Standard normals for paths [first_path, first_path + n_paths).

    Every path owns a fixed range of the Philox counter: draws are laid
    out path-major (then step, then coordinate) and padded to whole
    4-output counter blocks, so batch boundaries cannot change any draw.
    One counter value is consumed per normal: a 53-bit uniform nudged off
    zero, mapped through the inverse normal CDF.
    """
    per_path = steps * d
    stride = -(-per_path // 4) * 4  # Philox advances in blocks of 4 outputs
    bit = np.random.Philox(seed)
    if first_path:
        bit.advance(first_path * (stride // 4))
    uniforms = np.random.Generator(bit).random((n_paths, stride))
    uniforms = uniforms[:, :per_path].reshape(n_paths, steps, d)
    return ndtri(uniforms + _UNIFORM_SHIFT)


def _euler_trajectory(
    model: AffineModel, x0: np.ndarray, h: float, normals: np.ndarray
) -> Iterator[np.ndarray]:
    """Yield the state array after each full-truncation Euler step.

    Drift and diffusion coefficients are evaluated at the state with its
    first m coordinates clamped at zero; the state itself is not clamped.
    """
    n, steps, d = normals.shape
    m = model.m
    X = np.tile(x0, (n, 1))
    sqrt_h = math.sqrt(h)
    for step in range(steps):
        if m:
            Xc = X.copy()
            Xc[:, :m] = np.maximum(Xc[:, :m], 0.0)
        else:
            Xc = X
        drift = model.b + Xc @ model.B.T
        if d == 1:
            var = np.full(n, model.a[0, 0])
            if m:
                var = var + Xc[:, 0] * model.alpha[0][0, 0]
            incr = np.sqrt(np.maximum(var, 0.0) * h) * normals[:, step, 0]
            X = X + drift * h + incr[:, None]
        else:
            cov = np.tile(model.a, (n, 1, 1))
            for i in range(m):
                cov = cov + Xc[:, i, None, None] * model.alpha[i]
            eigvals, eigvecs = np.linalg.eigh(cov)
            eigvals = np.clip(eigvals, 0.0, None)
            root = (eigvecs * np.sqrt(eigvals)[:, None, :]) @ np.transpose(
                eigvecs, (0, 2, 1)
            )
            incr = np.einsum("nij,nj->ni", root, normals[:, step, :])
            X = X + drift * h + sqrt_h * incr
        yield X


def _mc_preflight(model: AffineModel, config: SchemeConfig) -> np.ndarray:
    if config.kind != EULER_MC:
        raise ConfigError(f"config kind {config.kind!r} is not {EULER_MC!r}")
    if model.jumps:
        raise UnsupportedOperation("Monte Carlo stepping unsupported with jump kernels")
    _require_admissible(model)
    if config.steps is None:
        raise ConfigError("euler_mc needs an explicit step count")
    x0 = _as_point(config.x0, model.d)
    if model.m and np.any(x0[: model.m] < 0.0):
        raise ConfigError("x0 must lie in D (nonnegative first m coordinates)")
    return x0


def _path_batches(paths: int) -> list[tuple[int, int]]:
    return [(first, min(_MC_BATCH, paths - first)) for first in range(0, paths, _MC_BATCH)]


def euler_mc(
    model: AffineModel, f: Polynomial, config: SchemeConfig
) -> tuple[float, float]:
    """Full-truncation Euler estimate of E^x0[f(X_T)] with its standard error.

    Deterministic given (seed, paths, steps): per-path Philox streams make
    the result independent of batching and worker count.
    """
    x0 = _mc_preflight(model, config)
    steps, paths, seed = config.steps, config.paths, config.seed
    h = config.T / steps
    d = model.d

    def run_batch(batch: tuple[int, int]) -> tuple[float, float]:
        first, count = batch
        normals = _normal_block(seed, first, count, steps, d)
        X = None
        for X in _euler_trajectory(model, x0, h, normals):
            pass
        vals = f.evaluate_array(X)
        return float(np.sum(vals)), float(np.sum(vals * vals))

    total = 0.0
    total_sq = 0.0
    batches = _path_batches(paths)
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        for s, s2 in pool.map(run_batch, batches):
            total += s
            total_sq += s2
    mean = total / paths
    if paths > 1:
        var = max(total_sq - paths * mean * mean, 0.0) / (paths - 1)
        stderr = math.sqrt(var / paths)
    else:
        stderr = 0.0
    return mean, stderr


@dataclass(frozen=True)
class MomentStabilityResult:
    """Outcome of the discrete moment-growth check."""

    passed: bool
    growth_constant: float
    worst_order: int
    worst_step: int

    def __bool__(self) -> bool:
        return self.passed


def moment_stability_check(
    model: AffineModel, config: SchemeConfig, alpha_max: int
) -> MomentStabilityResult:
    """Check empirical E|X_hat_{t_n}|^alpha stays under e^{KT}(|x0|^alpha + 1).

    The bound must hold for every step and every order alpha <= alpha_max,
    with a 5-standard-error allowance; the smallest workable K is reported
    and the check passes iff that K is finite (all moments finite).
    """
    if alpha_max < 1:
        raise ValueError(f"alpha_max must be >= 1, got {alpha_max}")
    x0 = _mc_preflight(model, config)
    steps, paths, seed = config.steps, config.paths, config.seed
    h = config.T / steps
    d = model.d

    def run_batch(batch: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        first, count = batch
        normals = _normal_block(seed, first, count, steps, d)
        sums = np.zeros((steps + 1, alpha_max))
        sq_sums = np.zeros((steps + 1, alpha_max))
        norms0 = np.full(count, float(np.linalg.norm(x0)))
        powers = norms0.copy()
        for a in range(alpha_max):
            sums[0, a] = np.sum(powers)
            sq_sums[0, a] = np.sum(powers * powers)
            powers = powers * norms0
        for step, X in enumerate(_euler_trajectory(model, x0, h, normals), start=1):
            norms = np.linalg.norm(X, axis=1)
            powers = norms.copy()
            for a in range(alpha_max):
                sums[step, a] += np.sum(powers)
                sq_sums[step, a] += np.sum(powers * powers)
                powers = powers * norms
        return sums, sq_sums

    sums = np.zeros((steps + 1, alpha_max))
    sq_sums = np.zeros((steps + 1, alpha_max))
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        for s, s2 in pool.map(run_batch, _path_batches(paths)):
            sums += s
            sq_sums += s2

    moments = sums / paths
    variances = np.maximum(sq_sums / paths - moments**2, 0.0)
    stderrs = np.sqrt(variances / paths)
    if not np.all(np.isfinite(moments)):
        return MomentStabilityResult(False, math.inf, 0, 0)

    base = np.array(
        [float(np.linalg.norm(x0)) ** a + 1.0 for a in range(1, alpha_max + 1)]
    )
    K = 0.0
    worst = (1, 0)
    for step in range(1, steps + 1):
        for a in range(alpha_max):
            rel = stderrs[step, a] / moments[step, a] if moments[step, a] > 0 else 0.0
            allowed = base[a] * (1.0 + 5.0 * rel)
            if moments[step, a] > allowed:
                need = math.log(moments[step, a] / allowed) / config.T
                if need > K:
                    K = need
                    worst = (a + 1, step)
    return MomentStabilityResult(
        passed=math.isfinite(K), growth_constant=K, worst_order=worst[0], worst_step=worst[1]
    )


# -- convergence studies ---------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    error: float
    stderr: float | None


@dataclass(frozen=True)
class ConvergenceReport:
    """(h, error) grid with the fitted order of a log-log least-squares line."""

    rows: tuple[ConvergenceRow, ...]
    fitted_order: float | None
    intercept: float | None
    residual_max: float | None
    exact: bool

    def summary(self) -> dict:
        return {
            "fitted_order": "exact" if self.exact else self.fitted_order,
            "intercept": self.intercept,
            "residual_max": self.residual_max,
        }


def _fit_order(rows: list[ConvergenceRow]) -> tuple[float | None, float | None, float | None, bool]:
    usable = [r for r in rows if r.error > 10.0 * ERROR_FLOOR]
    if not usable:
        return None, None, None, True
    if len(usable) < 2:
        return None, None, None, False
    log_h = np.log([r.h for r in usable])
    log_e = np.log([r.error for r in usable])
    slope, intercept = np.polyfit(log_h, log_e, 1)
    residuals = log_e - (slope * log_h + intercept)
    return float(slope), float(intercept), float(np.max(np.abs(residuals))), False


def default_reference_degree(model: AffineModel, f: Polynomial) -> int:
    """Degree of the reference basis: deg f plus headroom, capped by jumps."""
    degree = f.degree + 3
    cap = model.max_jump_degree
    if cap is not None:
        degree = min(degree, cap)
    return max(degree, f.degree)


def convergence_study(
    model: AffineModel,
    f: Polynomial,
    config: SchemeConfig,
    ref_degree: int | None = None,
) -> ConvergenceReport:
    """Errors against the exact semigroup over an h grid, with fitted order.

    The reference value is e^{TG} f at x0 on a basis of degree ref_degree
    (deg f + 3 by default).  Step counts are rounded to keep the partition
    uniform.  Requires at least 4 grid points spanning a factor >= 8.
    """
    if config.h_grid is None or len(config.h_grid) < 4:
        raise ConfigError("convergence study needs an h_grid with >= 4 points")
    if max(config.h_grid) / min(config.h_grid) < 8.0:
        raise ConfigError("h_grid must span at least a factor 8")
    if config.kind == DETERMINISTIC and config.nu is None:
        raise ConfigError("deterministic stepping needs an expansion order nu")

    if ref_degree is None:
        ref_degree = default_reference_degree(model, f)
    if ref_degree < f.degree:
        raise ConfigError(
            f"reference degree {ref_degree} is below deg f = {f.degree}"
        )
    G = generator_matrix(model, ref_degree)
    x0 = _as_point(config.x0, model.d)
    reference = exact_semigroup(G, f, config.T).evaluate(x0)

    rows = []
    for h in sorted(config.h_grid, reverse=True):
        steps = max(1, round(config.T / h))
        h_eff = config.T / steps
        if config.kind == DETERMINISTIC:
            Q = step_operator(G, h_eff, config.nu)
            value = propagate(Q, steps, f).evaluate(x0)
            stderr = None
        else:
            run = replace(config, steps=steps, h_grid=None)
            value, stderr = euler_mc(model, f, run)
        rows.append(ConvergenceRow(h=h_eff, error=abs(value - reference), stderr=stderr))

    order, intercept, residual_max, exact = _fit_order(rows)
    return ConvergenceReport(
        rows=tuple(rows),
        fitted_order=order,
        intercept=intercept,
        residual_max=residual_max,
        exact=exact,
    )
