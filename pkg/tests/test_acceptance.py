"""Acceptance suite: one test per criterion, at the stated tolerances.

Run `pytest tests/test_acceptance.py -v -s` to get one PASS/FAIL line per
criterion.  Criteria 1-7 are deterministic linear algebra and finish in
seconds; criterion 8 runs the full-size Monte Carlo workloads.
"""

import itertools
import json
import math
import time

import numpy as np

from affine_dynkin.cli import main
from affine_dynkin.generator import generator_matrix
from affine_dynkin.polyalg import Polynomial, monomial_basis, parse_polynomial
from affine_dynkin.scheme import (
    DETERMINISTIC,
    EULER_MC,
    SchemeConfig,
    convergence_study,
    euler_mc,
    moment_stability_check,
)
from affine_dynkin.semigroup import (
    convolution_identity_check,
    derivative_representation,
    dynkin_expand,
    exact_semigroup,
    gronwall_check,
    growth_constant,
    remainder,
    remainder_bound,
    transition_matrix,
    weight_norm,
)

from conftest import CIR_DOC, LINEAR_CIR_DOC


def P(text, dim=1):
    return parse_polynomial(text, dim)


def _report(num: int, desc: str, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"[criterion {num}] {status}: {desc} -- {detail}")
    assert passed, f"criterion {num} ({desc}): {detail}"


H_GRID = (1 / 8, 1 / 16, 1 / 32, 1 / 64, 1 / 128)
T_SHORT = tuple(0.4 * 2.0**-j for j in range(7))


def test_criterion_1_global_weak_order(cir):
    f = P("x^3 + x")
    started = time.perf_counter()
    orders = {}
    for nu in (1, 2):
        config = SchemeConfig(kind=DETERMINISTIC, T=1.0, x0=1.0, nu=nu, h_grid=H_GRID)
        orders[nu] = convergence_study(cir, f, config, ref_degree=6).fitted_order
    elapsed = time.perf_counter() - started
    ok = (
        abs(orders[1] - 1.0) <= 0.10
        and abs(orders[2] - 2.0) <= 0.15
        and elapsed < 1.0
    )
    _report(
        1,
        "global weak order on CIR",
        ok,
        f"fitted nu=1: {orders[1]:.4f}, nu=2: {orders[2]:.4f}, {elapsed:.3f}s",
    )


def test_criterion_2_local_remainder_order(cir):
    f = P("x^2")
    started = time.perf_counter()
    G = generator_matrix(cir, 2)
    cert = growth_constant(cir, 1)
    f_norm = weight_norm(f, 1, cir.m)
    worst_ratio = 0.0
    bounded = True
    for nu in (1, 2):
        expansion = dynkin_expand(cir, f, nu)
        scaled = []
        for t in T_SHORT:
            rem = abs(remainder(G, expansion, t, 1.0))
            scaled.append(rem / t ** (nu + 1))
            if rem > remainder_bound(cert, f_norm, nu, t, 1.0):
                bounded = False
        worst_ratio = max(worst_ratio, max(scaled) / min(scaled))
    elapsed = time.perf_counter() - started
    ok = worst_ratio <= 4.0 and bounded and elapsed < 1.0
    _report(
        2,
        "local remainder order and envelope",
        ok,
        f"max/min of |R|/t^(nu+1): {worst_ratio:.3f}, bounded: {bounded}, {elapsed:.3f}s",
    )


def test_criterion_3_operator_identities(cir, ou, affine2d):
    worst_comm = 0.0
    worst_law = 0.0
    for model in (cir, ou, affine2d):
        G = generator_matrix(model, 4)
        for alpha in monomial_basis(model.d, 4):
            vec = G.vector(Polynomial.monomial(alpha))
            for t in (0.1, 1.0, 2.0):
                E = transition_matrix(G, t)
                left = G.entries @ (E @ vec)
                right = E @ (G.entries @ vec)
                scale = max(np.max(np.abs(left)), np.max(np.abs(right)), 1e-300)
                worst_comm = max(worst_comm, np.max(np.abs(left - right)) / max(scale, 1.0))
                for s in (0.1, 0.7):
                    whole = transition_matrix(G, s + t) @ vec
                    split = transition_matrix(G, s) @ (transition_matrix(G, t) @ vec)
                    scale = max(np.max(np.abs(whole)), 1e-300)
                    worst_law = max(
                        worst_law, np.max(np.abs(whole - split)) / max(scale, 1.0)
                    )
    ok = worst_comm <= 1e-10 and worst_law <= 1e-11
    _report(
        3,
        "commutation and semigroup law",
        ok,
        f"worst commutation {worst_comm:.2e} (<=1e-10), worst law {worst_law:.2e} (<=1e-11)",
    )


def test_criterion_4_kolmogorov_richardson(cir, ou, affine2d):
    ratios = []
    cases = ((cir, "x^3 + x"), (ou, "x^3 + x"), (affine2d, "x1^2 x2 + x1"))
    for model, text in cases:
        G = generator_matrix(model, 4)
        vec = G.vector(P(text, model.d))
        target = transition_matrix(G, 1.0) @ (G.entries @ vec)

        def fd_err(delta):
            fd = (
                transition_matrix(G, 1.0 + delta) @ vec
                - transition_matrix(G, 1.0 - delta) @ vec
            ) / (2.0 * delta)
            return np.max(np.abs(fd - target))

        ratios.append(fd_err(1e-3) / fd_err(5e-4))
    ok = all(abs(r - 4.0) <= 0.8 for r in ratios)
    _report(
        4,
        "Kolmogorov equation Richardson ratio",
        ok,
        "ratios " + ", ".join(f"{r:.3f}" for r in ratios) + " (4 +/- 0.8)",
    )


def test_criterion_5_derivative_representation(linear_cir, linear2d):
    started = time.perf_counter()
    worst = 0.0
    for model in (linear_cir, linear2d):
        G = generator_matrix(model, 4)
        for alpha in monomial_basis(model.d, 4):
            f = Polynomial.monomial(alpha)
            for i in range(1, model.d + 1):
                for t in (0.1, 0.5, 1.0):
                    rep = derivative_representation(model, G, f, t, i)
                    unit = [0] * model.d
                    unit[i - 1] = 1
                    direct = exact_semigroup(G, f, t).differentiate(tuple(unit))
                    scale = max(rep.coefficient_max(), direct.coefficient_max(), 1e-300)
                    worst = max(worst, (rep - direct).coefficient_max() / scale)
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-8 and elapsed < 5.0
    _report(
        5,
        "space derivative representation",
        ok,
        f"worst relative coefficient deviation {worst:.2e} (<=1e-8), {elapsed:.2f}s",
    )


def test_criterion_6_convolution_identity(linear_cir, linear2d):
    worst = 0.0
    for model in (linear_cir, linear2d):
        G = generator_matrix(model, 4)
        for t in (0.25, 1.0):
            for x, y in ((1.0, 2.0), (0.5, 0.5)):
                worst = max(worst, convolution_identity_check(G, t, 4, x, y))
    ok = worst <= 1e-9
    _report(6, "moment-level convolution identity", ok, f"worst deviation {worst:.2e} (<=1e-9)")


def test_criterion_7_growth_and_gronwall(cir, ou, affine2d):
    all_hold = True
    for model in (cir, ou, affine2d):
        G = generator_matrix(model, 2)
        cert = growth_constant(model, 1)
        for t in (0.5, 1.0):
            for point in itertools.product((0.5, 1.0, 2.0), repeat=model.d):
                if not gronwall_check(G, cert, t, np.array(point)):
                    all_hold = False
    ou_K = growth_constant(ou, 1).K
    ok = all_hold and abs(ou_K - 2.0) <= 0.2
    _report(
        7,
        "Gronwall growth certificates",
        ok,
        f"all grid points hold: {all_hold}, OU K(eta=1) = {ou_K:.4f} (2 +/- 10%)",
    )


def test_criterion_8_monte_carlo(ou, cir):
    f_x = P("x")
    started = time.perf_counter()
    config = SchemeConfig(kind=EULER_MC, T=1.0, x0=1.0, steps=256, paths=1_000_000, seed=42)
    estimate, stderr = euler_mc(ou, f_x, config)
    ou_elapsed = time.perf_counter() - started
    ou_ok = abs(estimate - math.exp(-1.0)) <= 3.0 * stderr and ou_elapsed < 30.0

    mc_cfg = SchemeConfig(
        kind=EULER_MC, T=1.0, x0=1.0, paths=1_000_000, seed=42,
        h_grid=(1 / 16, 1 / 32, 1 / 64, 1 / 128),
    )
    fit = convergence_study(cir, P("x^2"), mc_cfg).fitted_order
    fit_ok = abs(fit - 1.0) <= 0.35

    stab_cfg = SchemeConfig(kind=EULER_MC, T=1.0, x0=1.0, steps=64, paths=100_000, seed=42)
    stability = moment_stability_check(cir, stab_cfg, 6)

    finite = math.isfinite(estimate) and math.isfinite(stderr) and math.isfinite(fit)
    ok = ou_ok and fit_ok and stability.passed and finite
    _report(
        8,
        "Monte Carlo estimates and stability",
        ok,
        f"OU |err|/se = {abs(estimate - math.exp(-1.0)) / stderr:.2f} (<=3) in "
        f"{ou_elapsed:.1f}s; CIR Euler order {fit:.3f} (1 +/- 0.35); "
        f"moment stability passed: {stability.passed} (K = {stability.growth_constant:.3f})",
    )


def test_criterion_9_byte_determinism(tmp_path):
    cir_path = tmp_path / "cir.json"
    cir_path.write_text(json.dumps(CIR_DOC))
    linear_path = tmp_path / "linear_cir.json"
    linear_path.write_text(json.dumps(LINEAR_CIR_DOC))
    t_grid = ",".join(f"{t:.17g}" for t in T_SHORT)
    h_grid = ",".join(f"{h:.17g}" for h in H_GRID)

    commands = {
        "expand": [
            "expand", "--model", str(cir_path), "--f", "x^2", "--nu", "1",
            "--t-grid", t_grid, "--x0", "1", "--no-plot",
        ],
        "converge_nu1": [
            "converge", "--model", str(cir_path), "--f", "x^3 + x",
            "--method", "deterministic", "--nu", "1", "--T", "1",
            "--h-grid", h_grid, "--x0", "1", "--no-plot",
        ],
        "converge_nu2": [
            "converge", "--model", str(cir_path), "--f", "x^3 + x",
            "--method", "deterministic", "--nu", "2", "--T", "1",
            "--h-grid", h_grid, "--x0", "1", "--no-plot",
        ],
        "converge_mc": [
            "converge", "--model", str(cir_path), "--f", "x^2",
            "--method", "euler-mc", "--T", "1",
            "--h-grid", "0.25,0.125,0.0625,0.03125", "--x0", "1",
            "--paths", "200000", "--seed", "42", "--no-plot",
        ],
        "verify": [
            "verify", "--model", str(linear_path), "--suite", "all", "--no-plot",
        ],
        "moments": [
            "moments", "--model", str(cir_path), "--T", "1", "--x0", "1",
            "--max-order", "4",
        ],
    }

    mismatches = []
    for label, argv in commands.items():
        dirs = [tmp_path / f"{label}_a", tmp_path / f"{label}_b"]
        for out in dirs:
            rc = main(argv + ["--out-dir", str(out)])
            assert rc == 0, f"{label} exited with {rc}"
        names = sorted(
            p.name
            for p in dirs[0].iterdir()
            if p.suffix in (".csv", ".json") and p.name != "manifest.json"
        )
        for name in names:
            if (dirs[0] / name).read_bytes() != (dirs[1] / name).read_bytes():
                mismatches.append(f"{label}/{name}")
    ok = not mismatches
    _report(
        9,
        "byte-identical CSV bodies across reruns",
        ok,
        "all command outputs identical" if ok else "mismatch in " + ", ".join(mismatches),
    )
