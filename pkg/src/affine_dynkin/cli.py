"""Batch command-line front end.

Subcommands: validate, expand, converge, verify, moments.  Every run
writes CSV/JSON reports plus a manifest into --out-dir; report commands
also render a PNG figure unless --no-plot is given.  Exit codes: 0 on
success, 1 on domain failures (inadmissible model, failed suite,
unsupported configuration), 2 on usage or parse errors.  All numbers are
printed with 17 significant digits, so CSV bodies are lossless and
byte-stable across reruns.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    AffineDynkinError,
    ConfigError,
    DegreeOverflow,
    HashMismatch,
    InadmissibleModel,
    PolynomialParseError,
    UnsupportedOperation,
)
from .generator import generator_matrix
from .model import load_model, parse_model, validate_admissibility
from .plots import plot_convergence, plot_expansion, plot_verification
from .polyalg import parse_polynomial, render_monomial
from .scheme import DETERMINISTIC, EULER_MC, SchemeConfig, convergence_study
from .semigroup import (
    dynkin_expand,
    exact_semigroup,
    growth_constant,
    moment_table,
    remainder_bound,
    weight_norm,
)
from .verification import SUITES, run_suite

_USAGE_ERRORS = (ConfigError, PolynomialParseError, ValueError)
_DOMAIN_ERRORS = (
    InadmissibleModel,
    DegreeOverflow,
    UnsupportedOperation,
    HashMismatch,
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace, outputs: list[Path]) -> Path:
    echo = {
        k: v for k, v in sorted(vars(args).items()) if k not in ("func",) and v is not None
    }
    manifest = {
        "command": command,
        "model": getattr(args, "model", None),
        "parameters": echo,
        "tool_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": [str(p) for p in outputs],
    }
    path = out_dir / "manifest.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _parse_floats(text: str, what: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip() != "")
    except ValueError:
        raise ConfigError(f"{what} must be a comma-separated list of numbers") from None
    if not values:
        raise ConfigError(f"{what} is empty")
    return values


def _parse_point(text: str, d: int):
    values = _parse_floats(text, "--x0")
    if len(values) == 1:
        return values[0]
    if len(values) != d:
        raise ConfigError(f"--x0 has {len(values)} entries but the model has d={d}")
    return np.array(values)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands -------------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        with open(args.model, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read model config: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return 2
    model = parse_model(doc)
    violations = validate_admissibility(model)
    if violations:
        for violation in violations:
            print(f"violation: {violation}")
        return 1
    print(f"{args.model}: admissible (m={model.m}, n={model.n})")
    return 0


def cmd_expand(args) -> int:
    model = load_model(args.model)
    f = parse_polynomial(args.f, model.d)
    t_grid = _parse_floats(args.t_grid, "--t-grid")
    if any(t < 0 for t in t_grid):
        raise ConfigError("--t-grid entries must be >= 0")
    x = _parse_point(args.x0, model.d)

    eta = max(1, -(-f.degree // 2))
    basis_degree = max(f.degree, 2 * eta)
    G = generator_matrix(model, basis_degree)
    expansion = dynkin_expand(model, f, args.nu)
    cert = growth_constant(model, eta)
    f_norm = weight_norm(f, eta, model.m)
    point = np.full(model.d, x) if np.ndim(x) == 0 else np.asarray(x, dtype=float)

    rows = []
    for t in t_grid:
        truncated = expansion.evaluate(t, point)
        exact = exact_semigroup(G, f, t).evaluate(point)
        rem = exact - truncated
        bound = remainder_bound(cert, f_norm, args.nu, t, point)
        rows.append({"t": t, "truncated": truncated, "exact": exact, "remainder": rem, "bound": bound})

    out = _out_dir(args)
    csv_path = out / "expand.csv"
    write_csv(
        csv_path,
        ["t", "truncated", "exact", "remainder", "bound"],
        [[r["t"], r["truncated"], r["exact"], r["remainder"], r["bound"]] for r in rows],
    )
    outputs = [csv_path]
    if not args.no_plot:
        fig_path = out / "expand.png"
        plot_expansion(rows, args.nu, fig_path, f"expansion of {args.f} (nu={args.nu})")
        outputs.append(fig_path)
    outputs.append(_write_manifest(out, "expand", args, outputs))
    worst = max((abs(r["remainder"]) / r["t"] ** (args.nu + 1) for r in rows if r["t"] > 0), default=0.0)
    print(f"wrote {csv_path} ({len(rows)} rows); max |remainder|/t^{args.nu + 1} = {worst:.6g}")
    return 0


def cmd_converge(args) -> int:
    model = load_model(args.model)
    f = parse_polynomial(args.f, model.d)
    h_grid = _parse_floats(args.h_grid, "--h-grid")
    x0 = _parse_point(args.x0, model.d)
    method = {"deterministic": DETERMINISTIC, DETERMINISTIC: DETERMINISTIC,
              "euler-mc": EULER_MC, EULER_MC: EULER_MC}.get(args.method)
    if method is None:
        raise ConfigError(f"unknown method {args.method!r}")
    if method == DETERMINISTIC and args.nu is None:
        raise ConfigError("deterministic stepping needs --nu")
    config = SchemeConfig(
        kind=method,
        T=args.T,
        x0=x0,
        nu=args.nu,
        h_grid=h_grid,
        paths=args.paths if method == EULER_MC else None,
        seed=args.seed if method == EULER_MC else None,
    )
    report = convergence_study(model, f, config)

    out = _out_dir(args)
    csv_path = out / "converge.csv"
    csv_rows = []
    for row in report.rows:
        log_err = math.log(row.error) if row.error > 0 else None
        csv_rows.append([row.h, row.error, row.stderr, math.log(row.h), log_err])
    write_csv(csv_path, ["h", "error", "stderr", "log_h", "log_error"], csv_rows)
    summary_path = out / "converge_summary.json"
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs = [csv_path, summary_path]
    if not args.no_plot:
        fig_path = out / "converge.png"
        plot_convergence(report, fig_path, f"weak error of {args.f} ({args.method})")
        outputs.append(fig_path)
    outputs.append(_write_manifest(out, "converge", args, outputs))
    label = "exact" if report.exact else (
        f"{report.fitted_order:.4f}" if report.fitted_order is not None else "n/a"
    )
    print(f"wrote {csv_path} ({len(report.rows)} rows); fitted order = {label}")
    return 0


def cmd_verify(args) -> int:
    model = load_model(args.model)
    name = Path(args.model).stem
    rows = run_suite(model, name, args.suite)

    out = _out_dir(args)
    csv_path = out / "verify.csv"
    write_csv(
        csv_path,
        ["identity", "model", "param", "deviation", "tolerance", "pass"],
        [[r.identity, r.model, r.param, r.deviation, r.tolerance, r.passed] for r in rows],
    )
    outputs = [csv_path]
    if not args.no_plot:
        fig_path = out / "verify.png"
        plot_verification(rows, fig_path, f"identity deviations: {name} ({args.suite})")
        outputs.append(fig_path)
    outputs.append(_write_manifest(out, "verify", args, outputs))
    failed = [r for r in rows if not r.passed]
    print(f"wrote {csv_path}: {len(rows) - len(failed)}/{len(rows)} checks passed")
    for r in failed:
        print(f"FAIL {r.identity} {r.param}: deviation {r.deviation:.3e} > {r.tolerance:.3e}")
    return 1 if failed else 0


def cmd_moments(args) -> int:
    model = load_model(args.model)
    x0 = _parse_point(args.x0, model.d)
    if args.T < 0:
        raise ConfigError("--T must be >= 0")
    G = generator_matrix(model, args.max_order)
    table = moment_table(G, args.T, x0, args.max_order)

    out = _out_dir(args)
    csv_path = out / "moments.csv"
    rows = [
        [" ".join(str(a) for a in alpha), sum(alpha), render_monomial(alpha), value]
        for alpha, value in table.values.items()
    ]
    write_csv(csv_path, ["alpha", "order", "monomial", "moment"], rows)
    outputs = [csv_path]
    outputs.append(_write_manifest(out, "moments", args, outputs))
    print(f"wrote {csv_path} ({len(rows)} moments at t={args.T:g})")
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affine-dynkin",
        description="Moment-semigroup calculus and weak-order audits for affine models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default="out"):
        p.add_argument("--model", required=True, help="path to a JSON model config")
        p.add_argument("--out-dir", default=out_default, help="directory for reports")
        p.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    p = sub.add_parser("validate", help="check model admissibility")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("expand", help="truncated expansion vs exact semigroup")
    common(p)
    p.add_argument("--f", required=True, help='polynomial, e.g. "x^2" or "2*x1 x2 - 1"')
    p.add_argument("--nu", type=int, required=True, help="expansion order")
    p.add_argument("--t-grid", required=True, help="comma-separated times")
    p.add_argument("--x0", required=True, help="evaluation point (scalar broadcasts)")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("converge", help="weak-order convergence study")
    common(p)
    p.add_argument("--f", required=True)
    p.add_argument("--method", default="deterministic",
                   help="deterministic | euler-mc")
    p.add_argument("--nu", type=int, default=None)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--h-grid", required=True, help="comma-separated step sizes")
    p.add_argument("--x0", required=True)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("verify", help="operator-identity verification suite")
    common(p)
    p.add_argument("--suite", default="all", choices=SUITES)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("moments", help="dump exact moments as a CSV table")
    common(p)
    p.add_argument("--T", type=float, required=True, help="time of the moment table")
    p.add_argument("--x0", required=True, help="base point")
    p.add_argument("--max-order", type=int, default=4)
    p.set_defaults(func=cmd_moments)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except _DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AffineDynkinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
