"""Command-line interface.

    qes solve --model screened-coulomb --n 0 --l 0 --gamma -0.5 --delta -0.9
    qes verify --model singular-anharmonic --n 1 --omega 0.5 --chi 0.5 --sigma 1
    qes sweep --model non-polynomial --n 0 --sweep beta --start 0.5 --stop 2 --steps 4
    qes table --model singular-power --n-max 2 --lambda -1 --xi 1 --tau 0.5
    qes wavefunction --model screened-coulomb --n 0 --gamma -0.5 --delta -0.9

Data goes to stdout (JSON, CSV or a text table); errata notes and
diagnostics go to stderr unless ``--json-errata`` folds them into the JSON.
Exit codes: 0 success, 2 no admissible root, 3 verification failed, 64 usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import Iterable

import numpy as np

from . import models as M
from .errors import InvalidGrid, InvalidParameters, NoAdmissibleRoot, QesError
from .oracle import (
    OracleReport,
    RadialGrid,
    default_grid,
    ode_residual,
    ode_residual_profile,
    verify_solution,
)

EXIT_OK = 0
EXIT_NO_ROOT = 2
EXIT_VERIFY_FAILED = 3
EXIT_USAGE = 64

PARAM_FLAGS = (
    "alpha", "beta", "gamma", "delta", "kappa", "lambda",
    "mu", "xi", "tau", "omega", "epsilon", "sigma", "chi",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------


def fmt(x) -> str:
    """Round-trip exact float text with 17 significant digits."""
    x = float(x) + 0.0  # fold -0.0 into 0.0
    if not math.isfinite(x):
        return "null"
    return "%.17g" % x


def to_json(obj) -> str:
    """Deterministic JSON: insertion-ordered keys, 17-digit floats."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items())
        return "{" + items + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def solution_record(sol: M.QesSolution) -> dict:
    return {
        "tuned_value": sol.tuned_value,
        "energy": sol.energy,
        "p": list(sol.p),
        "diagnostics": dict(sol.diagnostics),
    }


def report_record(report: OracleReport | None, passed: bool, error: str | None = None) -> dict:
    if report is None:
        return {"residual_rel": None, "e_shoot": None, "e_abs_err": None, "norm": None,
                "passed": False, "error": error}
    out = {
        "residual_rel": report.residual_rel,
        "e_shoot": report.e_shoot,
        "e_abs_err": report.e_abs_err,
        "norm": report.norm,
        "passed": passed,
    }
    if error:
        out["error"] = error
    return out


# ---------------------------------------------------------------------------
# errata
# ---------------------------------------------------------------------------


def errata_notes(cls: type[M.Model], fixed: dict, n: int, solutions: list[M.QesSolution]) -> list[str]:
    notes = []
    if cls is M.NonPolynomial:
        beta, l = float(fixed["beta"]), int(fixed["l"])
        if n == 0:
            alpha_pub, e_pub = M.published_nonpolynomial_ground(beta, l)
            rejected = _published_ground_residual(beta, l)
            corrected = solutions[0] if solutions else None
            notes.append(
                f"Table 1 n=0: published alpha={fmt(alpha_pub)} "
                f"(alpha/(2 beta^2) - sqrt(2)/beta + l/2 + 1 = 0), published E0={fmt(e_pub)} "
                f"(E_n = alpha/beta - sqrt(2)(2n + l + 7/2)); corrected alpha="
                + (f"{fmt(corrected.tuned_value)}, corrected E0={fmt(corrected.energy)}" if corrected else "none")
                + f"; oracle residual of published pair {fmt(rejected)} (rejected)"
            )
        for sol in solutions if n > 0 else []:
            e_pub = M.published_nonpolynomial_energy(sol.tuned_value, beta, l, n)
            notes.append(
                f"Table 1 n={n}: published E{n}=alpha/beta - sqrt(2)(2n + l + 7/2)={fmt(e_pub)} "
                f"at alpha={fmt(sol.tuned_value)}; corrected E{n}={fmt(sol.energy)}"
            )
    elif cls is M.ScreenedCoulomb and n > 0:
        notes.append(
            "screened-coulomb b0: published (2l+4)*kappa, corrected 2(l+1)*kappa "
            "(the published value fails the radial equation for n >= 1)"
        )
    return notes


def _published_ground_residual(beta: float, l: int) -> float:
    alpha, e0 = M.published_nonpolynomial_ground(beta, l)
    model = M.NonPolynomial(alpha=alpha, beta=beta, l=l)
    sol = M.build_solution(model, 0, energy=e0)
    return ode_residual(model, e0, sol, default_grid(sol))


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[_dest(key.replace("-", "_"))] = value
    return out


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    for key, value in read_config(args.config).items():
        if not hasattr(args, key):
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, key) is None:
            setattr(args, key, value)


def _dest(name: str) -> str:
    # "lambda" is a Python keyword, so its argparse destination is "lam"
    return "lam" if name == "lambda" else name


def _flag(dest: str) -> str:
    return "--" + ("lambda" if dest == "lam" else dest.replace("_", "-"))


def _float(args, name):
    value = getattr(args, name, None)
    if value is None:
        return None
    try:
        return float(value)
    except ValueError:
        raise UsageError(f"{_flag(name)}: not a number: {value!r}") from None


def _int(args, name, default=None):
    value = getattr(args, name, None)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        raise UsageError(f"--{name.replace('_', '-')}: not an integer: {value!r}") from None


def _model_class(args) -> type[M.Model]:
    if args.model is None:
        raise UsageError("--model is required")
    try:
        return M.family_class(args.model)
    except InvalidParameters as exc:
        raise UsageError(str(exc)) from None


def _fixed_params(args, cls, *, allow_tuned=False, skip=()) -> dict[str, float]:
    fixed = {}
    for name in cls.param_names:
        if name in skip:
            continue
        value = _float(args, _dest(name))
        if name == cls.tuned:
            if value is not None and not allow_tuned:
                raise UsageError(f"--{name} is the tuned parameter of {cls.family}; it is solved for")
            continue
        if value is None:
            raise UsageError(f"{cls.family} needs --{name}")
        fixed[name] = value
    others = [p for p in PARAM_FLAGS if p not in cls.param_names and _float(args, _dest(p)) is not None]
    if others:
        raise UsageError(f"{cls.family} does not take " + ", ".join(f"--{p}" for p in others))
    l = _int(args, "l", 0)
    if l < 0:
        raise UsageError("--l must be non-negative")
    fixed["l"] = l
    return fixed


def _n(args, name="n", limit=None) -> int:
    n = _int(args, name)
    if n is None:
        raise UsageError(f"--{name.replace('_', '-')} is required")
    if n < 0:
        raise UsageError(f"--{name.replace('_', '-')} must be non-negative")
    if limit is not None and n > limit:
        raise UsageError(f"--{name.replace('_', '-')} must be at most {limit}")
    return n


def _solve(cls, fixed, n, args) -> list[M.QesSolution]:
    kwargs = {}
    if cls is M.ScreenedCoulomb:
        kwargs["kappa_max"] = _float(args, "kappa_max")
        kwargs["scan_points"] = _int(args, "scan_points", 10_000)
    try:
        return M.solve_tuned_parameter(cls, fixed, n, **kwargs)
    except NoAdmissibleRoot:
        return []
    except InvalidParameters as exc:
        raise UsageError(str(exc)) from None


def _grid(args, sol: M.QesSolution) -> RadialGrid:
    r_max = _float(args, "r_max")
    spacing = getattr(args, "spacing", None) or "uniform"
    try:
        base = default_grid(sol, count=_int(args, "grid_count", 4096), r_min=_float(args, "r_min") or 1e-3)
        return RadialGrid(base.r_min, r_max if r_max is not None else base.r_max, base.count, spacing)
    except InvalidGrid as exc:
        raise UsageError(str(exc)) from None


def _document(cls, fixed, n, solutions) -> dict:
    return {
        "model": cls.family,
        "n": n,
        "l": fixed["l"],
        "fixed_params": {k: v for k, v in fixed.items() if k != "l"},
        "tuned_param": {"name": cls.tuned, "values": [s.tuned_value for s in solutions]},
        "solutions": [solution_record(s) for s in solutions],
    }


def _emit_errata(doc: dict, notes: list[str], args) -> None:
    if not notes:
        return
    if getattr(args, "json_errata", False):
        doc["errata"] = notes
    else:
        for note in notes:
            print(f"errata: {note}", file=sys.stderr)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    cls = _model_class(args)
    fixed = _fixed_params(args, cls)
    n = _n(args)
    solutions = _solve(cls, fixed, n, args)
    doc = _document(cls, fixed, n, solutions)
    _emit_errata(doc, errata_notes(cls, fixed, n, solutions), args)
    print(to_json(doc))
    return EXIT_OK if solutions else EXIT_NO_ROOT


def cmd_verify(args) -> int:
    cls = _model_class(args)
    fixed = _fixed_params(args, cls)
    n = _n(args)
    solutions = _solve(cls, fixed, n, args)
    residual_tol = _float(args, "residual_tol") or 1e-8
    energy_rtol = _float(args, "energy_rtol") or 1e-6
    width = _float(args, "bracket_width") or 0.05
    e_override = _float(args, "override_energy")
    t_override = _float(args, "override_tuned")

    reports, ok = [], True
    for sol in solutions:
        model = sol.model
        if t_override is not None:
            try:
                model = model.with_tuned(t_override)
            except InvalidParameters as exc:
                raise UsageError(str(exc)) from None
        E = sol.energy if e_override is None else e_override
        grid = _grid(args, sol)
        try:
            report = verify_solution(sol, model=model, energy=E, grid=grid, bracket_width=width)
        except QesError as exc:
            reports.append(report_record(None, False, f"{type(exc).__name__}: {exc}"))
            ok = False
            continue
        passed = report.residual_rel <= residual_tol and report.e_abs_err <= energy_rtol * abs(E)
        ok &= passed
        reports.append(report_record(report, passed))

    doc = _document(cls, fixed, n, solutions)
    doc["reports"] = reports
    _emit_errata(doc, errata_notes(cls, fixed, n, solutions), args)
    print(to_json(doc))
    if not solutions:
        return EXIT_NO_ROOT
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def cmd_sweep(args) -> int:
    cls = _model_class(args)
    name = args.sweep
    if name not in cls.param_names or name == cls.tuned:
        raise UsageError(
            f"--sweep must name a fixed parameter of {cls.family}: "
            + ", ".join(p for p in cls.param_names if p != cls.tuned)
        )
    fixed = _fixed_params(args, cls, skip=(name,))
    n = _n(args)
    start, stop = _float(args, "start"), _float(args, "stop")
    steps = _int(args, "steps")
    if start is None or stop is None or steps is None:
        raise UsageError("--start, --stop and --steps are required")
    if not (math.isfinite(start) and math.isfinite(stop)) or steps < 2:
        raise UsageError("sweep bounds must be finite and --steps at least 2")

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["swept_value", "root_index", "tuned_value", "energy", "det_residual"])
    for value in np.linspace(start, stop, steps):
        try:
            sols = M.solve_tuned_parameter(cls, {**fixed, name: float(value)}, n,
                                           **({"kappa_max": _float(args, "kappa_max")} if cls is M.ScreenedCoulomb else {}))
        except (NoAdmissibleRoot, InvalidParameters):
            sols = []
        if not sols:
            writer.writerow([fmt(value), "", "", "", ""])
        for i, sol in enumerate(sols):
            writer.writerow([fmt(value), i, fmt(sol.tuned_value), fmt(sol.energy),
                             fmt(sol.diagnostics["det_residual"])])
    return EXIT_OK


def cmd_table(args) -> int:
    cls = _model_class(args)
    fixed = _fixed_params(args, cls)
    n_max = _n(args, "n_max", limit=8)
    fixed_text = "  ".join(f"{k}={fmt(v)}" for k, v in fixed.items() if k != "l")
    lines = [f"{cls.family}  l={fixed['l']}  {fixed_text}"]
    header = ["n", "root", cls.tuned, "energy", "p"]
    errata_col = cls is M.NonPolynomial
    if errata_col:
        header.append("errata (published)")
    rows = []
    for n in range(n_max + 1):
        sols = _solve(cls, fixed, n, args)
        if not sols:
            rows.append([str(n), "-", "none", fmt(_energy_or_nan(cls, fixed, n)), ""] + ([""] if errata_col else []))
        for i, sol in enumerate(sols):
            row = [str(n), str(i), fmt(sol.tuned_value), fmt(sol.energy),
                   "[" + ", ".join(fmt(x) for x in sol.p) + "]"]
            if errata_col:
                row.append("* " + _table_errata(fixed, n, sol))
            rows.append(row)
    widths = [max(len(r[c]) for r in rows + [header]) for c in range(len(header))]
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip())
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    print("\n".join(lines))
    return EXIT_OK


def _energy_or_nan(cls, fixed, n) -> float:
    try:
        return cls.from_params({**fixed, cls.tuned: 1.0}).energy(n)
    except QesError:
        return float("nan")


def _table_errata(fixed, n, sol) -> str:
    beta, l = float(fixed["beta"]), int(fixed["l"])
    if n == 0:
        alpha_pub, e_pub = M.published_nonpolynomial_ground(beta, l)
        return f"Table 1 n=0: alpha={fmt(alpha_pub)} E0={fmt(e_pub)}"
    e_pub = M.published_nonpolynomial_energy(sol.tuned_value, beta, l, n)
    return f"Table 1 n={n}: E{n}={fmt(e_pub)}"


def cmd_wavefunction(args) -> int:
    cls = _model_class(args)
    fixed = _fixed_params(args, cls)
    n = _n(args)
    solutions = _solve(cls, fixed, n, args)
    if not solutions:
        print("no admissible root", file=sys.stderr)
        return EXIT_NO_ROOT
    index = _int(args, "root_index", 0)
    if not 0 <= index < len(solutions):
        raise UsageError(f"--root-index must be in [0, {len(solutions) - 1}]")
    sol = solutions[index]
    grid = _grid(args, sol)
    r = grid.points
    psi = M.wavefunction(sol, r)
    residual = ode_residual_profile(sol.model, sol.energy, sol, grid)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["r", "psi", "residual"])
    for row in zip(r, psi, residual):
        writer.writerow([fmt(x) for x in row])
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--model", choices=sorted(M.FAMILIES))
    common.add_argument("--l", help="angular momentum (default 0)")
    for name in PARAM_FLAGS:
        common.add_argument(f"--{name}", dest=_dest(name), metavar="X")
    common.add_argument("--kappa-max", metavar="X", help="upper end of the kappa root bracket")
    common.add_argument("--scan-points", metavar="N", help="kappa scan points (default 10000)")
    common.add_argument("--json-errata", action="store_true", help="put errata notes in the JSON")

    degree = argparse.ArgumentParser(add_help=False)
    degree.add_argument("--n", help="polynomial degree")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--r-min", metavar="R")
    grid.add_argument("--r-max", metavar="R")
    grid.add_argument("--grid-count", metavar="N")
    grid.add_argument("--spacing", choices=["uniform", "log"])

    parser = _Parser(prog="qes", description="Quasi-exact spectra of four radial potentials.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("solve", parents=[common, degree], help="solve for the tuned parameter")

    p = sub.add_parser("verify", parents=[common, degree, grid], help="solve, then check numerically")
    p.add_argument("--override-energy", metavar="E")
    p.add_argument("--override-tuned", metavar="X")
    p.add_argument("--residual-tol", metavar="X")
    p.add_argument("--energy-rtol", metavar="X")
    p.add_argument("--bracket-width", metavar="X", help="relative shooting bracket (default 0.05)")

    p = sub.add_parser("sweep", parents=[common, degree], help="CSV over one fixed parameter")
    p.add_argument("--sweep", required=True, metavar="NAME")
    p.add_argument("--start")
    p.add_argument("--stop")
    p.add_argument("--steps")

    p = sub.add_parser("table", parents=[common], help="text table for n = 0..n-max")
    p.add_argument("--n-max", dest="n_max")

    p = sub.add_parser("wavefunction", parents=[common, degree, grid], help="CSV of r, psi, residual")
    p.add_argument("--root-index")
    return parser


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "table": cmd_table,
    "wavefunction": cmd_wavefunction,
}


def main(argv: Iterable[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(None if argv is None else list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _apply_config(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qes {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
