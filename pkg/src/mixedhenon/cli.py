"""Command-line interface: ``solve``, ``sweep``, ``verify`` and ``kernel build``.

Exit codes: 0 success, 1 run failure (not converged, a check failed, I/O),
2 usage error.  ``--config FILE`` reads ``key = value`` lines whose keys are
flag names; explicit flags win over the file.  The kernel cache directory
comes from ``--cache-dir`` or the ``MIXEDHENON_CACHE_DIR`` environment variable.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import (
    ConfigurationError,
    DomainError,
    ExponentDerivationError,
    HenonError,
    InvalidDimensionError,
    PreconditionError,
    SupercriticalDimensionError,
)
from .functional import classify
from .io import load_solution
from .kernel import cache_path, load_or_assemble, save_kernel, assemble_kernel_matrix
from .params import PARAM_KEYS, Params
from .profiles import bump_family, gaussian
from .radial import make_grid
from .solver import SolverConfig, mountain_pass_geometry_check, solve_ground_state
from . import verify as V

log = logging.getLogger("mixedhenon")

CSV_COLUMNS = ("N", "p", "q", "s", "gamma", "alpha", "beta", "R", "M", "verdict", "converged",
               "nehari_level", "residual", "concentration_index", "peak_radius")
SWEEPABLE = ("q", "alpha", "beta", "gamma", "s", "p")
SUITES = ("strauss", "interpolation", "compactness", "degiorgi", "scaling", "pohozaev",
          "kernel-oracle", "gradient", "mountain-pass", "all")


USAGE_ERRORS = (ConfigurationError, DomainError, ExponentDerivationError, InvalidDimensionError,
                PreconditionError, SupercriticalDimensionError)


class UsageError(Exception):
    pass


def _num_or_range(text: str):
    return text if ":" in text else float(text)


# -- argument parsing ------------------------------------------------------------


def _add_params(p: argparse.ArgumentParser, ranges: bool = False) -> None:
    g = p.add_argument_group("problem parameters", "sweep accepts START:STOP:STEP for q alpha beta gamma s p; "
                             "write a negative start as --alpha=-1:4:0.25"
                             if ranges else None)
    num = _num_or_range if ranges else float
    g.add_argument("--N", type=int, default=3)
    g.add_argument("--p", type=num, default=2.0)
    g.add_argument("--q", type=num, default=4.0)
    g.add_argument("--s", type=num, default=1.0)
    g.add_argument("--gamma", type=num, default=None, help="default 1 if s = 1, else 0")
    g.add_argument("--alpha", type=num, default=0.0)
    g.add_argument("--beta", type=num, default=2.0)


def _add_grid(p: argparse.ArgumentParser, R: float = 15.0, M: int = 400) -> None:
    g = p.add_argument_group("mesh")
    g.add_argument("--R", type=float, default=R)
    g.add_argument("--M", type=int, default=M)
    g.add_argument("--grading", type=float, default=2.0)
    g.add_argument("--cache-dir", default=None)
    g.add_argument("--no-cache", action="store_true")


def _add_solver(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--tol", type=float, default=1e-6)
    g.add_argument("--max-iter", type=int, default=5000)
    g.add_argument("--restarts", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="key = value file mirroring the flags")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixedhenon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="compute a ground state")
    _add_params(sp)
    _add_grid(sp)
    _add_solver(sp)
    sp.add_argument("--out", default=None, help="report path (default: standard output)")
    _common(sp)

    sw = sub.add_parser("sweep", help="classify and solve over a parameter grid")
    _add_params(sw, ranges=True)
    _add_grid(sw)
    _add_solver(sw)
    sw.add_argument("--out", default=None, help="CSV path (default: standard output)")
    sw.add_argument("--plot-data", default=None, help="x,y,class file for two-parameter sweeps")
    sw.add_argument("--classify-only", action="store_true")
    sw.add_argument("--workers", type=int, default=1)
    _common(sw)

    vf = sub.add_parser("verify", help="run a verification suite")
    vf.add_argument("suite", choices=SUITES)
    _add_params(vf)
    _add_grid(vf, R=15.0, M=200)
    vf.add_argument("--input", default=None, help="solution JSON to check (default: generated profiles)")
    vf.add_argument("--samples", type=float, default=1e6)
    vf.add_argument("--seed", type=int, default=7)
    vf.add_argument("--family-size", type=int, default=50)
    vf.add_argument("--epsilon", type=float, default=1e-3)
    vf.add_argument("--levels", type=int, default=30)
    vf.add_argument("--out", default=None, help="JSON report path")
    _common(vf)

    kp = sub.add_parser("kernel", help="kernel cache management")
    ksub = kp.add_subparsers(dest="kernel_command", required=True)
    kb = ksub.add_parser("build", help="assemble and store a kernel")
    _add_params(kb)
    _add_grid(kb)
    _common(kb)
    return parser


def read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key = value")
            k, v = (x.strip() for x in line.split("=", 1))
            out[k.lstrip("-").replace("-", "_")] = v
    return out


def _subparser(parser: argparse.ArgumentParser, argv: list[str]):
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = sub.choices[argv[0]]
    if argv[0] == "kernel" and len(argv) > 1:
        ksub = next(a for a in sp._actions if isinstance(a, argparse._SubParsersAction))
        sp = ksub.choices.get(argv[1], sp)
    return sp


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        sp = _subparser(parser, argv)
        known = {a.dest: a for a in sp._actions}
        defaults = {}
        for k, v in cfg.items():
            if k not in known or k in ("config", "suite", "help"):
                raise UsageError(f"unknown config key {k!r}")
            act = known[k]
            if isinstance(act, argparse._StoreTrueAction):
                defaults[k] = v.lower() in ("1", "true", "yes", "on")
            else:
                defaults[k] = act.type(v) if act.type else v
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# -- helpers ---------------------------------------------------------------------


def params_from_args(args, **override) -> Params:
    d = {k: getattr(args, k) for k in PARAM_KEYS}
    d.update(override)
    if any(isinstance(v, str) for v in d.values()):
        raise UsageError("parameter ranges are only accepted by sweep")
    if d["gamma"] is None:
        d["gamma"] = 1.0 if d["s"] == 1 else 0.0
    if not d["p"] > 1:
        raise UsageError("p must exceed 1")
    return Params(**d)


def _check_superlinear(P: Params) -> None:
    if not P.q > P.p:
        raise UsageError("q must exceed p")


def _kernel(grid, P: Params, args):
    if P.s == 1:
        return None
    if args.no_cache:
        return assemble_kernel_matrix(grid, P)
    return load_or_assemble(grid, P, args.cache_dir)


def _solver_config(args) -> SolverConfig:
    return SolverConfig(max_iterations=args.max_iter, residual_tolerance=args.tol,
                        restarts=args.restarts, seed=args.seed)


def _write_text(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


# -- solve -----------------------------------------------------------------------


def run_solve(args) -> int:
    P = params_from_args(args)
    _check_superlinear(P)
    grid = make_grid(P.N, args.R, args.M, args.grading)
    report = classify(P)
    print(f"classification: {report.verdict.value}", file=sys.stderr)
    kernel = _kernel(grid, P, args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = solve_ground_state(P, grid, kernel, _solver_config(args))
    print(
        f"converged={rep.converged} residual={rep.residual:.3e} "
        f"nehari_level={rep.nehari_level:.10g} iterations={rep.iterations}",
        file=sys.stderr,
    )
    d = rep.to_dict()
    d["classification"] = report.to_dict()
    _write_text(_dumps(d), args.out)
    return 0 if rep.converged else 1


# -- sweep -----------------------------------------------------------------------


def parse_range(text: str) -> list[float]:
    """``start:stop:step``, both ends inclusive; values rounded to 12 digits."""
    try:
        a, b, h = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected START:STOP:STEP") from None
    if h <= 0 or b < a:
        raise UsageError(f"empty range {text!r}")
    n = int(np.floor((b - a) / h + 1e-9))
    return [round(a + k * h, 12) for k in range(n + 1)]


def _sweep_row(task):
    P, R, M, grading, cfg, classify_only, cache = task
    verdict = classify(P).verdict.value
    row = {**P.to_dict(), "R": R, "M": M, "verdict": verdict, "converged": "",
           "nehari_level": "", "residual": "", "concentration_index": "", "peak_radius": ""}
    if classify_only or not P.q > P.p:
        return row
    grid = make_grid(P.N, R, M, grading)
    kernel = None
    if P.s < 1:
        kernel = assemble_kernel_matrix(grid, P) if cache is False else load_or_assemble(grid, P, cache)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rep = solve_ground_state(P, grid, kernel, cfg)
    except HenonError as exc:
        log.warning("solve failed for %s: %s", P, exc)
        row["converged"] = False
        return row
    row.update(converged=rep.converged, nehari_level=rep.nehari_level, residual=rep.residual,
               concentration_index=rep.diagnostics.concentration_index,
               peak_radius=rep.diagnostics.peak_radius)
    return row


def run_sweep(args) -> int:
    ranges = {k: parse_range(getattr(args, k)) for k in SWEEPABLE if isinstance(getattr(args, k), str)}
    if not ranges:
        raise UsageError("at least one --<param>-range is required")
    names = list(ranges)
    grids = np.meshgrid(*[ranges[k] for k in names], indexing="ij")
    combos = [tuple(float(g.flat[i]) for g in grids) for i in range(grids[0].size)]
    cfg = _solver_config(args)
    cache = False if args.no_cache else args.cache_dir
    tasks, keys = [], []
    for combo in combos:
        over = dict(zip(names, combo))
        try:
            P = params_from_args(args, **over)
        except (HenonError, UsageError) as exc:
            log.warning("skipping %s: %s", over, exc)
            continue
        tasks.append((P, args.R, args.M, args.grading, cfg, args.classify_only, cache))
        keys.append(combo)
    if not tasks:
        raise UsageError("no valid parameter tuples in the sweep")
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    _write_text(buf.getvalue(), args.out)

    if len(names) == 2:
        pbuf = io.StringIO()
        pw = csv.writer(pbuf, lineterminator="\n")
        pw.writerow(("x", "y", "class"))
        for combo, row in zip(keys, rows):
            pw.writerow((_fmt(combo[0]), _fmt(combo[1]), row["verdict"]))
        path = args.plot_data
        if path is None and args.out is not None:
            path = str(Path(args.out).with_suffix("")) + ".plot.csv"
        if path is not None:
            _write_text(pbuf.getvalue(), path)
    print(f"{len(rows)} rows", file=sys.stderr)
    return 0


# -- verify ----------------------------------------------------------------------


def _profiles(args, P: Params):
    if args.input:
        f, _ = load_solution(args.input)
        return f.grid, [f]
    grid = make_grid(P.N, args.R, args.M, args.grading)
    return grid, bump_family(grid, args.family_size, args.seed)


def _suite(name: str, args) -> list[V.CheckReport]:
    if name == "gradient":
        return [V.gradient_check(seed=args.seed)]
    if name == "kernel-oracle":
        out = []
        s = args.s if args.s < 1 else 0.5
        out.append(V.kernel_oracle_check(N=args.N if args.N <= 3 else 2, s=s, p=args.p,
                                         samples=int(args.samples), seed=args.seed))
        return out
    if name == "pohozaev":
        P = params_from_args(args)
        return [V.pohozaev_sign_check(P, seed=args.seed)]
    P = params_from_args(args)
    if name == "mountain-pass":
        grid = make_grid(P.N, args.R, args.M, args.grading)
        mp = mountain_pass_geometry_check(P, grid, _kernel(grid, P, args), seed=args.seed)
        return [V.CheckReport("mountain-pass", P.to_dict(), mp.mountain_pass, mp.to_dict())]
    if name == "compactness":
        # the concentrating sequence needs resolution down to ~1e-7 R
        grid = make_grid(P.N, args.R, max(args.M, 400), max(args.grading, 4.0))
        kernel = _kernel(grid, P, args)
        return [V.compactness_probe(P, grid, kernel, kind) for kind in ("translate", "concentrate")]
    if name == "degiorgi":
        if args.input:
            f, _ = load_solution(args.input)
        else:
            grid = make_grid(P.N, args.R, args.M, args.grading)
            f = solve_ground_state(P, grid, _kernel(grid, P, args)).solution
        tr = V.degiorgi_trace(f, P, args.levels, epsilon=args.epsilon)
        mono = bool(np.all(np.diff(tr.energies) <= 0))
        ok = mono and tr.vanishes and tr.recursion_holds
        return [V.CheckReport("degiorgi", P.to_dict(), ok, tr.to_dict(), 1e-12)]
    grid, fam = _profiles(args, P)
    kernel = _kernel(grid, P, args)
    if name == "strauss":
        reps = [V.strauss_check(f, P, kernel) for f in fam]
        C = max(r["C_est"] for r in reps)
        return [V.CheckReport("strauss", P.to_dict(), bool(np.isfinite(C)), {"max_C_est": C})]
    if name == "interpolation":
        return [V.interpolation_check(fam, P, kernel)]
    if name == "scaling":
        f = fam[0] if args.input else gaussian(grid)
        return [V.scaling_decay_check(f, P, kernel=kernel)]
    raise UsageError(f"unknown suite {name!r}")


def run_verify(args) -> int:
    names = [s for s in SUITES if s != "all"] if args.suite == "all" else [args.suite]
    reports = []
    for n in names:
        for rep in _suite(n, args):
            reports.append(rep)
            d = rep.to_dict()
            extra = ""
            if "threshold" in d["measured"]:
                extra = f" threshold={d['measured']['threshold']:g}"
            print(f"{rep.name}: {'PASS' if rep.passed else 'FAIL'}{extra}")
    if args.out:
        _write_text(_dumps([r.to_dict() for r in reports]), args.out)
    return 0 if all(r.passed for r in reports) else 1


# -- kernel ----------------------------------------------------------------------


def run_kernel_build(args) -> int:
    P = params_from_args(args)
    if P.s == 1:
        raise UsageError("the local case (s = 1) has no kernel")
    grid = make_grid(P.N, args.R, args.M, args.grading)
    km = assemble_kernel_matrix(grid, P)
    path = cache_path(grid, P, args.cache_dir)
    save_kernel(km, path)
    print(path)
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"solve": run_solve, "sweep": run_sweep, "verify": run_verify,
               "kernel": run_kernel_build}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HenonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, USAGE_ERRORS) else 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
