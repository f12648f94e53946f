"""Command-line front end.

Subcommands::

    dqfi spectrum  --model FILE [--theta V]            eigenvalue table
    dqfi generator --model FILE [--theta V] --t T      generator matrix entries
    dqfi dqfi      --model FILE [--params LIST] [...]  DQFI/CQFI time sweep
    dqfi sweep     --model FILE --params LIST          spectrum vs parameter
    dqfi reproduce --figure {1,2,3} --out DIR          benchmark figure CSVs

Output is CSV with '#'-prefixed metadata lines, one header row, and
17-significant-digit scientific formatting, so identical inputs produce
byte-identical files.  Exit codes: 0 success, 2 input/parse error,
3 numeric failure.  Set DQFI_LOG={error,warn,info,debug} for logging.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .dsl import ModelSpec, ParseError, compile_model, parse_model
from .fisher import FisherError, evaluate_point
from .generator import GeneratorError, generator_auto
from .linalg import ConvergenceError, ExpOverflowError, SingularMatrixError
from .model import (LiouvilleState, ModelError, OpenSystemModel, StateError,
                    build_liouvillian)
from .spectral import SpectralError, biorthogonal_spectrum
from .twolevel import figure_data

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

_INPUT_ERRORS = (ParseError, ModelError, FileNotFoundError, IsADirectoryError,
                 PermissionError, ValueError)
_NUMERIC_ERRORS = (ConvergenceError, SingularMatrixError, ExpOverflowError,
                   SpectralError, GeneratorError, FisherError, StateError,
                   ArithmeticError)

log = logging.getLogger("dqfi")


@dataclass(frozen=True)
class SweepConfig:
    """Time grid, parameter values, and output options for a sweep."""

    t0: float
    t1: float
    nt: int
    params: tuple[float, ...]
    route: str = "auto"
    n: int = 1
    jobs: int = 0

    def __post_init__(self):
        if self.t0 < 0:
            raise ValueError("t0 must be >= 0")
        if self.t1 <= self.t0:
            raise ValueError("t1 must exceed t0")
        if self.nt < 2:
            raise ValueError("nt must be >= 2")
        if not self.params:
            raise ValueError("at least one parameter value is required")

    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.nt)


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return f"{x:.16e}"


def _write_csv(path: str, metadata: dict, header: Sequence[str],
               rows: Sequence[Sequence]) -> None:
    lines = [f"# {k}: {v}" for k, v in metadata.items()]
    lines.append(",".join(header))
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, float):
                cells.append(_fmt(cell))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _load(path: str) -> tuple[ModelSpec, OpenSystemModel, str]:
    with open(path, "r", encoding="utf-8") as fh:
        source = fh.read()
    spec = parse_model(source)
    digest = hashlib.sha256(source.encode()).hexdigest()[:16]
    return spec, compile_model(spec), digest


def _probe_state(model: OpenSystemModel) -> LiouvilleState:
    """Default probe: the uniform maximal superposition, as in the benchmark."""
    m = model.dim
    psi = np.ones(m, dtype=complex) / math.sqrt(m)
    rho = np.outer(psi, psi.conj())
    return LiouvilleState.from_density(rho)


def _meta(digest: str, spec: ModelSpec, extra: Optional[dict] = None) -> dict:
    meta = {"generator": f"dqfi {__version__}", "model-sha256": digest,
            "parameter": spec.system.parameter,
            "convention": "row-major-stacking"}
    if extra:
        meta.update(extra)
    return meta


def cmd_spectrum(args) -> int:
    spec, model, digest = _load(args.model)
    theta = args.theta if args.theta is not None else spec.system.default
    s = biorthogonal_spectrum(build_liouvillian(model, theta))
    flagged = {i for c in s.ep_clusters for i in c.indices}
    norms = s.left_norms()
    rows = [(k + 1, float(s.values[k].real), float(s.values[k].imag),
             float(norms[k]), int(k in flagged))
            for k in range(s.size)]
    _write_csv(args.out, _meta(digest, spec, {"theta": _fmt(theta)}),
               ["index", "re", "im", "left_norm", "ep_flag"], rows)
    return EXIT_OK


def cmd_generator(args) -> int:
    spec, model, digest = _load(args.model)
    theta = args.theta if args.theta is not None else spec.system.default
    from .model import d_liouvillian
    liou = build_liouvillian(model, theta)
    mode = "analytic" if model.has_analytic_derivatives else "central-fd"
    dl = d_liouvillian(model, theta, mode=mode)
    if args.route == "auto":
        g = generator_auto(liou, dl, args.t)
    else:
        from .generator import (generator_propagator_fd, generator_quadrature,
                                generator_spectral)
        if args.route == "spectral":
            g = generator_spectral(biorthogonal_spectrum(liou), dl, args.t)
        elif args.route == "quadrature":
            g = generator_quadrature(liou, dl, args.t)
        else:
            g = generator_propagator_fd(model, theta, args.t)
    rows = []
    n = g.xi.shape[0]
    for i in range(n):
        for j in range(n):
            rows.append((i + 1, j + 1, float(g.xi[i, j].real), float(g.xi[i, j].imag)))
    _write_csv(args.out,
               _meta(digest, spec, {"theta": _fmt(theta), "t": _fmt(args.t),
                                    "route": g.route}),
               ["row", "col", "re", "im"], rows)
    return EXIT_OK


def _sweep_rows(model: OpenSystemModel, config: SweepConfig):
    rho0 = _probe_state(model)
    times = config.times()

    def one_param(theta: float):
        out = []
        for t in times:
            r = evaluate_point(model, theta, rho0, float(t), n=config.n,
                               route=config.route)
            residual = r.diagnostics.get("cov_vs_fd", r.diagnostics.get("cov_err_est", 0.0))
            out.append((float(t), float(theta), r.dqfi,
                        r.cqfi if r.cqfi is not None else float("nan"),
                        r.purity, r.bound if r.bound is not None else float("nan"),
                        r.route, float(residual)))
        return out

    jobs = config.jobs or (os.cpu_count() or 1)
    if jobs > 1 and len(config.params) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(one_param, config.params))
    else:
        chunks = [one_param(p) for p in config.params]
    rows = []
    for chunk in chunks:
        rows.extend(chunk)
    return rows


def cmd_dqfi(args) -> int:
    spec, model, digest = _load(args.model)
    sweep = spec.sweep
    params = tuple(args.params) if args.params else (
        sweep.values if sweep and sweep.values else (spec.system.default,))
    config = SweepConfig(
        t0=args.t0 if args.t0 is not None else (sweep.t0 if sweep else 0.0),
        t1=args.t1 if args.t1 is not None else (sweep.t1 if sweep else 10.0),
        nt=args.nt if args.nt is not None else (sweep.nt if sweep else 101),
        params=params, route=args.route, n=args.n, jobs=args.jobs)
    rows = _sweep_rows(model, config)
    meta = _meta(digest, spec, {
        "grid": f"t0={_fmt(config.t0)} t1={_fmt(config.t1)} nt={config.nt}",
        "protocols": config.n})
    _write_csv(args.out, meta,
               ["t", "theta", "dqfi", "cqfi", "purity", "bound", "route", "residual"],
               rows)
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec, model, digest = _load(args.model)
    params = tuple(args.params) if args.params else (spec.system.default,)
    rows = []
    for theta in params:
        s = biorthogonal_spectrum(build_liouvillian(model, theta))
        flagged = {i for c in s.ep_clusters for i in c.indices}
        norms = s.left_norms()
        for k in range(s.size):
            rows.append((float(theta), k + 1, float(s.values[k].real),
                         float(s.values[k].imag), float(norms[k]),
                         int(k in flagged)))
    _write_csv(args.out, _meta(digest, spec),
               ["theta", "index", "re", "im", "left_norm", "ep_flag"], rows)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    which = f"fig{args.figure}"
    curves = figure_data(which)
    path = os.path.join(args.out, f"{which}.csv")
    meta = {"generator": f"dqfi {__version__}", "model": "builtin spin-flip",
            "figure": which, "convention": "row-major-stacking"}
    if which == "fig1":
        ratios = curves[0].grid
        by_name = {(c.label, c.name): c for c in curves}
        header = ["gamma_ratio"]
        for k in range(1, 5):
            header.append(f"re_l{k}")
        for k in range(1, 5):
            header.append(f"im_l{k}")
        meta["grid"] = f"gamma_ratio 0..2.5 n={ratios.size}"
        rows = []
        for i, r in enumerate(ratios):
            row = [float(r)]
            row += [float(by_name[("eig-real", f"L{k}")].values[i]) for k in range(1, 5)]
            row += [float(by_name[("eig-imag", f"L{k}")].values[i]) for k in range(1, 5)]
            rows.append(row)
        _write_csv(path, meta, header, rows)
        return EXIT_OK
    ts = curves[0].grid
    meta["grid"] = f"t 0..{ts[-1]:g} n={ts.size}"
    rows = []
    if which == "fig2":
        for c in curves:
            gamma = float(c.name.split("=")[1])
            for i, t in enumerate(ts):
                rows.append((float(gamma), float(t), float(c.values[i])))
        _write_csv(path, meta, ["gamma_x", "t", "dqfi"], rows)
        return EXIT_OK
    dq = {c.name: c for c in curves if c.label == "dqfi"}
    cq = {c.name: c for c in curves if c.label == "cqfi"}
    for name in dq:
        gamma = float(name.split("=")[1])
        for i, t in enumerate(ts):
            rows.append((float(gamma), float(t), float(dq[name].values[i]),
                         float(cq[name].values[i])))
    _write_csv(path, meta, ["gamma_x", "t", "dqfi", "cqfi"], rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dqfi",
        description="Dissipative quantum Fisher information for vectorized "
                    "Lindblad dynamics")
    parser.add_argument("--version", action="version", version=f"dqfi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_model=True):
        if needs_model:
            p.add_argument("--model", required=True, help="model file path")
            p.add_argument("--theta", type=float, default=None,
                           help="parameter value (default: model default)")
        p.add_argument("--out", default="-", help="output CSV path (default stdout)")

    p = sub.add_parser("spectrum", help="Liouvillian eigenvalue table")
    add_common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("generator", help="dissipative generator matrix")
    add_common(p)
    p.add_argument("--t", type=float, required=True, help="evolution time")
    p.add_argument("--route", choices=("auto", "spectral", "quadrature", "fd"),
                   default="auto")
    p.set_defaults(func=cmd_generator)

    p = sub.add_parser("dqfi", help="DQFI/CQFI time sweep")
    add_common(p)
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--t1", type=float, default=None)
    p.add_argument("--nt", type=int, default=None)
    p.add_argument("--params", type=float, nargs="+", default=None,
                   help="parameter values (default: sweep section or model default)")
    p.add_argument("--route", choices=("auto", "spectral", "quadrature", "fd"),
                   default="auto")
    p.add_argument("--n", type=int, default=1, help="protocol count for the CRB")
    p.add_argument("--jobs", type=int, default=0,
                   help="worker threads for the parameter sweep (0 = cores)")
    p.set_defaults(func=cmd_dqfi)

    p = sub.add_parser("sweep", help="spectrum scan over parameter values")
    add_common(p)
    p.add_argument("--params", type=float, nargs="+", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reproduce", help="write benchmark figure CSV data")
    p.add_argument("--figure", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = os.environ.get("DQFI_LOG", "warn").lower()
    logging.basicConfig(level={"error": logging.ERROR, "warn": logging.WARNING,
                               "info": logging.INFO, "debug": logging.DEBUG
                               }.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _NUMERIC_ERRORS as exc:
        log.error("numeric failure: %s", exc)
        print(f"dqfi: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _INPUT_ERRORS as exc:
        log.error("input error: %s", exc)
        print(f"dqfi: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
