"""Command-line experiment runner.

Subcommands reproduce the study artifacts as CSV/PBM files: sub-step root
candidates, convergence sweeps, error/CPU benchmarks, stability rasters and
angles, admissible-ratio bounds, and adaptive traces.

Exit codes: 0 success, 2 bad arguments, 3 solver failure.
"""
from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import adaptivity, composition, problems, stability
from .bdf_core import ImplicitSolveConfig, bdf_step
from .errors import CbdfError, NoAdmissibleRoot, UnknownProblem
from .problems import bootstrap

_TABLE_TOL = ImplicitSolveConfig(tol=1e-13, max_iterations=200)


@dataclass
class RunConfig:
    """Parsed arguments of one CLI invocation."""

    subcommand: str
    options: dict = field(default_factory=dict)
    output_path: Optional[str] = None
    seed: int = 0


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def _load_problem(name: str) -> problems.ODEProblem:
    if name.endswith(".json"):
        with open(name) as fh:
            return problems.from_record(json.load(fh))
    return problems.builtin(name)


def integrate_fixed(problem, scheme: str, p: int, tau: float,
                    cfg: ImplicitSolveConfig = _TABLE_TOL) -> dict:
    """Fixed-step run with exact bootstrap; returns {step index: error}.

    The composed scheme of base order p carries p history points and has
    order p + 1.
    """
    window = bootstrap(problem, p, tau, policy="exact")
    n_total = round((problem.t_end - problem.t0) / tau)
    errors = {}
    prev_a1 = None
    for n in range(p, n_total + 1):
        if scheme == "bdf":
            window, y = bdf_step(problem.rhs, window, tau, cfg)
            y_real = y.real
        elif scheme == "composed":
            window, out = composition.composed_step(problem.rhs, window, tau, cfg,
                                                    prev_alpha1=prev_a1)
            prev_a1 = out.setup.alpha1
            y_real = out.y_real
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        t_n = window.times[-1].real
        errors[n] = float(np.max(np.abs(problem.exact(t_n) - y_real)))
    return errors


def global_error(errors: dict, start: int, n_total: int) -> float:
    """Trapezoid-style average of per-step errors from the first computed index."""
    body = sum(errors[n] for n in range(start, n_total))
    return (body + errors[n_total] / 2.0) / n_total


def run_convergence(problem, scheme: str, p_list, tau_list, out_path) -> list:
    """Global-error sweep with per-order least-squares slopes."""
    rows = []
    for p in p_list:
        errs = []
        for tau in tau_list:
            n_total = round((problem.t_end - problem.t0) / tau)
            e = global_error(integrate_fixed(problem, scheme, p, tau), p, n_total)
            errs.append(e)
        slope = float(np.polyfit(np.log(tau_list), np.log(errs), 1)[0])
        for tau, e in zip(tau_list, errs):
            rows.append((scheme, p, tau, e, slope))
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write("scheme,p,tau,global_error,slope\n")
            for scheme_, p, tau, e, slope in rows:
                fh.write(f"{scheme_},{p},{_fmt(tau)},{_fmt(e)},{_fmt(slope)}\n")
    return rows


def _timed(fn, repetitions: int = 3) -> float:
    """Median wall-clock seconds over ``repetitions``, one discarded warmup."""
    fn()
    samples = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def run_bench(problem, p_list, tau_list, out_path, repetitions: int = 3) -> list:
    """Error and CPU ratios: base-order-p scheme vs the equal-order composed flow.

    The composed flow of order p uses base order p - 1, so both sides have
    the same approximation order. Ratios follow err_base/err_composed and
    cpu_base/cpu_composed.
    """
    rows = []
    for p in p_list:
        if p < 2:
            raise ValueError("bench compares equal orders; needs p >= 2")
        for tau in tau_list:
            n_total = round((problem.t_end - problem.t0) / tau)
            err_b = global_error(integrate_fixed(problem, "bdf", p, tau), p, n_total)
            err_c = global_error(integrate_fixed(problem, "composed", p - 1, tau), p - 1, n_total)
            cpu_b = _timed(lambda: integrate_fixed(problem, "bdf", p, tau), repetitions)
            cpu_c = _timed(lambda: integrate_fixed(problem, "composed", p - 1, tau), repetitions)
            rows.append((p, tau, err_b, err_c, err_b / err_c, cpu_b, cpu_c, cpu_b / cpu_c))
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write("p,tau,err_bdf,err_composed,ratio_err,cpu_bdf,cpu_composed,ratio_cpu\n")
            for p, tau, eb, ec, re_, cb, cc, rc in rows:
                fh.write(
                    f"{p},{_fmt(tau)},{_fmt(eb)},{_fmt(ec)},{_fmt(re_)},"
                    f"{_fmt(cb)},{_fmt(cc)},{_fmt(rc)}\n"
                )
    return rows


def run_roots(p: int, ratios=None, stream=None) -> complex:
    """Print every sub-step root candidate and mark the selected branch.

    When no candidate has a positive real part, all roots are still listed
    and no branch is marked.
    """
    stream = stream if stream is not None else sys.stdout
    if ratios is None:
        full = tuple(float(j - 1) for j in range(1, p + 1))
    else:
        full = (0.0,) + tuple(float(r) for r in ratios)
        if len(full) != p:
            raise ValueError(f"expected {p - 1} ratios r2..rp, got {len(full) - 1}")
    poly = composition.alpha1_polynomial(full)
    from .polyroot import find_roots

    roots = find_roots(poly)
    try:
        selected = composition.solve_alpha1(full)
    except NoAdmissibleRoot:
        selected = None
    stream.write(f"sub-step root candidates, base order {p}, ratios {full}\n")
    stream.write("re_alpha1,im_alpha1,residual,selected\n")
    for z in roots:
        if z.real > 0:
            res = abs(composition.G_coefficients(z, full)[-1])
        else:
            res = abs(poly(z))
        mark = "*" if selected is not None and abs(z - selected) < 1e-13 * (1 + abs(z)) else ""
        stream.write(f"{_fmt(z.real)},{_fmt(z.imag)},{_fmt(res)},{mark}\n")
    return selected


def run_stability(order: int, scheme: str, args, stream=None) -> None:
    stream = stream if stream is not None else sys.stdout
    if args.angle:
        angle = stability.stability_angle(order, scheme=scheme)
        stream.write(f"{angle:.3f}\n")
        return
    needed = [args.xmin, args.xmax, args.ymin, args.ymax, args.nx, args.ny, args.out]
    if any(v is None for v in needed):
        raise ValueError("raster mode needs --xmin --xmax --ymin --ymax --nx --ny --out")
    region = stability.region_raster(
        order, (args.xmin, args.xmax, args.ymin, args.ymax), args.nx, args.ny, scheme=scheme
    )
    if args.out.endswith(".csv"):
        stability.region_to_csv(region, args.out)
    elif args.out.endswith(".pbm"):
        stability.region_to_pbm(region, args.out)
    else:
        raise ValueError("--out must end in .csv or .pbm")


def run_adaptive(problem, p: int, tol: float, tau0: float, clamps: bool, out_path) -> None:
    ctl = adaptivity.StepController(p=p, tol=tol)
    rec = adaptivity.adaptive_drive(problem, p, tau0, ctl, clamps=clamps)
    if out_path:
        rec.write_csv(out_path)


def _int_list(text: str):
    return [int(v) for v in text.split(",") if v]


def _float_list(text: str):
    return [float(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cbdf", description=__doc__)
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized sweeps")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("roots", help="sub-step fraction candidates for one base order")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--ratios", type=_float_list, default=None, help="r2,...,rp")

    sp = sub.add_parser("converge", help="global-error convergence sweep")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--scheme", choices=("bdf", "composed"), required=True)
    sp.add_argument("--p", type=_int_list, required=True)
    sp.add_argument("--taus", type=_float_list, required=True)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("bench", help="error and CPU ratios at equal order")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--p", type=_int_list, required=True)
    sp.add_argument("--taus", type=_float_list, required=True)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("stability", help="stability raster or sector angle")
    sp.add_argument("--order", type=int, required=True)
    sp.add_argument("--scheme", choices=("composed", "bdf"), default="composed")
    sp.add_argument("--angle", action="store_true")
    sp.add_argument("--xmin", type=float)
    sp.add_argument("--xmax", type=float)
    sp.add_argument("--ymin", type=float)
    sp.add_argument("--ymax", type=float)
    sp.add_argument("--nx", type=int)
    sp.add_argument("--ny", type=int)
    sp.add_argument("--out")

    sp = sub.add_parser("bounds", help="admissible step-ratio lower bound")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--mode", choices=("first", "steady"), required=True)

    sp = sub.add_parser("adaptive", help="error-controlled adaptive trace")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--tol", type=float, required=True)
    sp.add_argument("--tau0", type=float, required=True)
    sp.add_argument("--no-clamps", action="store_true")
    sp.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig(
        subcommand=args.subcommand,
        options={k: v for k, v in vars(args).items() if k not in ("subcommand", "seed", "out")},
        output_path=getattr(args, "out", None),
        seed=args.seed,
    )
    try:
        opts = cfg.options
        if cfg.subcommand == "roots":
            run_roots(opts["p"], opts["ratios"])
        elif cfg.subcommand == "converge":
            run_convergence(
                _load_problem(opts["problem"]), opts["scheme"], opts["p"],
                opts["taus"], cfg.output_path,
            )
        elif cfg.subcommand == "bench":
            run_bench(_load_problem(opts["problem"]), opts["p"], opts["taus"], cfg.output_path)
        elif cfg.subcommand == "stability":
            run_stability(opts["order"], opts["scheme"], args)
        elif cfg.subcommand == "bounds":
            mode = "first-step" if opts["mode"] == "first" else "steady"
            print(f"{adaptivity.min_ratio(opts['p'], mode):.4f}")
        elif cfg.subcommand == "adaptive":
            run_adaptive(
                _load_problem(opts["problem"]), opts["p"], opts["tol"], opts["tau0"],
                clamps=not opts["no_clamps"], out_path=cfg.output_path,
            )
    except (UnknownProblem, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CbdfError as exc:
        # NoConvergence / NoAdmissibleRoot and kin
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
