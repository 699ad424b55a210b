"""Command-line entry point.

Subcommands: eval, scan, bounds, ek (trace | verify | enumerate | cover),
dim, push, bernoulli.  Results go to stdout or --out as JSON/CSV (scan
fields also support a binary dump); a metadata line (tool version, config
hash, seed, wall time) always goes to stderr so result files stay
byte-reproducible.  Exit codes: 0 success, 1 domain/regime errors,
2 budget errors, 64 usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .bounds import (
    bernoulli_dim_lower,
    bernoulli_unbiased_dim_lower,
    covering_bound,
    delta_complex,
    delta_higherdim,
    delta_real_noncollinear,
    solve_flattening_epsilon,
)
from .dimensions import alpha_estimate, dim_inf_estimate, dim_q_estimate, lq_moment
from .errors import BudgetError, ConvergenceError, DomainError
from .fourier import grid_scan, mu_hat, scanfield_to_binary, scanfield_to_csv
from .measures import (
    DiscreteMeasure,
    IFSDescriptor,
    finite_approximation,
    measure_from_csv,
)
from .pushforward import AnalyticMap, decay_profile, frostman_estimate
from .sparse import (
    covering_report,
    digit_transition_bound,
    ek_trace,
    enumerate_digit_sequences,
    verify_digit_inequality,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_BUDGET = 2
EXIT_USAGE = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def parse_complex(text: str) -> complex:
    """Parse 'a+bi' command-line syntax ('0.5+0.5i', '-0.3i', '1')."""
    try:
        return complex(text.strip().replace("i", "j"))
    except ValueError as exc:
        raise _UsageError(f"cannot parse complex number {text!r}") from exc


def _parse_complex_list(text: str) -> list[complex]:
    return [parse_complex(part) for part in text.split(",") if part.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _parse_radii(text: str) -> list[float]:
    # either a comma list or "a:b:count" geometric
    if ":" in text:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
        ratio = (b / a) ** (1.0 / (n - 1))
        return [a * ratio**k for k in range(n)]
    return _parse_float_list(text)


def _ifs_from_args(args) -> IFSDescriptor:
    if getattr(args, "ifs", None):
        with open(args.ifs, "r", encoding="utf-8") as fh:
            return IFSDescriptor.from_json(json.load(fh))
    if args.lam is None:
        raise _UsageError("need --lambda (or --ifs FILE)")
    digits = _parse_complex_list(args.digits) if args.digits else [-1.0, 1.0]
    probs = (
        _parse_float_list(args.probs)
        if args.probs
        else [1.0 / len(digits)] * len(digits)
    )
    return IFSDescriptor(parse_complex(args.lam), tuple(digits), tuple(probs))


def _add_ifs_flags(sub):
    sub.add_argument("--lambda", dest="lam", help="contraction ratio, a+bi syntax")
    sub.add_argument("--digits", help="comma list of digits (default -1,1)")
    sub.add_argument("--probs", help="comma list of weights (default uniform)")
    sub.add_argument("--ifs", help="JSON file with {lambda, digits, probs}")


def _emit(args, text: str, binary: bytes | None = None):
    if args.out:
        mode = "wb" if binary is not None else "w"
        with open(args.out, mode) as fh:
            fh.write(binary if binary is not None else text)
    else:
        if binary is not None:
            sys.stdout.buffer.write(binary)
        else:
            sys.stdout.write(text)


def _json_dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _cx(z: complex) -> list[float]:
    return [z.real, z.imag]


def _cmd_eval(args) -> str:
    ifs = _ifs_from_args(args)
    rows = []
    for xi in _parse_complex_list(args.xi):
        val = mu_hat(ifs, xi, args.tol)
        rows.append({"xi": _cx(xi), "mu_hat": _cx(val), "abs": abs(val)})
    return _json_dump({"results": rows})


def _cmd_scan(args):
    ifs = _ifs_from_args(args)
    fieldobj = grid_scan(
        ifs, args.T, args.subgrid_k, args.tol, workers=args.workers
    )
    if args.format == "csv":
        return scanfield_to_csv(fieldobj)
    if args.format == "bin":
        return scanfield_to_binary(fieldobj)
    cells = [[i, j, v] for (i, j), v in sorted(fieldobj.cells.items())]
    return _json_dump(
        {"T": fieldobj.T, "subgrid_k": fieldobj.subgrid_k, "cells": cells}
    )


def _cmd_bounds(args):
    p = _parse_float_list(args.p)
    lam = parse_complex(args.lam)
    regime = args.regime
    if regime == "auto":
        regime = "complex" if lam.imag != 0.0 else "real_noncollinear"
    if args.sweep:
        lo, hi, n = args.sweep.split(":")
        eps_values = np.geomspace(float(lo), float(hi), int(n))
        lines = ["lambda_re,lambda_im,epsilon,delta,valid"]
        for eps in eps_values:
            b = _bounds_dispatch(lam, p, float(eps), regime, args.d)
            lines.append(
                f"{lam.real!r},{lam.imag!r},{eps!r},{b.delta!r},{int(b.valid)}"
            )
        return "\n".join(lines) + "\n"
    bound = _bounds_dispatch(lam, p, args.epsilon, regime, args.d)
    doc = bound.to_json()
    if args.kappa is not None:
        eps, sigma, root = solve_flattening_epsilon(lam, p, args.kappa, regime, args.d)
        doc["flattening"] = {"kappa": args.kappa, "epsilon": eps, "sigma": sigma,
                             "delta_at_root": root.delta}
    if args.covering_N is not None:
        doc["covering_bound"] = covering_bound(lam, p, args.epsilon, args.covering_N)
        doc["covering_N"] = args.covering_N
    return _json_dump(doc)


def _bounds_dispatch(lam, p, epsilon, regime, d):
    if regime == "complex":
        return delta_complex(lam, p, epsilon)
    if regime == "real_noncollinear":
        return delta_real_noncollinear(lam.real, p, epsilon)
    if regime == "higher_dim":
        return delta_higherdim(lam.real, p, epsilon, d)
    raise _UsageError(f"unknown regime {regime!r}")


def _cmd_ek(args):
    lam = parse_complex(args.lam)
    if args.ek_cmd == "trace":
        trace = ek_trace(lam, parse_complex(args.t), args.N)
        return _json_dump(
            {
                "t": _cx(trace.t),
                "N": trace.N,
                "r": [int(x) for x in trace.r],
                "eps": [float(x) for x in trace.eps],
                "rho": trace.rho,
                "good_indices": sorted(trace.good_indices),
            }
        )
    if args.ek_cmd == "verify":
        bound, branching = digit_transition_bound(lam)
        violations = verify_digit_inequality(lam, args.samples, args.N, args.seed)
        return _json_dump(
            {
                "violations": violations,
                "samples": args.samples,
                "N": args.N,
                "bound": bound,
                "branching": branching,
                "seed": args.seed,
            }
        )
    if args.ek_cmd == "enumerate":
        count, bound = enumerate_digit_sequences(lam, args.eps_tilde, args.N)
        return _json_dump(
            {"count": count, "bound": bound, "epsilon_tilde": args.eps_tilde,
             "N": args.N}
        )
    if args.ek_cmd == "cover":
        ifs = _ifs_from_args(args)
        report = covering_report(
            ifs, args.epsilon, args.N, args.subgrid_k,
            tol=args.tol, workers=args.workers, cell_budget=args.budget,
        )
        return _json_dump(report.to_json())
    raise _UsageError("ek needs one of: trace, verify, enumerate, cover")


def _load_measure(args) -> DiscreteMeasure:
    if args.measure_csv:
        with open(args.measure_csv, "r", encoding="utf-8") as fh:
            return measure_from_csv(fh.read())
    ifs = _ifs_from_args(args)
    return finite_approximation(ifs, args.depth, atom_budget=args.budget)


def _cmd_dim(args):
    mu = _load_measure(args)
    doc = {}
    d2, e2 = dim_q_estimate(mu, args.q, args.n_min, args.n_max)
    doc["dim_q"] = {"q": args.q, "estimate": d2, "stderr": e2}
    dinf, einf = dim_inf_estimate(mu, args.n_min, args.n_max)
    doc["dim_inf"] = {"estimate": dinf, "stderr": einf}
    if args.T_values:
        alpha, via = alpha_estimate(mu, _parse_radii(args.T_values), args.step)
        doc["alpha"] = {"estimate": alpha, "dim2_via_alpha": via}
    if args.format == "csv":
        lines = ["n,s_n,log_s_n"]
        for n in range(args.n_min, args.n_max + 1):
            s_n = lq_moment(mu, n, args.q)
            lines.append(f"{n},{s_n!r},{math.log(s_n)!r}")
        return "\n".join(lines) + "\n"
    return _json_dump(doc)


def _cmd_push(args):
    ifs = _ifs_from_args(args)
    f = AnalyticMap(tuple(_parse_complex_list(args.coeffs)))
    profile = decay_profile(
        f, ifs, _parse_radii(args.radii),
        directions=args.directions, approx_depth=args.depth, seed=args.seed,
        atom_budget=args.budget,
    )
    if args.format == "csv":
        lines = ["T,max_abs_ft,predicted_exponent"]
        for t_rad, v in zip(profile.radii, profile.annulus_max):
            lines.append(f"{t_rad!r},{v!r},{profile.predicted_exponent!r}")
        return "\n".join(lines) + "\n"
    return _json_dump(profile.to_json())


def _cmd_bernoulli(args):
    lam = parse_complex(args.lam)
    if args.unbiased:
        bound = bernoulli_unbiased_dim_lower(lam)
    else:
        bound = bernoulli_dim_lower(lam, args.p_bias)
    doc = bound.to_json()
    if args.frostman:
        ifs = IFSDescriptor(lam, (-1.0, 1.0), (args.p_bias, 1.0 - args.p_bias))
        doc["frostman_estimate"] = frostman_estimate(ifs, seed=args.seed)
    return _json_dump(doc)


def build_parser() -> _Parser:
    parser = _Parser(prog="ssfourier", description=__doc__)
    parser.add_argument("--config", help="JSON file whose values override flags")
    parser.add_argument("--format", choices=["json", "csv", "bin"], default="json")
    parser.add_argument("--out", help="write results to this path")
    parser.add_argument(
        "--workers",
        type=int,
        default=int(os.environ.get("SSFOURIER_WORKERS", "0")) or None,
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--budget", type=int, default=None)
    sub = parser.add_subparsers(dest="command")

    p_eval = sub.add_parser("eval", help="evaluate mu_hat at frequencies")
    _add_ifs_flags(p_eval)
    p_eval.add_argument("--xi", required=True, help="comma list of frequencies")
    p_eval.add_argument("--tol", type=float, default=1e-12)

    p_scan = sub.add_parser("scan", help="frequency-grid scan of |mu_hat|")
    _add_ifs_flags(p_scan)
    p_scan.add_argument("--T", type=float, required=True)
    p_scan.add_argument("--subgrid-k", dest="subgrid_k", type=int, default=4)
    p_scan.add_argument("--tol", type=float, default=1e-9)

    p_bounds = sub.add_parser("bounds", help="closed-form covering bounds")
    p_bounds.add_argument("--lambda", dest="lam", required=True)
    p_bounds.add_argument("--p", required=True, help="comma list of weights")
    p_bounds.add_argument("--epsilon", type=float, default=0.01)
    p_bounds.add_argument(
        "--regime", choices=["auto", "complex", "real_noncollinear", "higher_dim"],
        default="auto",
    )
    p_bounds.add_argument("--d", type=int, default=3)
    p_bounds.add_argument("--kappa", type=float, default=None,
                          help="also solve kappa - 2 eps = delta(eps)")
    p_bounds.add_argument("--covering-N", dest="covering_N", type=int, default=None)
    p_bounds.add_argument("--sweep", help="epsilon sweep lo:hi:count as CSV")

    p_ek = sub.add_parser("ek", help="Erdos-Kahane digit diagnostics")
    ek_sub = p_ek.add_subparsers(dest="ek_cmd")
    for name in ("trace", "verify", "enumerate", "cover"):
        q = ek_sub.add_parser(name)
        q.add_argument("--N", type=int, required=True)
        if name == "trace":
            q.add_argument("--lambda", dest="lam", required=True)
            q.add_argument("--t", required=True)
        elif name == "verify":
            q.add_argument("--lambda", dest="lam", required=True)
            q.add_argument("--samples", type=int, default=10000)
            q.add_argument("--seed", type=int, default=0)
        elif name == "enumerate":
            q.add_argument("--lambda", dest="lam", required=True)
            q.add_argument("--eps-tilde", dest="eps_tilde", type=float, required=True)
        else:
            _add_ifs_flags(q)
            q.add_argument("--epsilon", type=float, required=True)
            q.add_argument("--subgrid-k", dest="subgrid_k", type=int, default=4)
            q.add_argument("--tol", type=float, default=1e-9)

    p_dim = sub.add_parser("dim", help="dimension estimators")
    _add_ifs_flags(p_dim)
    p_dim.add_argument("--measure-csv", dest="measure_csv")
    p_dim.add_argument("--depth", type=int, default=8)
    p_dim.add_argument("--q", type=float, default=2.0)
    p_dim.add_argument("--n-min", dest="n_min", type=int, default=1)
    p_dim.add_argument("--n-max", dest="n_max", type=int, default=8)
    p_dim.add_argument("--T-values", dest="T_values",
                       help="energy radii (comma list or a:b:count)")
    p_dim.add_argument("--step", type=float, default=0.5)

    p_push = sub.add_parser("push", help="push-forward decay profile")
    _add_ifs_flags(p_push)
    p_push.add_argument("--coeffs", required=True,
                        help="polynomial coefficients c0,c1,... (a+bi syntax)")
    p_push.add_argument("--radii", required=True, help="comma list or a:b:count")
    p_push.add_argument("--directions", type=int, default=256)
    p_push.add_argument("--depth", type=int, default=14)

    p_bern = sub.add_parser("bernoulli", help="Bernoulli dimension lower bounds")
    p_bern.add_argument("--lambda", dest="lam", required=True)
    p_bern.add_argument("--p-bias", dest="p_bias", type=float, default=0.5)
    p_bern.add_argument("--unbiased", action="store_true")
    p_bern.add_argument("--frostman", action="store_true")
    return parser


_COMMANDS = {
    "eval": _cmd_eval,
    "scan": _cmd_scan,
    "bounds": _cmd_bounds,
    "ek": _cmd_ek,
    "dim": _cmd_dim,
    "push": _cmd_push,
    "bernoulli": _cmd_bernoulli,
}


def _config_hash(argv) -> str:
    return hashlib.sha256(json.dumps(list(argv)).encode()).hexdigest()[:16]


def _error_doc(kind: str, message: str) -> str:
    return _json_dump({"error": {"kind": kind, "message": message}})


def run(argv) -> int:
    """Execute one CLI invocation; returns the process exit code."""
    argv = list(argv)
    start = time.monotonic()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            # config values take precedence over flags
            with open(args.config, "r", encoding="utf-8") as fh:
                for key, value in json.load(fh).items():
                    setattr(args, key, value)
        if args.workers is None:
            args.workers = 1
        if not args.command:
            raise _UsageError("missing subcommand")
        if args.command == "ek" and not getattr(args, "ek_cmd", None):
            raise _UsageError("ek needs one of: trace, verify, enumerate, cover")
        result = _COMMANDS[args.command](args)
    except _UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except BudgetError as exc:
        sys.stdout.write(_error_doc("budget", str(exc)))
        return EXIT_BUDGET
    except (DomainError, ConvergenceError, OverflowError, FileNotFoundError) as exc:
        sys.stdout.write(_error_doc(type(exc).__name__, str(exc)))
        return EXIT_DOMAIN
    if isinstance(result, bytes):
        _emit(args, "", binary=result)
    else:
        _emit(args, result)
    meta = {
        "tool": "ssfourier",
        "version": __version__,
        "config_hash": _config_hash(argv),
        "seed": getattr(args, "seed", None),
        "wall_time_s": round(time.monotonic() - start, 6),
    }
    sys.stderr.write(_json_dump(meta))
    return EXIT_OK


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
