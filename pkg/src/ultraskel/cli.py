"""Command-line front end.

Exit codes: 0 success with passing certificates, 1 validation/usage error,
2 a guarantee check failed, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import UltraskelError, ValidationError
from .generators import (
    expander_fractal_level,
    gnhalf_fractal_level,
    product_tree_truncation,
)
from .metric import MeasuredMetricSpace, ingest
from .oracles import distortion_of_pair, optimal_ultrametric_distortion, subdominant
from .pipeline import (
    PipelineParams,
    build_skeleton,
    solve_measure,
    solve_measure_2plus,
)
from .ramsey import ramsey_subset
from .reporting import canonical_json, dendrogram_merges, newick
from .trees import frag_to_dot

log = logging.getLogger("ultraskel")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CERT = 2
EXIT_IO = 3


def _setup_logging():
    level = os.environ.get("ULTRASKEL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def _load_input(args) -> MeasuredMetricSpace:
    if not os.path.exists(args.input):
        raise SystemExit(_fail_io(f"no such file: {args.input}"))
    try:
        return ingest(args.input, fmt=args.format)
    except OSError as exc:
        raise SystemExit(_fail_io(f"cannot read {args.input}: {exc}"))


def _fail_io(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_IO


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise SystemExit(_fail_io(f"cannot write {path}: {exc}"))


def _labels(X: MeasuredMetricSpace, idx):
    labels = X.space.labels
    return [labels[i] if labels else str(i) for i in idx]


def cmd_skeleton(args) -> int:
    X = _load_input(args)
    if args.epsilon is not None:
        if not 0 < args.epsilon < 1:
            print("error: --epsilon must lie in (0,1)", file=sys.stderr)
            return EXIT_USAGE
        result = solve_measure(X, args.epsilon, simple=args.simple)
    elif args.delta is not None:
        result = solve_measure_2plus(X, args.delta, simple=args.simple)
    else:
        params = PipelineParams(D=args.raw_D, k=args.raw_k, tau=args.raw_tau, mode="raw")
        result = build_skeleton(X, params, simple=args.simple)

    cert = dict(result.certificate)
    if args.exact and 2 <= len(result.subset) <= 64 and not result.simple:
        from fractions import Fraction

        from .oracles import optimal_ultrametric_distortion_exact

        sub = result.space.space.dist[np.ix_(result.subset, result.subset)]
        opt = optimal_ultrametric_distortion_exact(sub.tolist())
        cert["exact_distortion_ok"] = bool(opt <= Fraction(result.params.D))
        cert["ok"] = bool(cert["ok"] and cert["exact_distortion_ok"])
    report = {
        "command": "skeleton",
        "version": __version__,
        "n": X.n,
        "mode": result.params.mode,
        "simple": result.simple,
        "subset": result.subset,
        "labels": _labels(X, result.subset),
        "dendrogram_merges": dendrogram_merges(result.subset, result.rho),
        "distortion": result.distortion,
        "exponent_s": result.exponent,
        "scale": result.scale,
        "params": {
            "D": result.params.D,
            "k": result.params.k,
            "tau": result.params.tau,
            "epsilon": result.params.epsilon,
            "delta": result.params.delta,
            "flagged": result.params.flagged,
        },
        "certificate": cert,
    }
    text = canonical_json(report)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    if args.dendrogram:
        _write(args.dendrogram, newick(_labels(X, result.subset), result.rho) + "\n")
    if args.dot:
        _write(args.dot, frag_to_dot(result.frag, X.space.labels))
    return EXIT_OK if cert["ok"] else EXIT_CERT


def cmd_ramsey(args) -> int:
    X = _load_input(args)
    if not 0 < args.epsilon < 1:
        print("error: --epsilon must lie in (0,1)", file=sys.stderr)
        return EXIT_USAGE
    w1 = w2 = np.asarray(X.mu)
    if args.derandomize:
        res = ramsey_subset(X.space, w1, w2, args.epsilon, mode="derandomized")
    else:
        if args.seed is None:
            print("error: sampled mode requires --seed", file=sys.stderr)
            return EXIT_USAGE
        res = ramsey_subset(X.space, w1, w2, args.epsilon, mode="sampled", seed=args.seed)
    cert = res.certificate
    achieved_dist = (
        distortion_of_pair(X.space.dist, res.rho, res.subset)
        if len(res.subset) > 1
        else 1.0
    )
    report = {
        "command": "ramsey",
        "version": __version__,
        "n": X.n,
        "epsilon": cert.epsilon,
        "D": cert.distortion_bound,
        "subset": res.subset,
        "labels": _labels(X, res.subset),
        "shift_interval": list(cert.shift_interval),
        "shift": cert.shift,
        "achieved": cert.achieved,
        "required": cert.required,
        "expectation": cert.expectation,
        "distortion": achieved_dist,
        "ok": bool(cert.ok and achieved_dist <= cert.distortion_bound * (1 + 1e-9)),
    }
    text = canonical_json(report)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report["ok"] else EXIT_CERT


def cmd_verify(args) -> int:
    import json

    X = _load_input(args)
    try:
        with open(args.report, "r", encoding="utf-8") as fh:
            report = json.load(fh)
    except OSError as exc:
        return _fail_io(f"cannot read {args.report}: {exc}")
    checks = [c.strip() for c in args.check.split(",") if c.strip()]
    subset = report.get("subset", [])
    verdicts = {}
    dist = np.asarray(X.space.dist)
    for check in checks:
        if check == "distortion":
            if len(subset) < 2:
                verdicts[check] = True
                continue
            sub = dist[np.ix_(subset, subset)]
            bound = report.get("D") or report.get("params", {}).get("D")
            if args.exact:
                from fractions import Fraction

                from .oracles import optimal_ultrametric_distortion_exact

                opt = optimal_ultrametric_distortion_exact(sub.tolist())
                verdicts[check] = bool(opt <= Fraction(float(bound)))
            else:
                opt = optimal_ultrametric_distortion(sub)
                verdicts[check] = bool(opt <= bound * (1 + 1e-9))
        elif check == "subdominant":
            sub = dist[np.ix_(subset, subset)]
            u = subdominant(sub).matrix
            verdicts[check] = bool(np.all(u <= sub * (1 + 1e-12)))
        elif check == "cutset":
            cert = report.get("certificate", {})
            verdicts[check] = bool(
                cert.get("cutset_min", 0.0)
                >= cert.get("bound", math.inf) - 1e-9 * max(cert.get("bound", 1.0), 1.0)
            )
        elif check == "expectation":
            exp = report.get("expectation")
            req = report.get("required")
            verdicts[check] = bool(exp is None or exp >= req * (1 - 1e-9))
        else:
            print(f"error: unknown check {check!r}", file=sys.stderr)
            return EXIT_USAGE
    out = {"command": "verify", "checks": verdicts, "ok": all(verdicts.values())}
    sys.stdout.write(canonical_json(out))
    return EXIT_OK if out["ok"] else EXIT_CERT


def cmd_gen(args) -> int:
    if args.family == "gnhalf":
        ms = gnhalf_fractal_level(args.n, args.seed)
        sidecar = {"family": "gnhalf", "n": args.n, "seed": args.seed}
    elif args.family == "expander":
        ms, spec = expander_fractal_level(args.alpha, args.n, args.seed)
        sidecar = {
            "family": "expander",
            "n": args.n,
            "alpha": args.alpha,
            "seed": args.seed,
            "delta": spec.levels[0].delta,
        }
    elif args.family == "product":
        _, spec = expander_fractal_level(args.alpha, args.n, args.seed)
        spec = type(spec)(spec.alpha, spec.levels * args.levels)
        frac = product_tree_truncation(spec, args.levels)
        ms = frac.space
        sidecar = {
            "family": "product",
            "n": args.n,
            "alpha": args.alpha,
            "levels": args.levels,
            "seed": args.seed,
        }
    else:
        print(f"error: unknown family {args.family!r}", file=sys.stderr)
        return EXIT_USAGE
    payload = {
        "labels": [str(i) for i in range(ms.n)],
        "distances": ms.dist,
        "measure": [1.0] * ms.n,
    }
    text = canonical_json(payload)
    if args.out:
        _write(args.out, text)
        _write(args.out + ".spec.json", canonical_json(sidecar))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ultraskel")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_io(sp):
        sp.add_argument("--input", required=True, help="metric input file")
        sp.add_argument("--format", choices=["csv", "json", "edges"], default=None)
        sp.add_argument("--out", default=None, help="report JSON path (default stdout)")

    sk = sub.add_parser("skeleton", help="extract a certified ultrametric skeleton")
    add_io(sk)
    mode = sk.add_mutually_exclusive_group(required=True)
    mode.add_argument("--epsilon", type=float, default=None)
    mode.add_argument("--delta", type=float, default=None)
    mode.add_argument("--raw-D", type=float, default=None, dest="raw_D")
    sk.add_argument("--raw-k", type=int, default=2, dest="raw_k")
    sk.add_argument("--raw-tau", type=float, default=None, dest="raw_tau")
    sk.add_argument("--simple", action="store_true", help="skip metric composition")
    sk.add_argument("--exact", action="store_true", help="exact-rational oracle mode")
    sk.add_argument("--dendrogram", default=None, help="write Newick dendrogram here")
    sk.add_argument("--dot", default=None, help="write DOT of the final tree here")
    sk.set_defaults(func=cmd_skeleton)

    rm = sub.add_parser("ramsey", help="weighted Ramsey subset extraction")
    add_io(rm)
    rm.add_argument("--epsilon", type=float, required=True)
    rm.add_argument("--derandomize", action="store_true")
    rm.add_argument("--seed", type=int, default=None)
    rm.set_defaults(func=cmd_ramsey)

    vf = sub.add_parser("verify", help="re-check a report against its input")
    add_io(vf)
    vf.add_argument("--report", required=True)
    vf.add_argument("--check", default="distortion,cutset")
    vf.add_argument("--exact", action="store_true")
    vf.set_defaults(func=cmd_verify)

    gn = sub.add_parser("gen", help="adversarial instance generators")
    gn.add_argument("--family", choices=["gnhalf", "expander", "product"], required=True)
    gn.add_argument("--n", type=int, required=True)
    gn.add_argument("--alpha", type=float, default=1.0)
    gn.add_argument("--levels", type=int, default=1)
    gn.add_argument("--seed", type=int, required=True)
    gn.add_argument("--out", default=None)
    gn.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "skeleton" and args.raw_D is not None:
        if args.raw_tau is None:
            print("error: --raw-D requires --raw-tau", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_USAGE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UltraskelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
