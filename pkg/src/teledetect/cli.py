"""Command-line front end.

Reports are JSON on stdout; a one-line human summary goes to stderr.  Errors
print a single ``teledetect-error: <kind>: <message>`` line to stderr and exit
nonzero (2 usage, 3 parse, 4 validation).  Inconclusive verdicts exit 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import fef as fef_mod
from . import gamma, linalg, witness
from .errors import StateParseError, StateValidationError, UsageError
from .statefile import (
    encode_complex,
    file_digest,
    parse_state,
    parse_unitary,
    triples_certificate,
    write_state,
)
from .verdict import Verdict

ERROR_PREFIX = "teledetect-error"
RESTARTS_ENV = "TELEDETECT_RESTARTS"
EXIT_CODES = {"usage": 2, "parse": 3, "validation": 4}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_restarts() -> int:
    raw = os.environ.get(RESTARTS_ENV)
    if raw is None:
        return 32
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{RESTARTS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError(f"{RESTARTS_ENV} must be >= 1")
    return value


def _add_search_flags(p, tol=False, margin=False):
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    if tol:
        p.add_argument("--tol", type=float, default=1e-6, help="ideal_tol")
    if margin:
        p.add_argument("--margin", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="teledetect", description="Teleportation-resource detection")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="write a state file")
    gsub = gen.add_subparsers(dest="family", required=True, parser_class=_Parser)
    bell = gsub.add_parser("bell")
    bell.add_argument("--n", type=int, required=True)
    bell.add_argument("-o", "--output", required=True)
    rand = gsub.add_parser("random")
    rand.add_argument("kind", choices=["pure", "density", "product", "werner"])
    size = rand.add_mutually_exclusive_group()
    size.add_argument("--n", type=int)
    size.add_argument("--d", type=int)
    rand.add_argument("--p", type=float)
    rand.add_argument("--rank", type=int)
    rand.add_argument("--seed", type=int, required=True)
    rand.add_argument("-o", "--output", required=True)

    ideal = sub.add_parser("detect-ideal")
    ideal.add_argument("--state", required=True)
    _add_search_flags(ideal, tol=True)

    sep = sub.add_parser("separability")
    sep.add_argument("--state", required=True)
    _add_search_flags(sep, margin=True)

    f = sub.add_parser("fef")
    f.add_argument("--state", required=True)
    f.add_argument("--d", type=int, required=True)
    f.add_argument("--force-optimizer", action="store_true")
    _add_search_flags(f, margin=True)

    wit = sub.add_parser("witness")
    wsub = wit.add_subparsers(dest="action", required=True, parser_class=_Parser)
    we = wsub.add_parser("eval")
    we.add_argument("--state", required=True)
    we.add_argument("--d", type=int, required=True)
    we.add_argument("--u")
    wo = wsub.add_parser("optimality")
    wo.add_argument("--d", type=int, required=True)
    wo.add_argument("--u")
    wd = wsub.add_parser("detect")
    wd.add_argument("--state", required=True)
    wd.add_argument("--d", type=int, required=True)
    wd.add_argument("--force-optimizer", action="store_true")
    _add_search_flags(wd, margin=True)
    return parser


# ---------------------------------------------------------------- commands

def _gen(args) -> dict:
    if args.family == "bell":
        state = linalg.bell_tensor(args.n)
    else:
        if args.kind == "werner":
            if args.p is None:
                raise UsageError("werner needs --p")
            if args.n is not None:
                raise UsageError("werner states are bipartite; use --d")
            state = linalg.werner(args.p, args.d or 2)
        else:
            if args.n is None and args.d is None:
                raise UsageError("random states need --n (qubits per side) or --d (local dimension)")
            layout = (linalg.SubsystemLayout.multiqubit(args.n) if args.n is not None
                      else linalg.SubsystemLayout.bipartite(args.d))
            if args.kind == "pure":
                state = linalg.random_haar_pure(layout, args.seed)
            elif args.kind == "product":
                state = linalg.random_product_pure(layout, args.seed)
            else:
                state = linalg.random_density(layout, args.rank, args.seed)
    write_state(state, args.output)
    return {"written": args.output, "kind": "pure" if isinstance(state, linalg.PureState) else "density"}


def _search_config(args, **extra) -> gamma.SearchConfig:
    kw = dict(restarts=args.restarts or _default_restarts(), seed=args.seed, jobs=args.jobs, **extra)
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter
    return gamma.SearchConfig(**kw)


def _fef_config(args) -> fef_mod.FefConfig:
    kw = dict(restarts=args.restarts or _default_restarts(), seed=args.seed, jobs=args.jobs,
              force_optimizer=getattr(args, "force_optimizer", False))
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter
    if args.margin is not None:
        kw["usefulness_margin"] = args.margin
    return fef_mod.FefConfig(**kw)


def _gamma_report(res: gamma.GammaSearchResult) -> dict:
    return {
        "verdict": str(res.verdict),
        "certificate": {"type": "triples", "value": res.best_value,
                        "triples": triples_certificate(res.best_triples)},
        "diagnostics": {"best_value": res.best_value, "restarts_used": res.restarts_used,
                        "converged": res.converged, "best_restart": res.best_restart},
    }


def _detect_ideal(args) -> dict:
    state = parse_state(args.state)
    res = gamma.detect_ideal_resource(state, _search_config(args, ideal_tol=args.tol))
    return {"seed": args.seed, "qubits_per_side": state.layout.qubits_per_side, **_gamma_report(res)}


def _separability(args) -> dict:
    state = parse_state(args.state)
    extra = {} if args.margin is None else {"margin": args.margin}
    res = gamma.separability_test(state, _search_config(args, **extra))
    n = state.layout.qubits_per_side
    out = {"seed": args.seed, "qubits_per_side": n, **_gamma_report(res)}
    out["diagnostics"]["separable_bound"] = 2.0 ** -n
    return out


def _fef(args) -> dict:
    state = parse_state(args.state)
    tv = fef_mod.is_useful(state, args.d, _fef_config(args))
    return {
        "seed": args.seed,
        "d": args.d,
        "verdict": str(tv.useful),
        "certificate": {"type": "fef_unitary", "value": tv.fef.value,
                        "unitary": encode_complex(tv.fef.optimizer_unitary)},
        "diagnostics": {"fef": tv.fef.value, "fidelity": tv.fidelity, "method": str(tv.fef.method),
                        "restarts_used": tv.fef.restarts_used, "converged": tv.fef.converged,
                        "classical_threshold": 1.0 / args.d},
    }


def _load_u(path, d):
    if path is None:
        return np.eye(d, dtype=complex)
    u = parse_unitary(path)
    if u.shape[0] != d:
        raise UsageError(f"unitary file is {u.shape[0]}x{u.shape[0]} but --d is {d}")
    return u


def _witness(args) -> dict:
    if args.action == "optimality":
        w = witness.witness_rotated(_load_u(args.u, args.d))
        cert = witness.check_optimality(w)
        return {
            "d": args.d,
            "optimal": cert.optimal,
            "gram_rank": cert.gram_rank,
            "max_residual": float(np.max(np.abs(cert.annihilation_residuals))),
            "vector_count": len(cert.vectors),
        }
    state = parse_state(args.state)
    if args.action == "eval":
        u = _load_u(args.u, args.d)
        value = witness.evaluate(witness.witness_rotated(u), linalg.as_bipartite(state, args.d))
        return {
            "d": args.d,
            "verdict": str(Verdict.USEFUL if value < 0 else Verdict.INCONCLUSIVE),
            "certificate": {"type": "witness_unitary", "value": value, "unitary": encode_complex(u)},
            "diagnostics": {"witness_value": value},
        }
    det = witness.detect_useful_via_witness(state, args.d, _fef_config(args))
    return {
        "seed": args.seed,
        "d": args.d,
        "verdict": str(det.verdict),
        "certificate": {"type": "witness_unitary", "value": det.minimum, "unitary": encode_complex(det.unitary)},
        "diagnostics": {"minimum": det.minimum},
    }


COMMANDS = {
    "gen": _gen,
    "detect-ideal": _detect_ideal,
    "separability": _separability,
    "fef": _fef,
    "witness": _witness,
}


def _summary(report: dict) -> str:
    parts = [report["command"]]
    if "verdict" in report:
        parts.append(f"verdict={report['verdict']}")
    diag = report.get("diagnostics", {})
    for key in ("best_value", "fef", "fidelity", "minimum", "witness_value"):
        if key in diag:
            parts.append(f"{key}={diag[key]:.12g}")
    for key in ("optimal", "gram_rank", "written"):
        if key in report:
            parts.append(f"{key}={report[key]}")
    return " ".join(parts)


def run(argv=None) -> dict:
    """Parse ``argv`` and execute; returns the report (raises package errors)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    body = COMMANDS[args.command](args)
    name = args.command
    if args.command == "witness":
        name = f"witness {args.action}"
    report = {"command": name, "argv": argv}
    state_path = getattr(args, "state", None)
    if state_path is not None:
        report["input_digest"] = file_digest(state_path)
    report.update(body)
    report["wall_time_s"] = time.perf_counter() - start
    return report


def main(argv=None) -> int:
    try:
        report = run(argv)
    except StateValidationError as exc:
        kind, msg = "validation", str(exc)
    except StateParseError as exc:
        kind, msg = "parse", str(exc)
    except (UsageError, ValueError) as exc:
        kind, msg = "usage", str(exc)
    else:
        print(json.dumps(report, indent=2))
        print(_summary(report), file=sys.stderr)
        return 0
    print(f"{ERROR_PREFIX}: {kind}: {' '.join(msg.split())}", file=sys.stderr)
    return EXIT_CODES[kind]


if __name__ == "__main__":
    sys.exit(main())
