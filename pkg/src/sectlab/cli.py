"""Command line entry point: funcalc, norm, rsbound and tl subcommands.

Exit codes: 0 success or stable verdict, 1 unstable verdict, 2 configuration,
certification or IO error (one line on stderr).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from typing import Any, Sequence

import numpy as np

from . import __version__
from .funcalc import ContourSpec, QuadratureError, dunford_riesz_apply, make_plan
from .grid import FunctionStack, GridFunction, MeasureGrid, stack_from_json, stack_to_json
from .norms import MODES, NormSpec, TruncationError, TruncationWarning, evaluate
from .operators import DenseMatrixOperator, NumericalError, SectorError, operator_from_json
from .report import dumps, emit_csv, emit_report, envelope
from .rs import (
    OperatorFamily,
    default_lambda_sample,
    estimate_rs_bound,
    growth_scan,
    maximal_family,
    onb_family,
    resolvent_family,
)
from .symbols import E, H0, CertificationError, parse_symbol
from . import tl

EXIT_OK, EXIT_UNSTABLE, EXIT_ERROR = 0, 1, 2
SEED_MAX = 2**64 - 1


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # one machine-parsable line
        raise ConfigError(message)


# -- argument types -------------------------------------------------------------------


def _seed(text) -> int:
    try:
        v = int(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v <= SEED_MAX:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _exponent(text) -> float:
    if isinstance(text, str) and text.strip().lower() in ("inf", "infinity", "oo"):
        return math.inf
    v = float(text)
    if math.isnan(v) or v < 1:
        raise argparse.ArgumentTypeError(f"exponent must lie in [1, inf], got {text!r}")
    return v


def _positive(text) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _json_doc(text) -> Any:
    """Inline JSON (starting with '{' or '[') or a path to a JSON file."""
    if isinstance(text, (dict, list)):
        return text
    s = str(text).strip()
    if s.startswith(("{", "[")):
        try:
            return json.loads(s)
        except json.JSONDecodeError as exc:
            raise argparse.ArgumentTypeError(f"bad inline JSON: {exc}") from None
    try:
        with open(s, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise argparse.ArgumentTypeError(f"cannot read {s}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"bad JSON in {s}: {exc}") from None


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [_exponent_or_float(v) for v in text]
    return [_exponent_or_float(v) for v in str(text).split(",") if v.strip()]


def _exponent_or_float(v) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(v)


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


# -- parser ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, seed: bool = True) -> None:
    p.add_argument("--config", type=_json_doc, help="JSON file whose keys set defaults for the flags below")
    if seed:
        p.add_argument("--seed", type=_seed, default=0, help="64-bit unsigned seed (default 0)")


def _contour_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--omega", type=float, help="contour angle (default: midpoint rule)")
    p.add_argument("--nodes", type=int, default=400, help="nodes per ray (default 400)")
    p.add_argument("--L", type=_positive, default=18.0, help="log-truncation half-width (default 18)")
    p.add_argument("--tol", type=_positive, default=1e-14, help="quadrature tolerance (default 1e-14)")
    p.add_argument("--no-auto", action="store_true", help="use --nodes and --L exactly, no refinement")


def _suite_flags(p: argparse.ArgumentParser, operator: bool = True) -> None:
    if operator:
        p.add_argument("--operator", type=_json_doc, required=True, help="operator JSON file or inline JSON")
    p.add_argument("--input", type=_json_doc, help="input function or stack JSON (default: seeded suite)")
    p.add_argument("--suite-size", type=int, default=20, help="seeded suite size when --input is absent")
    p.add_argument("--report", help="JSON report path (default: stdout)")
    p.add_argument("--csv", help="CSV of per-input ratios")


def _norm_flags(p: argparse.ArgumentParser, phi: bool = True) -> None:
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--s", type=_exponent, default=2.0, help="layer exponent in [1, inf]")
    if phi:
        p.add_argument("--phi", default="rho_1", help="auxiliary symbol name:params (default rho_1)")
    p.add_argument("--nodes-per-octave", type=int, default=8)


def _refine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--levels", type=int, default=1, help="refinement doublings (default 1)")
    p.add_argument("--threshold", type=_positive, default=0.05, help="stable if the interval moves less (0.05)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sectlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sectlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("funcalc", help="apply f(A) by contour quadrature")
    _common(p, seed=False)
    p.add_argument("--operator", type=_json_doc, required=True, help="operator JSON file or inline JSON")
    p.add_argument("--symbol", required=True, help="symbol name:params, e.g. rho_1 or exp_frac:2,1")
    _contour_flags(p)
    p.add_argument("--input", type=_json_doc, help="function or stack JSON (default: all-ones function)")
    p.add_argument("--output", help="output JSON path (default: stdout)")
    p.set_defaults(handler=_run_funcalc)

    p = sub.add_parser("norm", help="s-power norms of the inputs")
    _common(p)
    p.add_argument("--operator", type=_json_doc, required=True, help="operator JSON file or inline JSON")
    p.add_argument("--symbol", default="rho_1", help="auxiliary symbol (default rho_1)")
    _norm_flags(p, phi=False)
    p.add_argument("--mode", choices=MODES, default="continuous")
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"),
                   help="t_min t_max (continuous, unit_interval) or j_min j_max (dyadic modes)")
    p.add_argument("--inhomogeneous", action="store_true", help="add ||x||_X")
    p.add_argument("--tail-tol", type=_positive, default=1e-6)
    p.add_argument("--input", type=_json_doc, help="function or stack JSON (default: seeded suite)")
    p.add_argument("--suite-size", type=int, default=4)
    p.add_argument("--report", help="JSON report path (default: stdout)")
    p.set_defaults(handler=_run_norm)

    p = sub.add_parser("rsbound", help="lower-bound search for the R_s-constant of a family")
    _common(p)
    p.add_argument("--family", required=True,
                   help="JSON family document or shorthand onb-map:S[:rank], maximal[:n[:p]], identity[:n]")
    p.add_argument("--s", type=_exponent, required=True)
    p.add_argument("--budget", type=int, default=400, help="ratio evaluations (default 400)")
    p.add_argument("--restarts", type=int)
    p.add_argument("--tuple-size", type=int)
    p.add_argument("--growth-scan", type=int, metavar="N_MAX", help="scan tuple sizes 2, 4, .., N_MAX")
    p.add_argument("--output", help="JSON report path (default: stdout)")
    p.add_argument("--trace", help="CSV of the best ratio per search iteration")
    p.set_defaults(handler=_run_rsbound)

    p = sub.add_parser("tl", help="Triebel-Lizorkin experiments")
    tsub = p.add_subparsers(dest="experiment", required=True, parser_class=_Parser)

    e = tsub.add_parser("equiv", help="phi vs psi norms, or continuous vs dyadic with --dyadic")
    _common(e)
    _suite_flags(e)
    _norm_flags(e)
    _refine_flags(e)
    e.add_argument("--psi", help="second symbol (required unless --dyadic)")
    e.add_argument("--dyadic", action="store_true", help="compare continuous and dyadic norms of --phi")
    e.set_defaults(handler=_run_equiv)

    e = tsub.add_parser("hinf", help="sup ||f(A)x|| / ||x|| over a growing bounded family")
    _common(e)
    _suite_flags(e)
    _norm_flags(e)
    e.add_argument("--stages", type=_ints, default=[1, 2, 4, 8, 16], help="family schedule (1,2,4,8,16)")
    e.add_argument("--plateau", type=_positive, default=0.02, help="stable if the final increase is below")
    e.set_defaults(handler=_run_hinf)

    e = tsub.add_parser("laplacian", help="operator norm for (-Delta)^m vs Littlewood-Paley norm")
    _common(e)
    _suite_flags(e, operator=False)
    _norm_flags(e, phi=False)
    _refine_flags(e)
    e.add_argument("--N", type=int, default=1024, help="periodic grid size (default 1024)")
    e.add_argument("--m", type=int, default=1, help="power of the Laplacian (default 1)")
    e.add_argument("--p", type=_exponent, default=2.0, help="Lebesgue exponent (default 2)")
    e.add_argument("--k", type=float, help="exp_frac exponent k > |theta| (default max(1, |theta|+1))")
    e.add_argument("--band", type=int, default=100, help="suite frequency band (default 100)")
    e.set_defaults(handler=_run_laplacian, suite_size=50)

    e = tsub.add_parser("embed", help="nested l^s and inhomogeneous theta embeddings")
    _common(e)
    _suite_flags(e)
    _refine_flags(e)
    e.add_argument("--thetas", type=_floats, default=[0.3, 0.6])
    e.add_argument("--s-list", type=_floats, default=[1.0, 2.0, math.inf])
    e.add_argument("--phi", default="rho_1")
    e.add_argument("--nodes-per-octave", type=int, default=8)
    e.set_defaults(handler=_run_embed)

    e = tsub.add_parser("retract", help="PJx = x for the interpolation retraction")
    _common(e)
    _suite_flags(e)
    _norm_flags(e, phi=False)
    e.add_argument("--alpha", type=float, default=0.5)
    e.add_argument("--truncation", type=int, default=30, help="|j| <= truncation (default 30)")
    e.add_argument("--exploratory", action="store_true", help="allow theta outside (alpha-1, alpha)")
    e.add_argument("--tol", type=_positive, default=1e-6, help="residual tolerance (default 1e-6)")
    e.set_defaults(handler=_run_retract)

    e = tsub.add_parser("shift", help="X^theta(A) vs X^theta(A + eps)")
    _common(e)
    _suite_flags(e)
    _norm_flags(e)
    _refine_flags(e)
    e.add_argument("--eps", type=float, default=1.0)
    e.set_defaults(handler=_run_shift, theta=0.5)
    return parser


def _subparser(parser: argparse.ArgumentParser, path: Sequence[str]) -> argparse.ArgumentParser:
    p = parser
    for name in path:
        action = next(a for a in p._actions if isinstance(a, argparse._SubParsersAction))
        p = action.choices[name]
    return p


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    cfg = args.config
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    path = [args.command] + ([args.experiment] if args.command == "tl" else [])
    sp = _subparser(parser, path)
    known = {a.dest for a in sp._actions}
    bad = sorted(k for k in (k.replace("-", "_") for k in cfg) if k not in known or k in ("config", "help"))
    if bad:
        raise ConfigError(f"unknown config keys: {', '.join(bad)}")
    sp.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
    args = parser.parse_args(argv)
    # defaults given as JSON values bypass argparse types; coerce the common ones
    for key, conv in (("s", _exponent), ("seed", _seed), ("operator", _json_doc), ("input", _json_doc),
                      ("window", _floats), ("thetas", _floats), ("s_list", _floats), ("stages", _ints),
                      ("p", _exponent)):
        v = getattr(args, key, None)
        if v is not None:
            try:
                setattr(args, key, conv(v))
            except (argparse.ArgumentTypeError, TypeError, ValueError) as exc:
                raise ConfigError(f"config value for {key}: {exc}") from None
    return args


# -- helpers ----------------------------------------------------------------------


# destinations do not change results; leaving them out keeps reruns byte-identical
_NOT_ECHOED = ("handler", "config", "output", "report", "csv", "trace")


def _resolved(args: argparse.Namespace) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in _NOT_ECHOED:
            continue
        out[k] = "inf" if isinstance(v, float) and math.isinf(v) else v
    return out


def _operator(doc: Any, p: float | None = None):
    if not isinstance(doc, dict):
        raise ConfigError("operator document must be a JSON object")
    if p is not None and "p" not in doc:
        doc = dict(doc, p="inf" if math.isinf(p) else p)
    return operator_from_json(doc)


def _load_input(doc: Any) -> GridFunction | FunctionStack:
    if isinstance(doc, dict) and "result" in doc and isinstance(doc["result"], dict) and "function" in doc["result"]:
        doc = doc["result"]["function"]
    if not isinstance(doc, dict):
        raise ConfigError("input document must be a JSON object")
    return stack_from_json(doc)


def _input_columns(A, obj: GridFunction | FunctionStack) -> np.ndarray:
    if obj.grid.n != A.n:
        raise ConfigError(f"input has {obj.grid.n} points, the operator acts on {A.n}")
    if isinstance(obj, GridFunction):
        return obj.values[:, None]
    return np.asarray(obj.layers).T


def _inputs(args, A) -> np.ndarray:
    if args.input is not None:
        return _input_columns(A, _load_input(args.input))
    return tl.input_suite(A, int(args.suite_size), args.seed)


def _operator_with_input_p(args):
    p = None
    if getattr(args, "input", None) is not None:
        p = _load_input(args.input).grid.p
    return _operator(args.operator, p)


def _write_json(doc: Any, path: str | None) -> None:
    if path:
        emit_report(doc, path, "json")
    else:
        sys.stdout.write(dumps(doc))


def _emit_experiment(args, name: str, rep: tl.EquivalenceReport) -> int:
    doc = envelope(f"tl {name}", args.seed, _resolved(args), rep.to_dict())
    if args.csv:
        emit_csv(([i, r] for i, r in enumerate(rep.ratios)), args.csv, ["input", "ratio"])
    _write_json(doc, args.report)
    return EXIT_OK if rep.stable else EXIT_UNSTABLE


# -- subcommands ------------------------------------------------------------------


def _run_funcalc(args) -> int:
    x = _load_input(args.input) if args.input is not None else None
    A = _operator(args.operator, x.grid.p if x is not None else None)
    f = parse_symbol(args.symbol)
    if not (f.has(H0) or f.has(E)):
        raise CertificationError(f"{f.spec} is certified neither in H^inf_0 nor in the extended class")
    spec = ContourSpec(omega=args.omega, L=args.L, n_nodes=args.nodes, tol=args.tol, auto=not args.no_auto)
    if x is None:
        x = GridFunction(A.grid, np.ones(A.n, dtype=complex))
    X = _input_columns(A, x)
    cols = [dunford_riesz_apply(A, f, GridFunction(A.grid, X[:, j]), spec).values for j in range(X.shape[1])]
    if isinstance(x, FunctionStack):
        out: GridFunction | FunctionStack = FunctionStack(A.grid, np.array(cols), x.layer_weights)
    else:
        out = GridFunction(A.grid, cols[0])
    plan = make_plan(A, [f], spec)
    result = {"symbol": f.spec, "quadrature": plan.to_dict(), "function": stack_to_json(out)}
    _write_json(envelope("funcalc", None, _resolved(args), result), args.output)
    return EXIT_OK


def _run_norm(args) -> int:
    A = _operator_with_input_p(args)
    phi = parse_symbol(args.symbol)
    discrete = args.mode in ("dyadic", "besov_dyadic")
    t_range = j_range = None
    if args.window is not None:
        if len(args.window) != 2:
            raise ConfigError("--window needs two values")
        if discrete:
            if any(v != int(v) for v in args.window):
                raise ConfigError("dyadic windows need integer j_min,j_max")
            j_range = (int(args.window[0]), int(args.window[1]))
        else:
            t_range = (args.window[0], args.window[1])
    spec = NormSpec(args.theta, args.s, phi, mode=args.mode, t_range=t_range, j_range=j_range,
                    nodes_per_octave=args.nodes_per_octave, inhomogeneous=args.inhomogeneous,
                    tail_tol=args.tail_tol)
    X = _inputs(args, A)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        res = evaluate(A, spec, X)
    notes = sorted({str(w.message) for w in caught if issubclass(w.category, TruncationWarning)})
    for msg in notes:
        print(f"sectlab: warning: {msg}", file=sys.stderr)
    result = res.to_dict()
    result["warnings"] = notes
    _write_json(envelope("norm", args.seed, _resolved(args), result), args.report)
    return EXIT_OK


def _family_doc(text: str) -> dict:
    s = text.strip()
    if s.startswith("{") or os.path.exists(s):
        doc = _json_doc(s)
        if not isinstance(doc, dict):
            raise ConfigError("family document must be a JSON object")
        return doc
    head, *rest = s.split(":")
    if head == "onb-map":
        doc = {"kind": "onb-map", "direction": rest[0] if rest else "S"}
        if len(rest) > 1:
            doc["rank"] = int(rest[1])
        return doc
    if head == "maximal":
        doc = {"kind": "maximal"}
        if rest:
            doc["n"] = int(rest[0])
        if len(rest) > 1:
            doc["p"] = rest[1]
        return doc
    if head == "identity":
        return {"kind": "identity", "n": int(rest[0]) if rest else 4}
    raise ConfigError(f"unknown family shorthand {text!r}")


def _build_family(doc: dict, n: int | None = None) -> OperatorFamily:
    kind = str(doc.get("kind", "")).lower()
    if kind in ("onb-map", "onb"):
        return onb_family(int(n if n is not None else doc.get("rank", 8)), str(doc.get("direction", "S")))
    if kind == "maximal":
        return maximal_family(int(doc.get("n", 256)), _exponent(doc.get("p", 2.0)))
    if kind == "identity":
        return OperatorFamily([DenseMatrixOperator.identity(int(doc.get("n", 4)), _exponent(doc.get("p", 2.0)))],
                              "identity")
    if kind == "resolvent":
        A = _operator(doc["operator"])
        if "lambdas" in doc:
            lams = [complex(v[0], v[1]) if isinstance(v, list) else complex(v) for v in doc["lambdas"]]
        else:
            sigma = float(doc.get("sigma", 0.5 * (A.sector_angle + math.pi)))
            a_min, a_max = A.spectral_bounds()
            lams = default_lambda_sample(sigma, scale=math.sqrt(a_min * a_max))
        return resolvent_family(A, lams)
    if kind == "operators":
        members = [_operator(m) for m in doc.get("members", [])]
        return OperatorFamily(members, f"{len(members)} operators")
    raise ConfigError(f"unknown family kind {kind!r}")


def _run_rsbound(args) -> int:
    doc = _family_doc(args.family)
    if args.budget < 1:
        raise ConfigError("--budget must be positive")
    result: dict = {"family": doc}
    rows: list = []
    if args.growth_scan is not None:
        if args.growth_scan < 2:
            raise ConfigError("--growth-scan needs N_MAX >= 2")
        ns = [2**k for k in range(1, int(math.log2(args.growth_scan)) + 1)]
        scan = growth_scan(lambda n: _build_family(doc, n), args.s, ns, budget=args.budget, seed=args.seed,
                           skip_infeasible=True)
        result["growth_scan"] = scan.to_dict()
        result["reports"] = [r.to_dict(include_inputs=False) for r in scan.reports]
        rows = [[n, i, v] for n, r in zip(scan.ns, scan.reports) for i, v in enumerate(r.trace)]
        header = ["n", "iteration", "best_ratio"]
    else:
        fam = _build_family(doc)
        rep = estimate_rs_bound(fam, args.s, budget=args.budget, seed=args.seed, restarts=args.restarts,
                                tuple_size=args.tuple_size)
        result["estimate"] = rep.to_dict()
        rows = [[i, v] for i, v in enumerate(rep.trace)]
        header = ["iteration", "best_ratio"]
    if args.trace:
        emit_csv(rows, args.trace, header)
    _write_json(envelope("rsbound", args.seed, _resolved(args), result), args.output)
    return EXIT_OK


def _run_equiv(args) -> int:
    A = _operator_with_input_p(args)
    X = _inputs(args, A)
    phi = parse_symbol(args.phi)
    if args.dyadic:
        rep = tl.discrete_equivalence_experiment(A, args.theta, args.s, phi, X, levels=args.levels,
                                                 threshold=args.threshold, nodes_per_octave=args.nodes_per_octave)
    else:
        if not args.psi:
            raise ConfigError("tl equiv needs --psi (or --dyadic)")
        rep = tl.norm_equivalence_experiment(A, args.theta, args.s, phi, parse_symbol(args.psi), X,
                                             levels=args.levels, threshold=args.threshold,
                                             nodes_per_octave=args.nodes_per_octave)
    return _emit_experiment(args, "equiv", rep)


def _run_hinf(args) -> int:
    A = _operator_with_input_p(args)
    X = _inputs(args, A)
    if len(args.stages) < 2:
        raise ConfigError("--stages needs at least two stages")
    rep = tl.hinf_tl_bound_experiment(A, args.theta, args.s, parse_symbol(args.phi), X,
                                      schedule=tl.default_hinf_schedule(args.stages), plateau=args.plateau,
                                      nodes_per_octave=args.nodes_per_octave)
    return _emit_experiment(args, "hinf", rep)


def _run_laplacian(args) -> int:
    if args.input is not None:
        raise ConfigError("tl laplacian builds its own band-limited suite; --input is not supported")
    rep = tl.laplacian_littlewood_paley_experiment(args.N, args.m, args.p, args.s, args.theta,
                                                   suite_size=args.suite_size, seed=args.seed, band=args.band,
                                                   k=args.k, levels=args.levels, threshold=args.threshold,
                                                   nodes_per_octave=args.nodes_per_octave)
    return _emit_experiment(args, "laplacian", rep)


def _run_embed(args) -> int:
    A = _operator_with_input_p(args)
    X = _inputs(args, A)
    rep = tl.embedding_experiment(A, args.thetas, args.s_list, X, phi=parse_symbol(args.phi), levels=args.levels,
                                  threshold=args.threshold, nodes_per_octave=args.nodes_per_octave)
    return _emit_experiment(args, "embed", rep)


def _run_retract(args) -> int:
    A = _operator_with_input_p(args)
    X = _inputs(args, A)
    rep = tl.retraction_experiment(A, args.alpha, args.theta, args.s, args.truncation, X,
                                   exploratory=args.exploratory, tol=args.tol, seed=args.seed,
                                   nodes_per_octave=args.nodes_per_octave)
    return _emit_experiment(args, "retract", rep)


def _run_shift(args) -> int:
    A = _operator_with_input_p(args)
    X = _inputs(args, A)
    rep = tl.shift_invariance_experiment(A, args.eps, args.theta, args.s, X, phi=parse_symbol(args.phi),
                                         levels=args.levels, threshold=args.threshold,
                                         nodes_per_octave=args.nodes_per_octave)
    return _emit_experiment(args, "shift", rep)


# -- entry --------------------------------------------------------------------------

_HANDLED = (ConfigError, CertificationError, SectorError, QuadratureError, TruncationError, NumericalError,
            ValueError, KeyError, TypeError, ZeroDivisionError, OSError, argparse.ArgumentTypeError)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return int(args.handler(args))
    except _HANDLED as exc:
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"sectlab: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
