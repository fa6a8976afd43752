"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 invalid input (including missing
files), 3 computational budget exceeded, 4 hard assertion failure. Errors
are reported on stderr as a single line ``error: <kind>: <reason>``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .branching import from_hypergraphon, left_convergence_trajectory, partitionable_diagnostics
from .cutnorm import EXACT_MAX_TERMS, cutnorm_exact, cutnorm_heuristic, restricted_cutnorm
from .density import DEFAULT_TERM_BUDGET, delta_metric, density_exact, density_mc
from .errors import BudgetExceeded, HardAssertionFailure, ValidationError
from .experiments import report_tsv, run_config_file
from .hypergraph import enumerate_hypergraphs, format_hg
from .io import (_number, dumps, function_doc, function_from_doc, hypergraph_from_spec,
                 load_json, partition_doc, quotient_doc, read_partition,
                 read_quotient)
from .regularity import check_counting_I, check_counting_II, weak_regularize
from .sampling import embed, sample_gnw, triangle_hypergraph
from .step import StepFunction, StepHypergraphon, d1, difference, quotient, trivial_partition

log = logging.getLogger("hyperlimits")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_BUDGET, EXIT_ASSERT = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_doc(args, doc) -> None:
    _emit(args, dumps(doc))


def _read_function(path, signed: bool = False) -> StepFunction:
    return function_from_doc(load_json(path), StepFunction if signed else StepHypergraphon)


def _hypergraph(spec: str):
    return hypergraph_from_spec(spec)[1]


def _alpha(text: str | None):
    if text is None:
        return None
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"alpha must be comma-separated integers, got {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None


def _scalar(args, name: str, value: float, extra: dict | None = None) -> None:
    if args.format == "json":
        _emit_doc(args, {name: value, **(extra or {})})
    elif args.format == "tsv":
        keys = [name] + list(extra or {})
        vals = [value] + list((extra or {}).values())
        _emit(args, "\t".join(keys) + "\n" + "\t".join(
            v if isinstance(v, str) else _number(v) for v in vals))
    else:
        _emit(args, _number(value))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_density(args):
    F = _hypergraph(args.F)
    ws = [_read_function(p) for p in args.W]
    _scalar(args, "density", density_exact(F, ws, _alpha(args.alpha), budget=args.budget))


def cmd_mc_density(args):
    F = _hypergraph(args.F)
    ws = [_read_function(p) for p in args.W]
    est = density_mc(F, ws, _alpha(args.alpha), samples=args.samples, seed=args.seed,
                     threads=args.threads)
    _scalar(args, "mean", est.mean, {"stderr": est.stderr, "samples": est.samples,
                                     "seed": est.seed})


def cmd_cutnorm(args):
    if args.D:
        D = _read_function(args.D, signed=True)
    elif args.U and args.W:
        D = difference(_read_function(args.U), _read_function(args.W))
    else:
        raise UsageError("give --D, or both --U and --W")
    T = read_partition(args.T) if args.T else None
    if args.mode == "exact":
        wit, exact = cutnorm_exact(D, T, max_terms=args.budget), True
    elif args.mode == "heuristic":
        wit, exact = cutnorm_heuristic(D, T, restarts=args.restarts, seed=args.seed), False
    else:
        wit, exact = restricted_cutnorm(D, T, restarts=args.restarts, seed=args.seed,
                                        max_terms=args.budget)
    extra = {"norm": "restricted cut norm", "method": "exact" if exact else "heuristic",
             "sign": wit.sign}
    if args.format == "json":
        extra["c"] = [c.astype(int).tolist() for c in wit.c]
    _scalar(args, "value", wit.value, extra)


def cmd_regularize(args):
    ws = [_read_function(p) for p in args.W]
    Q0 = read_partition(args.Q0) if args.Q0 else trivial_partition(
        ws[0].base.base if ws[0].base is not None else None)
    Q, tr = weak_regularize(ws, Q0, args.eps, restarts=args.restarts, seed=args.seed,
                            max_terms=args.budget, pad=args.pad)
    if args.format == "tsv":
        lines = ["iteration\tmember\tdeviation\texact\tenergy_before\tenergy_after\tparts"]
        for it, r in enumerate(tr.records, 1):
            lines.append("\t".join([str(it), str(r.member), _number(r.deviation),
                                    str(r.exact).lower(), _number(r.energy_before),
                                    _number(r.energy_after), str(r.parts)]))
        _emit(args, "\n".join(lines))
    else:
        _emit_doc(args, {"transcript": tr.as_dict(), "partition": partition_doc(Q)})


def cmd_quotient(args):
    quot = quotient(_read_function(args.W), read_partition(args.R))
    if args.format == "tsv":
        lines = ["cell\torbit\tvolume\taverage"]
        for c, o, v, w in quot.cells():
            lines.append(f"{','.join(map(str, c))}\t{o}\t{_number(v)}\t{_number(w)}")
        _emit(args, "\n".join(lines))
    else:
        _emit_doc(args, quotient_doc(quot))


def cmd_d1(args):
    _scalar(args, "d1", d1(read_quotient(args.A), read_quotient(args.B)))


def cmd_embed(args):
    _emit_doc(args, function_doc(embed(_hypergraph(args.H))))


def cmd_sample_gnw(args):
    _emit(args, format_hg(sample_gnw(_read_function(args.W), args.n, args.seed)))


def cmd_triangles(args):
    _emit(args, format_hg(triangle_hypergraph(args.n, args.p, args.q, args.seed)))


def cmd_experiment(args):
    _, report = run_config_file(args.config, threads=args.threads)
    _emit(args, report_tsv(report) if args.format == "tsv" else dumps(report))


def cmd_delta(args):
    W, W2 = _read_function(args.W), _read_function(args.W2)
    family = [_hypergraph(s) for s in args.family] if args.family else None
    _scalar(args, "delta", delta_metric(W, W2, family, budget=args.budget))


def cmd_enumerate(args):
    classes = enumerate_hypergraphs(args.k, args.n)
    if args.format == "tsv":
        lines = ["index\tedges\tedge_list"]
        for i, H in enumerate(classes):
            lines.append(f"{i}\t{len(H)}\t{' '.join('-'.join(map(str, e)) for e in H.edges)}")
        _emit(args, "\n".join(lines))
    else:
        _emit_doc(args, {"k": args.k, "n": args.n, "count": len(classes),
                         "classes": [[list(e) for e in H.edges] for H in classes]})


def cmd_diagnose(args):
    seq = [from_hypergraphon(_read_function(p), args.depth) for p in args.W]
    eps_seq = _floats(args.eps_seq) if args.eps_seq else None
    doc = {}
    if args.F:
        graphs = [hypergraph_from_spec(s) for s in args.F]
        left = left_convergence_trajectory(seq, [g for _, g in graphs], args.depth,
                                           names=[n for n, _ in graphs])
        doc["left_convergence"] = left.as_dict()
    part = partitionable_diagnostics(seq, args.depth, eps_seq, recursion=args.recursion,
                                     restarts=args.restarts, seed=args.seed,
                                     max_terms=args.budget)
    doc["partitionable"] = part.as_dict()
    _emit_doc(args, doc)


def cmd_check_counting(args):
    F = _hypergraph(args.F)
    U = [_read_function(p) for p in args.U]
    W = [_read_function(p) for p in args.W]
    if args.lemma == 1:
        rep = check_counting_I(F, _alpha(args.alpha), U, W, args.eps, restarts=args.restarts,
                               seed=args.seed)
    else:
        if not (args.Q and args.R and args.delta is not None):
            raise UsageError("the second counting check needs --Q, --R and --delta")
        rep = check_counting_II(F, _alpha(args.alpha), U, W, read_partition(args.Q),
                                read_partition(args.R), args.delta)
    _emit_doc(args, rep.as_dict())
    if rep.status == "violated":
        raise HardAssertionFailure(f"counting inequality violated: {rep.lhs!r} > {rep.rhs!r}")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> Parser:
    common = Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
    common.add_argument("--format", choices=("json", "tsv"), default=None,
                        help="output format (default: plain value or JSON document)")
    common.add_argument("--budget", type=int, default=None,
                        help="computation budget in terms; exceeding it exits with code 3")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for sampling; output does not depend on it")
    common.add_argument("--out", default=None, help="write output to this path instead of stdout")

    parser = Parser(prog="hyperlimits",
                    description="Step hypergraphons, densities, cut norms and weak regularity.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=Parser)
    sub.required = True

    def add(name, func, help_text, budget=DEFAULT_TERM_BUDGET):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=func, default_budget=budget)
        return p

    p = add("density", cmd_density,
            "Exact homomorphism density t_alpha(F, W) of a hypergraph in a tuple of step "
            "hypergraphons (sum over part assignments of the shadow).")
    p.add_argument("--F", required=True, help="hypergraph: .hg file or a built-in name")
    p.add_argument("--W", required=True, nargs="+", help="step hypergraphon JSON file(s)")
    p.add_argument("--alpha", help="edge colors, comma-separated tuple indices")

    p = add("mc-density", cmd_mc_density,
            "Monte Carlo estimate of t_alpha(F, W) from uniform coordinate tables, with "
            "standard error; deterministic given --seed and --samples.")
    p.add_argument("--F", required=True)
    p.add_argument("--W", required=True, nargs="+")
    p.add_argument("--alpha")
    p.add_argument("--samples", type=int, default=10**5)

    p = add("cutnorm", cmd_cutnorm,
            "Restricted (k-1)-cut norm of a step function: test sets are unions of parts of a "
            "reference partition. Exact for k = 2, a lower bound for k >= 3.", EXACT_MAX_TERMS)
    p.add_argument("--D", help="signed step function JSON")
    p.add_argument("--U", help="first hypergraphon (norm of U - W)")
    p.add_argument("--W", help="second hypergraphon")
    p.add_argument("--T", help="reference partition JSON (default: the integrand's base)")
    p.add_argument("--mode", choices=("auto", "exact", "heuristic"), default="auto")
    p.add_argument("--restarts", type=int, default=8)

    p = add("regularize", cmd_regularize,
            "Weak regularity by energy increment: refine a partition until every hypergraphon "
            "is eps-close to its stepping in restricted cut norm.", EXACT_MAX_TERMS)
    p.add_argument("--W", required=True, nargs="+")
    p.add_argument("--Q0", help="starting partition (default: one part)")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--pad", action="store_true",
                   help="pad every starting part to exactly ceil(2^(k m / eps^2)) parts")

    p = add("quotient", cmd_quotient,
            "Quotient W/R: cell volumes v_f and averages w_f of a hypergraphon against a "
            "partition one level down.")
    p.add_argument("--W", required=True)
    p.add_argument("--R", required=True)

    p = add("d1", cmd_d1, "d1 distance between two quotients with the same shape.")
    p.add_argument("--A", required=True)
    p.add_argument("--B", required=True)

    p = add("embed", cmd_embed,
            "Step hypergraphon W^H of a finite hypergraph, with t(F, W^H) = t(F, H).")
    p.add_argument("--H", required=True)

    p = add("sample-gnw", cmd_sample_gnw,
            "Sample the W-random hypergraph G(n, W); prints the .hg format.")
    p.add_argument("--W", required=True)
    p.add_argument("--n", type=int, required=True)

    p = add("triangles", cmd_triangles,
            "Triangles of G(n, p), each kept with probability q, as a 3-uniform hypergraph.")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--q", type=float, default=1.0)

    p = add("experiment", cmd_experiment,
            "Run a convergence experiment from a JSON config (triangles or gnw model) and "
            "report estimates against predicted limits.")
    p.add_argument("--config", required=True)

    p = add("delta", cmd_delta,
            "Truncated density metric sum_i 2^-i |t(F_i, W) - t(F_i, W2)| over an enumerated "
            "family (default: all classes on k, k+1, k+2 vertices).")
    p.add_argument("--W", required=True)
    p.add_argument("--W2", required=True)
    p.add_argument("--family", nargs="+")

    p = add("enumerate", cmd_enumerate,
            "Isomorphism classes of k-uniform hypergraphs on n vertices, in canonical order.")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)

    p = add("diagnose", cmd_diagnose,
            "Finite-depth convergence diagnostics for the branching partitions (W, 1 - W) of a "
            "sequence of hypergraphons: colored densities and regularity-partition quotients.",
            EXACT_MAX_TERMS)
    p.add_argument("--W", required=True, nargs="+", help="the sequence, in order")
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--eps-seq", help="comma-separated eps per level (default 1, 1/2, 1/3, ...)")
    p.add_argument("--F", nargs="+", help="hypergraphs for the colored-density trajectories")
    p.add_argument("--recursion", type=int, default=1)
    p.add_argument("--restarts", type=int, default=8)

    p = add("check-counting", cmd_check_counting,
            "Check a counting inequality: --lemma 1 bounds density differences by the cut norm, "
            "--lemma 2 by quotient distances; exits 4 on a violation.")
    p.add_argument("--lemma", type=int, choices=(1, 2), default=1)
    p.add_argument("--F", required=True)
    p.add_argument("--U", required=True, nargs="+")
    p.add_argument("--W", required=True, nargs="+")
    p.add_argument("--alpha")
    p.add_argument("--eps", type=float)
    p.add_argument("--Q")
    p.add_argument("--R")
    p.add_argument("--delta", type=float)
    p.add_argument("--restarts", type=int, default=8)
    return parser


def _config_line(args) -> str:
    items = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "default_budget")}
    return "config: " + json.dumps(items, sort_keys=True, default=str)


def run(argv=None) -> int:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    log.propagate = False
    try:
        return _dispatch(argv)
    finally:
        log.removeHandler(handler)


def _dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.budget is None:
            args.budget = args.default_budget
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        log.info(_config_line(args))
        args.func(args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"error: budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except HardAssertionFailure as exc:
        print(f"error: assertion: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (ValidationError, ValueError) as exc:
        print(f"error: validation: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}",
              file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
