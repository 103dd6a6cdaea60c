"""Command-line entry point: ``equalflow solve|rental|gen``.

Exit codes: 0 feasible, 1 infeasible, 2 unknown, 3 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import random
import sys
import time

from . import fbce, jsonio, oracle, reform, search
from .carrental import accept_requests, choose_case
from .generate import random_instance
from .model import Certificate, ProblemInstance, validate_instance, validate_witness

EXIT = {"feasible": 0, "infeasible": 1, "unknown": 2}
USAGE_ERROR = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # exit status 2 already means UNKNOWN
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


# -- report ------------------------------------------------------------------

def _refutation_doc(system, cert: Certificate):
    ref = cert.refutation
    if ref is None:
        return None
    chain = []
    for k, side, mult in ref.combination:
        con = system.inputs[k]
        chain.append({"input": k, "side": side, "multiplier": jsonio.fraction_str(mult),
                      "constraint": str(con)})
    return {"rhs": jsonio.fraction_str(ref.rhs), "origin": ref.origin, "combination": chain}


def _certificate_doc(cert: Certificate, system=None):
    doc = {"verdict": cert.verdict.upper()}
    if cert.reason:
        doc["reason"] = cert.reason
    if cert.refutation is not None and system is not None:
        doc["refutation"] = _refutation_doc(system, cert)
    return doc


def _witness_doc(witness, instance=None):
    if witness is None:
        return None
    if instance is not None:
        return witness.grid(instance)
    return {str(k): v for k, v in sorted(witness.values.items())}


def _report(digest, pipeline, cert_doc, witness_doc, stats, started, timing):
    stats = dict(stats)
    if timing:
        stats["wall_time"] = round(time.monotonic() - started, 6)
    return {"input_digest": digest, "pipeline": pipeline, "certificate": cert_doc,
            "witness": witness_doc, "statistics": stats}


def _emit_report(path, report, out):
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if path == "-":
        out.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _read(path):
    try:
        if path == "-":
            raw = sys.stdin.buffer.read()
        else:
            with open(path, "rb") as fh:
                raw = fh.read()
    except OSError as exc:
        raise UsageError(str(exc)) from exc
    try:
        return json.loads(raw), "sha256:" + hashlib.sha256(raw).hexdigest()
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def _print_grid(out, instance: ProblemInstance, witness):
    grid = witness.grid(instance)
    for t in range(instance.n_periods):
        out.write(f"period {t}:\n")
        for i in range(instance.n_sources):
            out.write("  " + " ".join(str(grid[i][j][t]) for j in range(instance.n_dests)) + "\n")


def _print_refutation(out, system, cert):
    doc = _refutation_doc(system, cert)
    if doc is None:
        return
    out.write("refutation:\n")
    for step in doc["combination"]:
        sign = "" if step["side"] > 0 else " (reversed)"
        out.write(f"  {step['multiplier']} x [{step['input']}] {step['constraint']}{sign}\n")
    out.write(f"  => 0 <= {doc['rhs']}\n")


# -- solve -------------------------------------------------------------------

def _fbce_run(system, args, out):
    steps = []

    def on_step(s):
        if args.trace:
            out.write(f"{s}\n")
        steps.append(s.after)

    cert, proj = fbce.certify(system, on_step=on_step, return_projection=True)
    counts = [proj.trace[0].after] + steps if proj.trace else steps
    stats = {"fbce_constraints": counts}
    if args.trace:
        for line in fbce.constraint_growth_report(proj.trace).lines():
            out.write(f"growth {line}\n")
    return cert, stats


def _solve_instance(inst, args, out):
    problems = validate_instance(inst)
    if problems:
        raise UsageError("invalid instance: " + "; ".join(map(str, problems[:5])))
    stats = {}
    system = None
    if args.method == "fbce":
        con = reform.contract_classes(inst)
        system = con.system
        if con.infeasible_by_construction:
            cert = Certificate.infeasible(reason="forbidden class with a nonzero fixed value")
        else:
            cert, stats = _fbce_run(system, args, out)
            if cert.is_feasible:
                cert = Certificate.feasible(con.expand(cert.witness.values))
    elif args.method == "search":
        cfg = search.SearchConfig(node_limit=args.node_limit,
                                  objective_mode="minimize" if args.minimize else "feasibility")
        res = search.solve_instance(inst, cfg)
        cert = res.certificate
        stats = {"nodes": res.nodes_explored, "status": res.status}
        if res.objective_value is not None:
            stats["objective"] = jsonio.fraction_str(res.objective_value)
    elif args.method == "oracle":
        budget = oracle.EnumerationBudget(args.max_points)
        cert = oracle.oracle_verdict(inst, budget)
        stats = {"space_size": oracle.space_size(inst)}
    else:
        cert, stats = _penalty(inst, args)
    if cert.is_feasible and not validate_witness(inst, cert.witness):
        raise AssertionError("reported witness fails validation")
    return cert, stats, system


def _penalty(inst, args):
    if args.lam is not None and args.lam < 1:
        raise UsageError("--lambda must be a positive integer")
    default = reform.default_lambda(inst)
    lam = args.lam if args.lam is not None else default
    pen = reform.penalize(inst, reform.PenaltyConfig(lam))
    cfg = search.SearchConfig(node_limit=args.node_limit, objective_mode="minimize")
    res = search.solve_instance(pen, cfg)
    stats = {"lambda": lam, "nodes": res.nodes_explored, "status": res.status}
    if not res.certificate.is_feasible:
        if res.certificate.is_infeasible:
            return Certificate.infeasible(reason="penalized relaxation has no integer point"), stats
        return res.certificate, stats
    w = res.certificate.witness
    penalty = reform.penalty_value(inst, pen, w.values, res.aux_values)
    stats["penalty"] = penalty
    stats["objective"] = jsonio.fraction_str(res.objective_value)
    if res.status != "complete":
        return Certificate.unknown("penalized search hit its limit"), stats
    if penalty == 0:
        return Certificate.feasible(w), stats
    if lam >= default:
        return Certificate.infeasible(
            reason=f"minimum penalty {penalty} > 0 under lambda {lam}"), stats
    return Certificate.unknown(f"penalty {penalty} > 0 but lambda {lam} is below {default}"), stats


def _solve_system(system, bounds, args, out):
    if args.method == "fbce":
        return _fbce_run(system, args, out)
    if args.method == "penalty":
        raise UsageError("the penalty method needs an instance, not a constraint system")
    full = {v: bounds.get(v, (None, None)) for v in system.variables}
    missing = [v for v, (lo, hi) in full.items() if lo is None or hi is None]
    if missing:
        raise UsageError(f"variable {missing[0]} needs finite bounds for --method {args.method}")
    if args.method == "search":
        res = search.solve(system, full, None, search.SearchConfig(node_limit=args.node_limit))
        return res.certificate, {"nodes": res.nodes_explored, "status": res.status}
    cert = oracle.oracle_verdict(system, oracle.EnumerationBudget(args.max_points), bounds=full)
    return cert, {"space_size": oracle.space_size(system, full)}


def cmd_solve(args, out) -> int:
    started = time.monotonic()
    doc, digest = _read(args.path)
    kind = jsonio.detect(doc)
    if kind == "scenario":
        raise UsageError("this is a rental scenario; use the 'rental' command")
    instance = None
    if kind == "system":
        system, bounds = jsonio.system_from_json(doc)
        cert, stats = _solve_system(system, bounds, args, out)
    else:
        instance = jsonio.instance_from_json(doc)
        cert, stats, system = _solve_instance(instance, args, out)
    out.write(cert.verdict.upper() + "\n")
    if cert.reason:
        out.write(f"reason: {cert.reason}\n")
    if cert.is_feasible and args.witness:
        if instance is not None:
            _print_grid(out, instance, cert.witness)
        else:
            for v, x in sorted(cert.witness.values.items()):
                out.write(f"  {v} = {x}\n")
    if cert.is_infeasible and system is not None:
        _print_refutation(out, system, cert)
    if "penalty" in stats:
        out.write(f"penalty: {stats['penalty']}\n")
    if args.json_out:
        _emit_report(args.json_out, _report(
            digest, f"solve/{args.method}", _certificate_doc(cert, system),
            _witness_doc(cert.witness, instance), stats, started, args.timing), out)
    return EXIT[cert.verdict]


# -- rental ------------------------------------------------------------------

def cmd_rental(args, out) -> int:
    started = time.monotonic()
    doc, digest = _read(args.path)
    scenario = jsonio.scenario_from_json(doc)
    problems = scenario.validate()
    if problems:
        raise UsageError("invalid scenario: " + "; ".join(problems[:5]))
    case = args.case
    if case == "auto":
        case = choose_case(scenario)
    try:
        decision = accept_requests(scenario, args.method, case)
    except ValueError as exc:
        raise UsageError(f"case {case}: {exc}") from exc
    cert = decision.certificate
    out.write(f"case {decision.case}\n")
    out.write(cert.verdict.upper() + "\n")
    if cert.reason:
        out.write(f"reason: {cert.reason}\n")
    if args.allocations and decision.allocations is not None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["request", "model", "day", "count"])
        writer.writerows(decision.allocations)
        if args.allocations == "-":
            out.write(buf.getvalue())
        else:
            with open(args.allocations, "w") as fh:
                fh.write(buf.getvalue())
    if args.json_out:
        allocations = None
        if decision.allocations is not None:
            allocations = [{"request": r, "model": m, "day": d, "count": c}
                           for r, m, d, c in decision.allocations]
        _emit_report(args.json_out, _report(
            digest, f"rental/case{decision.case}/{args.method}", _certificate_doc(cert),
            allocations, decision.statistics, started, args.timing), out)
    return EXIT[cert.verdict]


# -- gen ---------------------------------------------------------------------

def _dims(text):
    try:
        dims = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected i,j,tau integers, got {text!r}")
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError("dims must be three positive integers")
    return dims


def _density(text):
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0 <= p <= 1:
        raise argparse.ArgumentTypeError("density must lie in [0, 1]")
    return p


def cmd_gen(args, out) -> int:
    rng = random.Random(args.seed)
    inst = random_instance(rng, args.dims, args.class_density, args.forbidden_density,
                           form=args.form, with_cost=args.cost)
    text = jsonio.dumps(jsonio.instance_to_json(inst))
    if args.output and args.output != "-":
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return 0


# -- wiring ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="equalflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--json-out", metavar="PATH", help="write a RunReport ('-' for stdout)")
        p.add_argument("--timing", action="store_true", help="add wall time to the RunReport")

    p = sub.add_parser("solve", help="decide an instance or constraint system")
    p.add_argument("path", help="instance or system JSON ('-' reads stdin)")
    p.add_argument("--method", choices=("fbce", "search", "oracle", "penalty"), default="search")
    p.add_argument("--lambda", dest="lam", type=int, help="penalty weight (default: derived)")
    p.add_argument("--trace", action="store_true", help="print FBCE elimination steps")
    p.add_argument("--witness", action="store_true", help="print the witness grid")
    p.add_argument("--minimize", action="store_true", help="minimize the linear cost (search)")
    p.add_argument("--node-limit", type=int, default=5_000_000)
    p.add_argument("--max-points", type=int, default=2 ** 22, help="oracle enumeration budget")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("rental", help="decide whether every rental request can be accepted")
    p.add_argument("path", help="scenario JSON ('-' reads stdin)")
    p.add_argument("--case", choices=("1", "2", "3", "auto"), default="auto")
    p.add_argument("--method", choices=("search", "oracle", "fbce"), default="search")
    p.add_argument("--allocations", metavar="PATH", help="write the allocation CSV ('-' for stdout)")
    common(p)
    p.set_defaults(func=cmd_rental)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--dims", type=_dims, default=(2, 2, 2), metavar="I,J,TAU")
    p.add_argument("--class-density", type=_density, default=0.3)
    p.add_argument("--forbidden-density", type=_density, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--form", choices=("transportation", "assignment", "generalized"))
    p.add_argument("--cost", action="store_true", help="attach a random linear cost")
    p.add_argument("-o", "--output", metavar="PATH")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (UsageError, jsonio.SchemaError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return USAGE_ERROR
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
