"""Command-line front end.

Exit codes:
    0  success
    2  bad command line
    3  unreadable or malformed network document
    4  validation findings, scope or divisibility problems
    5  no feasible plan
    6  enumeration refused (solution space above the cap)
"""

import argparse
import json
import sys
from fractions import Fraction

from . import fixtures, ir
from .budget import DEFAULT_LAMBDA, BudgetSpec, ClassScope, as_fraction, compute_budget
from .errors import (
    DivisibilityError,
    DocumentError,
    EnumerationCapError,
    InfeasibleError,
    ScopeError,
    StructuralError,
)
from .factorspace import DEFAULT_ENUMERATION_CAP, count_solution_space, enumerate_window, format_plan_line, iter_window_plans
from .report import budget_document, budget_table, exact, report_json, report_table
from .solver import CAP, OBJECTIVES, POLICY_MODES, BottleneckPolicy, SynthesisOptions, synthesize

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_INVALID = 4
EXIT_INFEASIBLE = 5
EXIT_CAP = 6


def _fraction(s):
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None


def _positive_int(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {s!r}")
    return v


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s!r}")


def build_parser():
    p = argparse.ArgumentParser(prog="cnnsynth", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add_input(sp, required=True):
        sp.add_argument(
            "input",
            nargs=None if required else "?",
            help="network document path, or fixture:alexnet / fixture:googlenet",
        )

    def add_format(sp):
        sp.add_argument("--format", choices=("document", "table"), default="table", help="output style")

    def add_scope(sp):
        sp.add_argument("--alpha", type=_positive_int, help="classes of the baseline (default: its classifier width)")
        sp.add_argument("--beta", type=_positive_int, help="classes of interest")
        sp.add_argument("--lambda", dest="lam", type=_fraction, help="miscellaneous-class coefficient (default 1/4)")
        sp.add_argument("--scope-aware", type=_bool, nargs="?", const=True, default=None, help="add a miscellaneous class")

    sp = sub.add_parser("validate", help="check a network document")
    add_input(sp)

    sp = sub.add_parser("budget", help="parameter budget for a class scope")
    add_input(sp, required=False)
    sp.add_argument("--phi", type=int, help="baseline parameter count (instead of a network)")
    add_scope(sp)
    add_format(sp)

    sp = sub.add_parser("count-space", help="size of the scaling solution space")
    add_input(sp)
    add_format(sp)

    sp = sub.add_parser("enumerate", help="count plans inside a budget window, exhaustively")
    add_input(sp)
    sp.add_argument("--target-fraction", type=_fraction, required=True)
    sp.add_argument("--window-tolerance", type=_fraction, default=Fraction(2, 1000))
    sp.add_argument("--cap", type=_positive_int, default=DEFAULT_ENUMERATION_CAP, help="enumeration cap")
    sp.add_argument("--plans", action="store_true", help="stream qualifying plans, one per line")
    sp.add_argument("--workers", type=_positive_int, default=1)
    add_format(sp)

    sp = sub.add_parser("synthesize", help="derive the scaled network")
    add_input(sp)
    add_scope(sp)
    sp.add_argument("--target-fraction", type=_fraction, help="explicit capacity fraction (overrides the scope budget)")
    sp.add_argument("--objective", choices=OBJECTIVES, default=CAP)
    sp.add_argument("--window-tolerance", type=_fraction, default=Fraction(2, 1000))
    sp.add_argument("--policy", choices=POLICY_MODES, default=POLICY_MODES[0])
    sp.add_argument("--theta", type=_fraction, help="bottleneck threshold (default depends on the policy)")
    sp.add_argument("--quantum", type=_positive_int, default=1, help="bucket size for parameter sums (approximate if >1)")
    sp.add_argument("-o", "--output", help="write the scaled network here (default: stdout)")
    sp.add_argument("--report", help="write the report here")
    add_format(sp)
    return p


def load_input(spec):
    if spec.startswith("fixture:"):
        try:
            return fixtures.load(spec.split(":", 1)[1])
        except KeyError as e:
            raise DocumentError(e.args[0], spec) from None
    try:
        return ir.load(spec)
    except OSError as e:
        raise DocumentError(e.strerror or str(e), spec) from None


def _checked(spec):
    n = load_input(spec)
    ir.check(n)
    return n


def _scope(args, n=None):
    block = dict(n.scope) if n is not None and n.scope else {}
    alpha = args.alpha or block.get("alpha") or (n.classifier_classes if n is not None else None)
    beta = args.beta or block.get("beta")
    lam = args.lam if args.lam is not None else block.get("lambda", DEFAULT_LAMBDA)
    aware = args.scope_aware if args.scope_aware is not None else bool(block.get("scope_aware", False))
    if alpha is None:
        raise ScopeError("--alpha is required without a network")
    if beta is None:
        beta = alpha
    return ClassScope(alpha, beta, as_fraction(lam)), aware


def _emit(text, path=None):
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_validate(args):
    n = load_input(args.input)
    findings = ir.validate(n)
    for f in findings:
        print(f, file=sys.stderr)
    if findings:
        return EXIT_INVALID
    print(f"{n.name}: ok ({len(n.macro_layers)} macro-layers, {ir.param_count_network(n)} parameters)")
    return EXIT_OK


def cmd_budget(args):
    n = None
    if args.input:
        n = _checked(args.input)
        phi = ir.param_count_network(n)
    elif args.phi is not None:
        phi = args.phi
    else:
        raise ScopeError("budget needs a network or --phi")
    scope, aware = _scope(args, n)
    result = compute_budget(BudgetSpec(phi, scope, aware))
    if args.format == "document":
        _emit(json.dumps(budget_document(result, scope, aware), indent=2) + "\n")
    else:
        _emit(budget_table(result, scope, aware))
    return EXIT_OK


def cmd_count_space(args):
    n = _checked(args.input)
    aff = count_solution_space(n, affine=True)
    non = count_solution_space(n, affine=False)
    if args.format == "document":
        _emit(json.dumps({"network": n.name, "affine": aff, "non_affine": non}, indent=2) + "\n")
    else:
        _emit(f"affine      {aff}\nnon-affine  {non}\n")
    return EXIT_OK


def cmd_enumerate(args):
    n = _checked(args.input)
    if args.plans:
        count = 0
        for factors, phi_prime in iter_window_plans(n, args.target_fraction, args.window_tolerance, args.cap):
            sys.stdout.write(format_plan_line(factors, phi_prime) + "\n")
            count += 1
        print(f"{count} plans", file=sys.stderr)
        return EXIT_OK
    r = enumerate_window(n, args.target_fraction, args.window_tolerance, cap=args.cap, workers=args.workers)
    if args.format == "document":
        doc = {
            "network": n.name,
            "phi": r.phi,
            "target_fraction": exact(r.target_fraction),
            "window_tolerance": exact(r.tolerance),
            "strict": True,
            "count": r.count,
            "space": r.space,
            "closed_form": r.closed_form,
        }
        _emit(json.dumps(doc, indent=2) + "\n")
    else:
        _emit(f"{r.count} of {r.space} plans within |{exact(r.target_fraction)}*phi - phi'| / phi < {exact(r.tolerance)}\n")
    return EXIT_OK


def cmd_synthesize(args):
    n = _checked(args.input)
    scope, aware = _scope(args, n)
    options = SynthesisOptions(
        scope_aware=aware,
        target_fraction=args.target_fraction,
        objective_mode=args.objective,
        window_tolerance=args.window_tolerance,
        policy=BottleneckPolicy(args.policy, args.theta),
        quantum=args.quantum,
    )
    out, rep = synthesize(n, scope, options)
    text = report_json(rep) if args.format == "document" else report_table(rep)
    _emit(ir.dumps(out), args.output)
    if args.report:
        _emit(text, args.report)
    elif args.output:
        _emit(text)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "budget": cmd_budget,
    "count-space": cmd_count_space,
    "enumerate": cmd_enumerate,
    "synthesize": cmd_synthesize,
}


def run(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except DocumentError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except StructuralError as e:
        for f in e.findings:
            print(f, file=sys.stderr)
        return EXIT_INVALID
    except (ScopeError, DivisibilityError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        print(f"nearest achievable below: {e.below}, above: {e.above}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except EnumerationCapError as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_CAP


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
