"""Command line front end.  Exit codes: 0 success, 1 error, 2 budget refusal."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import automata as fa
from .bench import default_open_hours, shift_rules
from .counting import exact_state_count
from .cyk import BudgetExceeded, cyk_build
from .encode import (STRONG, WEAK, build_shift_pb, encode_grammar_cnf, encode_regular_cnf,
                     to_dimacs, to_mapping)
from .grammar import (GrammarError, activity_symbols, full_domains, parse_domains,
                      parse_grammar, shift_scheduling_grammar, to_cnf)
from .pipeline import (DEFAULT_BUDGET, ORDER_HEADER, NoSolution, count_tsv, order_experiment,
                       run_pipeline, write_artifacts)
from .propagate import grammar_propagator, regular_propagator, shift_model, solve


def _open_hours(choice: str | None, n: int, grammar):
    """None, 'default', or 'FIRST:LAST' on the 96-slot day."""
    if choice is None:
        uses_open = any(p.predicate is not None and p.predicate.open_start for p in grammar.productions)
        if not uses_open:
            return None
        choice = "default"
    if choice == "always":
        return None
    if choice == "default":
        print("note: synthetic open hours (slots 29..68 of a 96-slot day)", file=sys.stderr)
        return default_open_hours(n)
    first, _, last = choice.partition(":")
    return default_open_hours(n, int(first), int(last))


def _load_grammar(args):
    if getattr(args, "shift", None):
        return shift_scheduling_grammar(args.shift, shift_rules(args.n))
    return parse_grammar(Path(args.grammar).read_text())


def _domains(args, alphabet):
    if args.domains:
        return parse_domains(Path(args.domains).read_text(), alphabet)
    return full_domains(alphabet, args.n)


def _grammar_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("grammar", nargs="?", help="grammar file")
    src.add_argument("--shift", type=int, metavar="A", help="built-in shift grammar with A activities")
    p.add_argument("-n", type=int, required=True, help="sequence length")
    p.add_argument("--domains", help="domain file, one line per position")
    p.add_argument("--open-hours", help="'default', 'always' or FIRST:LAST on a 96-slot day")


def cmd_pipeline(args):
    g = _load_grammar(args)
    gc = to_cnf(g)
    report = run_pipeline(g, args.n, _domains(args, gc.terminals),
                          _open_hours(args.open_hours, args.n, g), args.budget, args.name)
    if args.out:
        write_artifacts(report, Path(args.out))
    sys.stdout.write(report.tsv())
    if not report.predicted_matches:
        print("error: predicted and built sizes differ", file=sys.stderr)
        return 1
    return 0


def cmd_count(args):
    g = _load_grammar(args)
    gc = to_cnf(g)
    _, graph = cyk_build(gc, _domains(args, gc.terminals), _open_hours(args.open_hours, args.n, g))
    if graph.empty:
        raise NoSolution("no solution: nothing to count")
    sys.stdout.write(count_tsv(exact_state_count(graph)))
    return 0


def cmd_order(args):
    print(ORDER_HEADER)
    for n in args.n:
        print(order_experiment(args.family, n).tsv())
    return 0


def _instance(path: Path):
    """JSON instance: grammar (file or shift), n, workers, demands, domains."""
    inst = json.loads(path.read_text())
    n = int(inst["n"])
    if "shift" in inst:
        g = shift_scheduling_grammar(int(inst["shift"]), shift_rules(n))
    else:
        g = parse_grammar((path.parent / inst["grammar"]).read_text())
    gc = to_cnf(g)
    hours = inst.get("open_hours")
    if isinstance(hours, list):
        hours = f"{hours[0]}:{hours[1]}"
    open_hours = _open_hours(hours, n, g)
    if "domains" in inst:
        d = parse_domains((path.parent / inst["domains"]).read_text(), gc.terminals)
    else:
        d = full_domains(gc.terminals, n)
    demands = {(int(i), str(v)): int(k) for i, v, k in inst.get("demands", [])}
    acts = tuple(inst.get("activities", activity_symbols(gc)))
    return g, gc, n, d, open_hours, int(inst.get("workers", 1)), demands, acts, bool(inst.get("strict", False))


def cmd_solve(args):
    g, gc, n, d, open_hours, m, demands, acts, strict = _instance(Path(args.instance))
    if args.model == "grammar":
        prop = grammar_propagator(gc, open_hours)
    else:
        prop = regular_propagator(run_pipeline(g, n, d, open_hours, args.budget).automata["mdfa"])
    result = solve(shift_model(prop, d, m, gc.terminals, acts, demands, strict))
    print(json.dumps({"model": args.model, "objective": result.objective, "nodes": result.nodes,
                      "assignment": None if result.assignment is None
                      else [" ".join(row) for row in result.assignment]}))
    return 0 if result.assignment is not None else 1


def cmd_encode(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.instance:
        g, gc, n, d, open_hours, m, demands, acts, strict = _instance(Path(args.instance))
        kw = {}
        if args.kind == "grammar":
            kw["graph"] = cyk_build(gc, d, open_hours)[1]
        else:
            kw["automaton"] = run_pipeline(g, n, d, open_hours, args.budget).automata["mdfa"]
        model = build_shift_pb(n, m, acts, demands, args.kind, args.strength, domains=d,
                               alphabet=gc.terminals, strict=strict, **kw)
        (out / "model.opb").write_text(model.to_opb())
        (out / "model.map").write_text(to_mapping(model.formula))
        print(f"wrote {out / 'model.opb'}: {model.num_vars} variables, {len(model.constraints)} constraints")
        return 0
    g = _load_grammar(args)
    gc = to_cnf(g)
    d = _domains(args, gc.terminals)
    open_hours = _open_hours(args.open_hours, args.n, g)
    if args.kind == "grammar":
        _, graph = cyk_build(gc, d, open_hours)
        f = encode_grammar_cnf(graph, d, args.strength, gc.terminals)
    else:
        a = run_pipeline(g, args.n, d, open_hours, args.budget).automata["mdfa"]
        f = encode_regular_cnf(a, d, args.strength)
    (out / "formula.cnf").write_text(to_dimacs(f))
    (out / "formula.map").write_text(to_mapping(f))
    print(f"wrote {out / 'formula.cnf'}: {f.num_vars} variables, {len(f.clauses)} clauses")
    return 0


def _read_fla(path):
    return fa.parse_fla(Path(path).read_text())


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_unfold(args):
    _emit(fa.serialize_fla(fa.unfold(fa.parse_dfa(Path(args.dfa).read_text()), args.n)), args.output)
    return 0


def cmd_simplify(args):
    a = _read_fla(args.automaton)
    d = parse_domains(Path(args.domains).read_text(), a.alphabet)
    _emit(fa.serialize_fla(fa.simplify(a, d)), args.output)
    return 0


def _unary(op):
    def run(args):
        _emit(fa.serialize_fla(op(_read_fla(args.automaton))), args.output)
        return 0
    return run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="g2r", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="run the full chain and print a TSV report")
    _grammar_source(p)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--name", default="instance")
    p.add_argument("--out", help="directory for the intermediate files")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("count", help="predict automaton sizes without building them")
    _grammar_source(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("solve", help="solve a JSON shift instance")
    p.add_argument("--model", choices=("grammar", "regular"), default="grammar")
    p.add_argument("--instance", required=True)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("encode", help="write DIMACS (or OPB for --instance) encodings")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("grammar", nargs="?")
    src.add_argument("--shift", type=int, metavar="A")
    src.add_argument("--instance", help="JSON shift instance; writes a PB model")
    p.add_argument("-n", type=int)
    p.add_argument("--domains")
    p.add_argument("--open-hours")
    p.add_argument("--kind", choices=("grammar", "regular"), default="grammar")
    p.add_argument("--strength", choices=(STRONG, WEAK), default=STRONG)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("order-exp", help="operator-order experiments on the separating families")
    p.add_argument("--family", choices=("separation-1", "separation-2"), required=True)
    p.add_argument("-n", type=int, nargs="+", required=True)
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("unfold", help="unfold a dfa file into n layers")
    p.add_argument("dfa")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_unfold)

    p = sub.add_parser("simplify", help="restrict a layered automaton to domains")
    p.add_argument("automaton")
    p.add_argument("--domains", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simplify)

    for name, op, text in (("determinize", fa.subset_construction, "subset construction"),
                           ("minimize", fa.minimize_layered, "minimize a layered DFA"),
                           ("nfa-reduce", fa.heuristic_minimize_nfa, "merge equivalent NFA states")):
        p = sub.add_parser(name, help=text)
        p.add_argument("automaton")
        p.add_argument("-o", "--output")
        p.set_defaults(func=_unary(op))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "encode" and not args.instance and args.n is None:
        print("error: -n is required unless --instance is given", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except BudgetExceeded as e:
        print(f"refused: {e}" + (f" (predicted {e.needed})" if e.needed is not None else ""),
              file=sys.stderr)
        return 2
    except (GrammarError, NoSolution, ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
