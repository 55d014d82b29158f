"""End-to-end driver: grammar -> CYK -> acyclic grammar -> PDA -> NFA -> DFA."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .automata import (heuristic_minimize_nfa, minimize_dfa, minimize_layered,
                       serialize_fla, simplify, subset_construction, unfold)
from .bench import separation1_dfa, separation2_dfa, separation2_domains
from .counting import SizeReport, exact_state_count
from .cyk import BudgetExceeded, cyk_build
from .grammar import (Domains, Grammar, OpenHours, full_domains, serialize_domains,
                      serialize_grammar, to_cnf)
from .reformulate import construct_acyclic_grammar, epsilon_closure, grammar_to_pda, pda_to_nfa

DEFAULT_BUDGET = 10 ** 6

COLUMNS = ("name", "n", "ga_terms", "ga_prods", "enfa_states", "enfa_trans",
           "nfa_states", "nfa_trans", "rnfa_states", "rnfa_trans",
           "dfa_states", "dfa_trans", "mdfa_states", "mdfa_trans",
           "predicted_pre", "predicted_post", "upper_bound")


class NoSolution(ValueError):
    """The grammar has no word of the requested length inside the domains."""


@dataclass
class PipelineReport:
    name: str
    n: int
    sizes: dict                    # column -> int
    counts: SizeReport
    artifacts: dict = field(default_factory=dict)   # file name -> text
    timings: dict = field(default_factory=dict)     # stage -> seconds, not in the TSV
    automata: dict = field(default_factory=dict)    # stage -> LayeredAutomaton
    enfa: object = None

    @property
    def predicted_matches(self) -> bool:
        s = self.sizes
        return (s["enfa_states"] == s["predicted_pre"] + 1
                and s["nfa_states"] == s["predicted_post"] + 1)

    def tsv_row(self) -> str:
        cells = [self.name, self.n] + [self.sizes[c] for c in COLUMNS[2:]]
        return "\t".join(str(c) for c in cells)

    def tsv(self) -> str:
        return "\t".join(COLUMNS) + "\n" + self.tsv_row() + "\n"


def run_pipeline(g: Grammar, n: int, domains: Optional[Domains] = None,
                 open_hours: OpenHours = None, budget: int = DEFAULT_BUDGET,
                 name: str = "instance") -> PipelineReport:
    """Run every stage, refusing up front when the predicted NFA is too big.

    Sizes exclude nothing: the ε-NFA and NFA state counts include the empty
    stack, the predictions do not (hence the +1 in the consistency check).
    """
    clock = {}
    t0 = time.perf_counter()

    def lap(stage):
        nonlocal t0
        now = time.perf_counter()
        clock[stage] = now - t0
        t0 = now

    g = to_cnf(g)
    d = domains if domains is not None else full_domains(g.terminals, n)
    if len(d) != n:
        raise ValueError(f"{len(d)} domains given for n = {n}")
    table, graph = cyk_build(g, d, open_hours)
    lap("cyk")
    if graph.empty:
        raise NoSolution(f"no word of length {n} satisfies the grammar within the domains")
    counts = exact_state_count(graph)
    lap("count")
    if counts.exact_pre_closure + 1 > budget:
        raise BudgetExceeded(
            f"predicted ε-NFA size {counts.exact_pre_closure + 1} exceeds the budget {budget}",
            counts.exact_pre_closure + 1)
    ga = construct_acyclic_grammar(table, g, d, open_hours)
    pda = grammar_to_pda(ga)
    enfa = pda_to_nfa(pda, max_states=budget)
    lap("unfold")
    nfa = epsilon_closure(enfa)
    lap("closure")
    rnfa = heuristic_minimize_nfa(nfa)
    lap("reduce")
    dfa = subset_construction(rnfa, max_states=budget)
    lap("determinize")
    mdfa = minimize_layered(dfa)
    lap("minimize")

    sizes = {
        "ga_terms": len(ga.terminals), "ga_prods": len(ga.productions),
        "enfa_states": enfa.num_states, "enfa_trans": enfa.num_transitions,
        "predicted_pre": counts.exact_pre_closure, "predicted_post": counts.exact_post_closure,
        "upper_bound": counts.upper_bound,
    }
    for key, a in (("nfa", nfa), ("rnfa", rnfa), ("dfa", dfa), ("mdfa", mdfa)):
        sizes[f"{key}_states"] = a.num_states
        sizes[f"{key}_trans"] = a.num_transitions
    artifacts = {
        "grammar.cnf.txt": serialize_grammar(g),
        "domains.txt": serialize_domains(d, g.terminals),
        "acyclic_grammar.txt": "".join(
            f"{lhs} -> {' '.join(str(s) for s in rhs)}\n" for lhs, rhs in ga.productions),
        "nfa.fla": serialize_fla(nfa),
        "rnfa.fla": serialize_fla(rnfa),
        "dfa.fla": serialize_fla(dfa),
        "mdfa.fla": serialize_fla(mdfa),
        "count.tsv": count_tsv(counts),
    }
    report = PipelineReport(name, n, sizes, counts, artifacts, clock,
                            {"nfa": nfa, "rnfa": rnfa, "dfa": dfa, "mdfa": mdfa}, enfa)
    report.artifacts["report.tsv"] = report.tsv()
    return report


def write_artifacts(report: PipelineReport, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    for fname, text in report.artifacts.items():
        (out / fname).write_text(text)


def count_tsv(r: SizeReport) -> str:
    lines = ["quantity\tvalue",
             f"upper_bound\t{r.upper_bound}",
             f"exact_pre_closure\t{r.exact_pre_closure}",
             f"exact_post_closure\t{r.exact_post_closure}",
             f"stack_graph_pre_closure\t{r.stack_graph_pre_closure}",
             "",
             "layer\tpre_closure\tpost_closure"]
    n = len(r.post_closure_layers) - 1
    for k in range(n + 1):
        pre = r.pre_closure_layers[k] if k < n else 0
        lines.append(f"{k}\t{pre}\t{r.post_closure_layers[k]}")
    lines += ["", "node\tpaths\tstacks\tstack_graph_paths"]
    lines += ["\t".join(str(x) for x in row) for row in r.rows()]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- order experiments

@dataclass(frozen=True)
class OrderRow:
    family: str
    n: int
    left: int       # minimize after the other operator
    right: int      # minimize before it

    @property
    def ratio(self) -> float:
        return self.right / self.left

    def tsv(self) -> str:
        return f"{self.family}\t{self.n}\t{self.left}\t{self.right}\t{self.ratio:.4f}"


ORDER_HEADER = "family\tn\tleft\tright\tratio"


def order_experiment(family: str, n: int) -> OrderRow:
    """Compare operator orders on a separating family.

    separation-1: |min(unfold_n(A))| vs |unfold_n(min(A))|.
    separation-2: |min(simplify(unfold_n(A)))| vs |simplify(min(unfold_n(A)))|
    with value n removed from every domain.
    """
    if not 1 <= n <= 12:
        raise ValueError("n must be between 1 and 12")
    if family == "separation-1":
        a = separation1_dfa(n)
        left = minimize_layered(unfold(a, n)).num_states
        right = unfold(minimize_dfa(a), n).num_states
    elif family == "separation-2":
        a = separation2_dfa(n)
        d = separation2_domains(n)
        u = unfold(a, n)
        left = minimize_layered(simplify(u, d)).num_states
        right = simplify(minimize_layered(u), d).num_states
    else:
        raise ValueError(f"unknown family {family!r}")
    if left > right:
        raise AssertionError(f"{family} at n={n}: {left} > {right}")
    return OrderRow(family, n, left, right)
