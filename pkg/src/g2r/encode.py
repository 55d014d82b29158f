"""CNF and pseudo-Boolean encodings of Grammar and Regular.

Every formula starts with one value literal ``x[i,s]`` per position and
alphabet symbol, tied by exactly-one clauses.  Structural literals are
defined by equivalences, so they are functionally determined by the value
literals and the model count equals the number of solutions.

Grammar (over the AND/OR graph):
  in[v] <-> OR of its AND-nodes, and[p] <-> in[left] & in[right],
  in[a_i] <-> x[i,a], and in[root] is a unit.  The strong variant adds
  out[root], w[p,c] <-> out[parent] & in[sibling], out[c] <-> OR of w[.,c]
  and x[i,a] -> out[a_i].

Regular (over a layered automaton):
  f[q] <-> OR of tf[e] over edges into q, tf[e] <-> f[src] & x[e], f[init],
  and the clause OR f[final].  The strong variant adds the backward
  g[q] <-> OR of tb[e], tb[e] <-> x[e] & g[dst], g[final] as units,
  u[e] <-> f[src] & x[e] & g[dst] and x[k,s] -> OR of u[e] over matching e.

Unit propagation on the strong variants prunes exactly the values the
propagators prune; the weak variants only detect that nothing is left.
"""
from __future__ import annotations

import re
from itertools import product
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .automata import LayeredAutomaton
from .cyk import AndOrGraph
from .grammar import Domains

STRONG, WEAK = "strong", "weak"


@dataclass
class CnfFormula:
    num_vars: int = 0
    clauses: list = field(default_factory=list)
    names: dict = field(default_factory=dict)     # name -> variable index

    def var(self, name: str) -> int:
        if " " in name:
            raise ValueError(f"atom names cannot contain spaces: {name!r}")
        v = self.names.get(name)
        if v is None:
            self.num_vars += 1
            v = self.names[name] = self.num_vars
        return v

    def add(self, *lits: int):
        self.clauses.append(tuple(lits))

    def iff_and(self, out: int, ins: Sequence[int]):
        for x in ins:
            self.add(-out, x)
        self.add(out, *(-x for x in ins))

    def iff_or(self, out: int, ins: Sequence[int]):
        for x in ins:
            self.add(out, -x)
        self.add(-out, *ins)

    def value_literals(self, prefix: str = "") -> dict:
        """(position, symbol) -> variable, for every x literal under prefix."""
        out = {}
        pat = re.compile(re.escape(prefix) + r"x\[(\d+),(.+)\]$")
        for name, v in self.names.items():
            m = pat.match(name)
            if m:
                out[(int(m.group(1)), m.group(2))] = v
        return out


def value_block(f: CnfFormula, d: Domains, alphabet: Sequence[str], prefix: str = "") -> dict:
    x = {}
    for i in range(1, len(d) + 1):
        lits = [f.var(f"{prefix}x[{i},{s}]") for s in alphabet]
        for s, v in zip(alphabet, lits):
            x[(i, s)] = v
        f.add(*lits)
        for a in range(len(lits)):
            for b in range(a + 1, len(lits)):
                f.add(-lits[a], -lits[b])
        for s in alphabet:
            if s not in d[i - 1]:
                f.add(-x[(i, s)])
    return x


def _check_strength(strength: str):
    if strength not in (STRONG, WEAK):
        raise ValueError(f"strength must be {STRONG!r} or {WEAK!r}")


def encode_grammar_cnf(ga: AndOrGraph, d: Domains, strength: str = STRONG,
                       alphabet: Optional[Sequence[str]] = None,
                       f: Optional[CnfFormula] = None, prefix: str = "") -> CnfFormula:
    _check_strength(strength)
    if ga.empty:
        raise ValueError("empty AND/OR graph: the constraint has no solution")
    if len(d) != ga.n:
        raise ValueError(f"{len(d)} domains for a graph of length {ga.n}")
    alphabet = tuple(alphabet or ga.grammar.terminals)
    f = f if f is not None else CnfFormula()
    x = value_block(f, d, alphabet, prefix)
    labels = ga.or_nodes
    ins = [f.var(f"{prefix}in[{lab}]") for lab in labels]
    ands = [f.var(f"{prefix}and[{p}]") for p in range(len(ga.and_nodes))]
    if strength == STRONG:
        outs = [f.var(f"{prefix}out[{lab}]") for lab in labels]
        ws = {}
        for p, node in enumerate(ga.and_nodes):
            for c in node.children:
                ws[(p, c)] = f.var(f"{prefix}w[{p},{labels[c]}]")
    covered = set()
    for v, lab in enumerate(labels):
        if lab.terminal:
            f.add(-ins[v], x[(lab.start, lab.symbol)])
            f.add(ins[v], -x[(lab.start, lab.symbol)])
            covered.add((lab.start, lab.symbol))
        else:
            f.iff_or(ins[v], [ands[p] for p in ga.or_children[v]])
    for p, node in enumerate(ga.and_nodes):
        f.iff_and(ands[p], [ins[c] for c in node.children])
    f.add(ins[ga.root])
    for (i, s), lit in x.items():
        if (i, s) not in covered:
            f.add(-lit)
    if strength == WEAK:
        return f
    f.add(outs[ga.root])
    for p, node in enumerate(ga.and_nodes):
        for c in node.children:
            sib = [ins[o] for o in node.children if o != c]
            f.iff_and(ws[(p, c)], [outs[node.parent]] + sib)
    for v, lab in enumerate(labels):
        if v != ga.root:
            f.iff_or(outs[v], [ws[(p, v)] for p in ga.or_parents[v]])
        if lab.terminal:
            f.add(-x[(lab.start, lab.symbol)], outs[v])
    return f


def encode_regular_cnf(a: LayeredAutomaton, d: Domains, strength: str = STRONG,
                       f: Optional[CnfFormula] = None, prefix: str = "") -> CnfFormula:
    _check_strength(strength)
    if a.empty:
        raise ValueError("empty automaton: the constraint has no solution")
    if len(d) != a.n:
        raise ValueError(f"{len(d)} domains for an automaton of length {a.n}")
    f = f if f is not None else CnfFormula()
    x = value_block(f, d, a.alphabet, prefix)
    layer = a.layer_of
    fs = [f.var(f"{prefix}f[{q}]") for q in range(a.num_states)]
    edges = a.transitions
    tf = [f.var(f"{prefix}tf[{s},{sym},{t}]") for s, sym, t in edges]
    into = [[] for _ in range(a.num_states)]
    for e, (s, sym, t) in enumerate(edges):
        f.iff_and(tf[e], [fs[s], x[(layer[s] + 1, sym)]])
        into[t].append(tf[e])
    for q in range(a.num_states):
        if q == a.initial:
            f.add(fs[q])
        else:
            f.iff_or(fs[q], into[q])
    f.add(*(fs[q] for q in sorted(a.finals)))
    covered = {(layer[s] + 1, sym) for s, sym, _ in edges}
    for (i, s), lit in x.items():
        if (i, s) not in covered:
            f.add(-lit)
    if strength == WEAK:
        return f
    gs = [f.var(f"{prefix}g[{q}]") for q in range(a.num_states)]
    tb = [f.var(f"{prefix}tb[{s},{sym},{t}]") for s, sym, t in edges]
    us = [f.var(f"{prefix}u[{s},{sym},{t}]") for s, sym, t in edges]
    outof = [[] for _ in range(a.num_states)]
    support: dict = {}
    for e, (s, sym, t) in enumerate(edges):
        xe = x[(layer[s] + 1, sym)]
        f.iff_and(tb[e], [xe, gs[t]])
        f.iff_and(us[e], [fs[s], xe, gs[t]])
        outof[s].append(tb[e])
        support.setdefault(xe, []).append(us[e])
    for q in range(a.num_states):
        if q in a.finals:
            f.add(gs[q])
        else:
            f.iff_or(gs[q], outof[q])
    for xe, lits in support.items():
        f.add(-xe, *lits)
    return f


# ---------------------------------------------------------------- reasoning

class UnitPropagator:
    """Unit propagation over a fixed clause set, with occurrence lists."""

    def __init__(self, formula: CnfFormula):
        self.f = formula
        self.occurs: dict = {}
        self.units = []
        self.empty = False
        for c, clause in enumerate(formula.clauses):
            if not clause:
                self.empty = True
            if len(clause) == 1:
                self.units.append(clause[0])
            for lit in clause:
                self.occurs.setdefault(lit, []).append(c)

    def propagate(self, assumptions: Iterable[int] = (), assignment: Optional[dict] = None,
                  fixpoint: bool = False):
        """Extend the assignment (var -> bool); returns it, or None on conflict.

        ``fixpoint`` says the given assignment is already closed under UP,
        so only the assumptions need to be propagated.
        """
        if self.empty:
            return None
        value = dict(assignment or {})
        queue = []

        def assign(lit):
            v = abs(lit)
            want = lit > 0
            if v in value:
                return value[v] == want
            value[v] = want
            queue.append(lit)
            return True

        for lit in list(self.units) + list(assumptions):
            if not assign(lit):
                return None
        if assignment and not fixpoint:
            queue.extend(v if b else -v for v, b in assignment.items())
        clauses = self.f.clauses
        head = 0
        while head < len(queue):
            lit = queue[head]
            head += 1
            for c in self.occurs.get(-lit, ()):
                free = None
                count = 0
                sat = False
                for l2 in clauses[c]:
                    b = value.get(abs(l2))
                    if b is None:
                        count += 1
                        free = l2
                        if count > 1:
                            break
                    elif b == (l2 > 0):
                        sat = True
                        break
                if sat or count > 1:
                    continue
                if count == 0:
                    return None
                if not assign(free):
                    return None
        return value

    def count_models(self, assignment: Optional[dict] = None, limit: Optional[int] = None) -> int:
        """Exact model count over all variables (DPLL, branching in index order)."""
        return sum(1 << free for _, free in self._models(assignment, limit))

    def models(self, assignment: Optional[dict] = None, limit: Optional[int] = None):
        """Total models; variables left free by a satisfied branch are set false."""
        for value, _ in self._models(assignment, limit):
            yield {v: value.get(v, False) for v in range(1, self.f.num_vars + 1)}

    def _models(self, assignment, limit):
        found = 0
        stack = [self.propagate(assignment=assignment)]
        while stack:
            value = stack.pop()
            if value is None:
                continue
            if all(any(value.get(abs(l)) == (l > 0) for l in c) for c in self.f.clauses):
                yield value, self.f.num_vars - len(value)
                found += 1
                if limit is not None and found >= limit:
                    return
                continue
            v = next(k for k in range(1, self.f.num_vars + 1) if k not in value)
            stack.append(self.propagate((-v,), value, fixpoint=True))
            stack.append(self.propagate((v,), value, fixpoint=True))


def projected_words(formula: CnfFormula, n: int, alphabet: Sequence[str], prefix: str = "") -> list:
    """Models of the formula read back as words, one per model."""
    x = formula.value_literals(prefix)
    out = []
    for model in UnitPropagator(formula).models():
        word = []
        for i in range(1, n + 1):
            chosen = [s for s in alphabet if model[x[(i, s)]]]
            if len(chosen) != 1:
                raise AssertionError(f"position {i} has values {chosen} in a model")
            word.append(chosen[0])
        out.append(tuple(word))
    return out


def up_domains(formula: CnfFormula, d: Domains, alphabet: Sequence[str], prefix: str = "") -> Optional[Domains]:
    """Domains left after asserting d and running UP; None on refutation."""
    x = formula.value_literals(prefix)
    assumptions = [-x[(i, s)] for i in range(1, len(d) + 1) for s in alphabet if s not in d[i - 1]]
    value = UnitPropagator(formula).propagate(assumptions)
    if value is None:
        return None
    return tuple(frozenset(s for s in alphabet if value.get(x[(i, s)], True))
                 for i in range(1, len(d) + 1))


# ---------------------------------------------------------------- DIMACS

def to_dimacs(f: CnfFormula) -> str:
    lines = [f"p cnf {f.num_vars} {len(f.clauses)}"]
    lines.extend(" ".join(str(l) for l in c) + (" 0" if c else "0") for c in f.clauses)
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CnfFormula:
    f = CnfFormula()
    header = None
    pending = []
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("c"):
            continue
        if ln.startswith("p"):
            parts = ln.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad DIMACS header {ln!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        for tok in ln.split():
            lit = int(tok)
            if lit == 0:
                f.clauses.append(tuple(pending))
                pending = []
            else:
                pending.append(lit)
    if header is None:
        raise ValueError("missing 'p cnf' header")
    if pending:
        raise ValueError("last clause is not terminated by 0")
    f.num_vars = header[0]
    if len(f.clauses) != header[1]:
        raise ValueError(f"header promises {header[1]} clauses, found {len(f.clauses)}")
    return f


def to_mapping(f: CnfFormula) -> str:
    return "".join(f"atom {name} {v}\n" for name, v in sorted(f.names.items(), key=lambda e: e[1]))


def parse_mapping(text: str) -> dict:
    out = {}
    for ln in text.splitlines():
        if ln.strip():
            tag, name, v = ln.split()
            if tag != "atom":
                raise ValueError(f"bad mapping line {ln!r}")
            out[name] = int(v)
    return out


# ---------------------------------------------------------------- PB model

@dataclass
class PbModel:
    """Linear constraints sum(coef * var) >= rhs over 0/1 variables."""

    num_vars: int
    objective: list                 # (coef, var)
    constraints: list               # (terms [(coef, var)], rhs)
    names: dict = field(default_factory=dict)
    n: int = 0
    m: int = 0
    activities: tuple = ()
    blocks: list = field(default_factory=list)     # per worker: (formula, offset, prefix)
    alphabet: tuple = ()
    formula: Optional[CnfFormula] = None

    def to_opb(self) -> str:
        lines = [f"* #variable= {self.num_vars} #constraint= {len(self.constraints)}"]
        if self.objective:
            lines.append("min: " + " ".join(_term(c, v) for c, v in self.objective) + " ;")
        for terms, rhs in self.constraints:
            lines.append(" ".join(_term(c, v) for c, v in terms) + f" >= {rhs} ;")
        return "\n".join(lines) + "\n"


def _term(c: int, v: int) -> str:
    return f"{c:+d} x{v}"


_TERM_RE = re.compile(r"([+-]\d+)\s+x(\d+)")


def parse_opb(text: str) -> PbModel:
    num_vars = None
    objective, constraints = [], []
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln:
            continue
        if ln.startswith("*"):
            m = re.search(r"#variable=\s*(\d+)", ln)
            if m:
                num_vars = int(m.group(1))
            continue
        if not ln.endswith(";"):
            raise ValueError(f"OPB line without ';': {ln!r}")
        body = ln[:-1].strip()
        if body.startswith("min:"):
            objective = [(int(c), int(v)) for c, v in _TERM_RE.findall(body[4:])]
            continue
        lhs, op, rhs = body.rpartition(">=")
        if not op:
            raise ValueError(f"only '>=' constraints are supported: {ln!r}")
        constraints.append(([(int(c), int(v)) for c, v in _TERM_RE.findall(lhs)], int(rhs)))
    if num_vars is None:
        num_vars = max((v for t, _ in constraints for _, v in t), default=0)
    return PbModel(num_vars, objective, constraints)


def clause_to_pb(clause: Sequence[int]) -> tuple:
    # l1 | ... | lk  ==>  sum(pos) - sum(neg) >= 1 - #neg
    terms = [(1 if l > 0 else -1, abs(l)) for l in clause]
    return terms, 1 - sum(1 for l in clause if l < 0)


def build_shift_pb(n: int, m: int, activities: Sequence[str], demands: dict,
                   worker: str, strength: str = STRONG, *, graph: Optional[AndOrGraph] = None,
                   automaton: Optional[LayeredAutomaton] = None,
                   domains: Optional[Domains] = None, alphabet: Optional[Sequence[str]] = None,
                   strict: bool = False) -> PbModel:
    """The PB shift model: one constraint encoding per worker plus demands.

    ``worker`` picks the per-worker encoding, ``"grammar"`` (needs
    ``graph``) or ``"regular"`` (needs ``automaton``).  Variables
    b(i,j,a) come first, then the worker blocks in order.
    """
    if n < 1 or m < 1 or not activities:
        raise ValueError("need n >= 1, m >= 1 and at least one activity")
    for (i, a), k in demands.items():
        if not 1 <= i <= n or a not in activities or k < 0:
            raise ValueError(f"demand {(i, a)}: {k} is outside the {n} x {len(activities)} table")
    if worker == "grammar":
        if graph is None:
            raise ValueError("grammar workers need the AND/OR graph")
        alphabet = tuple(alphabet or graph.grammar.terminals)
    elif worker == "regular":
        if automaton is None:
            raise ValueError("regular workers need a layered automaton")
        alphabet = tuple(alphabet or automaton.alphabet)
    else:
        raise ValueError("worker must be 'grammar' or 'regular'")
    domains = domains or tuple(frozenset(alphabet) for _ in range(n))

    f = CnfFormula()
    b = {}
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            for a in activities:
                b[(i, j, a)] = f.var(f"b[{i},{j},{a}]")
    blocks = []
    for j in range(1, m + 1):
        prefix = f"w{j}:"
        if worker == "grammar":
            encode_grammar_cnf(graph, domains, strength, alphabet, f=f, prefix=prefix)
        else:
            encode_regular_cnf(automaton, domains, strength, f=f, prefix=prefix)
        blocks.append(prefix)
        for i in range(1, n + 1):
            for a in activities:
                xv = f.names[f"{prefix}x[{i},{a}]"]
                f.add(-b[(i, j, a)], xv)
                f.add(b[(i, j, a)], -xv)
    constraints = [clause_to_pb(c) for c in f.clauses]
    for i in range(1, n + 1):
        for a in activities:
            k = demands.get((i, a), 0)
            if (i, a) in demands and (k > 0 or strict):
                rhs = k + 1 if strict else k
                constraints.append(([(1, b[(i, j, a)]) for j in range(1, m + 1)], rhs))
    objective = [(1, b[key]) for key in sorted(b, key=lambda e: b[e])]
    return PbModel(f.num_vars, objective, constraints, dict(f.names), n, m, tuple(activities),
                   blocks, alphabet, f)


def pb_optimum_by_enumeration(model: PbModel, limit: int = 10 ** 5):
    """Optimum of a shift PB model by enumerating each worker block's words.

    Returns (objective, tuple of words) or None when infeasible.
    """
    f = model.formula
    # every block encodes the same constraint, so enumerate one in isolation
    prefix = model.blocks[0]
    sub = CnfFormula()
    keep = {}
    for name, v in f.names.items():
        if name.startswith(prefix):
            keep[v] = sub.var(name)
    for c in f.clauses:
        if c and all(abs(l) in keep for l in c):
            sub.add(*((keep[abs(l)] if l > 0 else -keep[abs(l)]) for l in c))
    words = projected_words(sub, model.n, model.alphabet, prefix)
    if len(words) ** model.m > limit:
        raise ValueError(f"{len(words)}^{model.m} worker combinations exceed the limit {limit}")
    need = [(terms, rhs) for terms, rhs in model.constraints if all(c == 1 for c, _ in terms)
            and all(_is_b(model, v) for _, v in terms)]
    best = None
    for combo in product(sorted(words), repeat=model.m):
        value = {}
        for j, w in enumerate(combo, start=1):
            for i, s in enumerate(w, start=1):
                for a in model.activities:
                    value[model.names[f"b[{i},{j},{a}]"]] = s == a
        if all(sum(value[v] for _, v in terms) >= rhs for terms, rhs in need):
            obj = sum(c * value[v] for c, v in model.objective)
            if best is None or obj < best[0]:
                best = (obj, combo)
    return best


def _is_b(model: PbModel, v: int) -> bool:
    return v <= model.n * model.m * len(model.activities)
