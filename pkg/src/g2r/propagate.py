"""Domain filtering for Regular over layered automata, and a small CP solver.

The solver exists to cross-check the two ways of stating the same
constraint: CYK filtering on the grammar, or forward/backward filtering on
the automaton obtained from it.  Both are domain consistent, so with a
fixed variable and value order they must explore identical trees.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .automata import LayeredAutomaton
from .cyk import BudgetExceeded, propagate_grammar
from .grammar import Domains, Grammar, OpenHours


def regular_propagate(a: LayeredAutomaton, d: Domains) -> Domains:
    """Values that lie on some accepted word inside the domain product."""
    if len(d) != a.n:
        raise ValueError(f"{len(d)} domains for an automaton of length {a.n}")
    wiped = tuple(frozenset() for _ in d)
    if a.empty:
        return wiped
    layer = a.layer_of
    edges = [(s, x, t) for s, x, t in a.transitions if x in d[layer[s]]]
    fwd = [False] * a.num_states
    fwd[a.initial] = True
    for s, x, t in edges:               # sorted by source, sources layered
        if fwd[s]:
            fwd[t] = True
    bwd = [False] * a.num_states
    for f in a.finals:
        bwd[f] = True
    for s, x, t in reversed(edges):
        if bwd[t]:
            bwd[s] = True
    out = [set() for _ in d]
    for s, x, t in edges:
        if fwd[s] and bwd[t]:
            out[layer[s]].add(x)
    if not all(out):
        return wiped
    return tuple(frozenset(v) for v in out)


Propagator = Callable[[Domains], Domains]


def grammar_propagator(g: Grammar, open_hours: OpenHours = None) -> Propagator:
    def run(d: Domains) -> Domains:
        out = propagate_grammar(g, d, open_hours)
        return out if all(out) else tuple(frozenset() for _ in d)
    return run


def regular_propagator(a: LayeredAutomaton) -> Propagator:
    return lambda d: regular_propagate(a, d)


@dataclass
class CspModel:
    """m rows of n variables, one sequence constraint per row.

    ``demands[(i, v)] = k`` asks for at least k rows taking value v at slot
    i (1-based); ``strict`` turns that into more than k.  The objective is
    the sum of ``costs[value]`` over all variables; no costs means a pure
    satisfaction problem.
    """

    n: int
    values: tuple
    rows: list                                   # Propagator per row
    domains: list                                # Domains per row
    demands: dict = field(default_factory=dict)
    costs: dict = field(default_factory=dict)
    strict: bool = False

    def __post_init__(self):
        if len(self.rows) != len(self.domains):
            raise ValueError("one domain vector per row is required")
        for d in self.domains:
            if len(d) != self.n:
                raise ValueError(f"domain vector of length {len(d)}, expected {self.n}")
        if any(c < 0 for c in self.costs.values()):
            raise ValueError("objective coefficients must be nonnegative")
        for (i, v), k in self.demands.items():
            if not 1 <= i <= self.n or v not in self.values or k < 0:
                raise ValueError(f"bad demand {(i, v)}: {k}")

    @property
    def m(self) -> int:
        return len(self.rows)

    def required(self, i: int, v) -> int:
        k = self.demands.get((i, v), 0)
        return k + 1 if self.strict and (i, v) in self.demands else k

    def objective(self, assignment) -> int:
        return sum(self.costs.get(x, 0) for row in assignment for x in row)

    def feasible(self, assignment) -> bool:
        for (i, v) in self.demands:
            if sum(row[i - 1] == v for row in assignment) < self.required(i, v):
                return False
        return True


@dataclass(frozen=True)
class SolveResult:
    assignment: Optional[tuple]      # tuple of rows, each a tuple of values
    objective: Optional[int]
    nodes: int


class _Search:
    def __init__(self, model: CspModel, max_nodes: int):
        self.model = model
        self.max_nodes = max_nodes
        self.nodes = 0
        self.best = None
        self.best_value = None
        self.optimize = bool(model.costs)

    def propagate(self, doms: list, dirty: set) -> Optional[list]:
        """Filter the rows in ``dirty`` and force demands, to a fixpoint.

        Row filters are idempotent, so a row whose domains did not change
        since its last filtering is skipped.
        """
        m = self.model
        doms = list(doms)
        dirty = set(dirty)
        while True:
            for r in sorted(dirty):
                doms[r] = m.rows[r](doms[r])
                if not all(doms[r]):
                    return None
            dirty = set()
            for (i, v) in m.demands:
                need = m.required(i, v)
                able = [r for r in range(m.m) if v in doms[r][i - 1]]
                if len(able) < need:
                    return None
                if len(able) == need:
                    for r in able:
                        if len(doms[r][i - 1]) > 1:
                            row = list(doms[r])
                            row[i - 1] = frozenset([v])
                            doms[r] = tuple(row)
                            dirty.add(r)
            if not dirty:
                return doms

    def bound(self, doms) -> int:
        costs = self.model.costs
        return sum(min(costs.get(x, 0) for x in cell) for row in doms for cell in row)

    def run(self, doms: list, dirty: set) -> bool:
        """Depth-first search; returns True to stop (first solution found)."""
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise BudgetExceeded(f"search exceeds {self.max_nodes} nodes", self.nodes)
        doms = self.propagate(doms, dirty)
        if doms is None:
            return False
        if self.optimize and self.best_value is not None and self.bound(doms) >= self.best_value:
            return False
        slot = next(((r, i) for r in range(self.model.m) for i in range(self.model.n)
                     if len(doms[r][i]) > 1), None)
        if slot is None:
            assignment = tuple(tuple(next(iter(c)) for c in row) for row in doms)
            self.best = assignment
            self.best_value = self.model.objective(assignment)
            return not self.optimize
        r, i = slot
        for v in self.model.values:
            if v not in doms[r][i]:
                continue
            row = list(doms[r])
            row[i] = frozenset([v])
            child = list(doms)
            child[r] = tuple(row)
            if self.run(child, {r}):
                return True
        return False


def solve(model: CspModel, max_nodes: int = 10 ** 6) -> SolveResult:
    """Branch and bound with static left-to-right, row-major order."""
    search = _Search(model, max_nodes)
    search.run(list(model.domains), set(range(model.m)))
    return SolveResult(search.best, search.best_value, search.nodes)


def shift_model(propagator: Propagator, domains: Domains, m: int, values: Sequence[str],
                activities: Sequence[str], demands: dict, strict: bool = False) -> CspModel:
    """m identical workers; the objective counts worked activity slots."""
    return CspModel(n=len(domains), values=tuple(values), rows=[propagator] * m,
                    domains=[tuple(domains)] * m, demands=dict(demands),
                    costs={a: 1 for a in activities}, strict=strict)
