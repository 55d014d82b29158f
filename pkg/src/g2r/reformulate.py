"""Grammar constraint -> automaton, in three steps.

1. :func:`construct_acyclic_grammar` reads the supported CYK table as a
   position-indexed grammar whose language is exactly the solution set.
2. :func:`grammar_to_pda` turns it into the one-state leftmost-derivation PDA.
3. :func:`pda_to_nfa` enumerates reachable stack configurations as the
   states of an acyclic ε-NFA, and :func:`epsilon_closure` removes the
   ε-moves to get a layered NFA.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .automata import LayeredAutomaton, build_layered
from .cyk import BudgetExceeded, CykTable, Node
from .grammar import Domains, Grammar, OpenHours


@dataclass(frozen=True)
class AcyclicGrammar:
    start: Node
    nonterminals: tuple
    terminals: tuple
    productions: tuple   # (lhs Node, rhs tuple of Node)
    alphabet: tuple      # terminal names of the source grammar, in order

    @property
    def n(self) -> int:
        return self.start.length

    def production_set(self) -> set:
        return {(str(lhs), tuple(str(s) for s in rhs)) for lhs, rhs in self.productions}

    def words(self) -> set:
        """Language of the grammar, by expanding every derivation (small inputs only)."""
        by_lhs: dict = {}
        for lhs, rhs in self.productions:
            by_lhs.setdefault(lhs, []).append(rhs)
        memo: dict = {}

        def expand(sym):
            if sym.terminal:
                return {(sym.symbol,)}
            if sym not in memo:
                out = set()
                for rhs in by_lhs.get(sym, ()):
                    parts = [expand(s) for s in rhs]
                    acc = {()}
                    for part in parts:
                        acc = {a + b for a in acc for b in part}
                    out |= acc
                memo[sym] = out
            return memo[sym]

        return expand(self.start)


def construct_acyclic_grammar(table: CykTable, g: Grammar | None = None,
                              d: Domains | None = None,
                              open_hours: OpenHours = None) -> AcyclicGrammar:
    """Index every supported derivation of the CYK table by position.

    The first row is taken from the supported table, and a production is
    only instantiated where its position predicate holds.
    """
    g = g or table.grammar
    d = d if d is not None else table.domains
    open_hours = open_hours if open_hours is not None else table.open_hours
    if table.empty:
        raise ValueError("empty CYK table: the constraint has no solution")
    n = table.n
    terms, nts, prods = {}, {}, []
    for i in range(1, n + 1):
        for a in table[(i, 1)]:
            for p in g.by_lhs(a):
                if len(p.rhs) == 1 and p.rhs[0] in d[i - 1] and p.holds(i, 1, open_hours):
                    t = Node(p.rhs[0], i, 1, True)
                    terms.setdefault(t, None)
                    lhs = Node(a, i, 1)
                    nts.setdefault(lhs, None)
                    prods.append((lhs, (t,)))
    for j in range(2, n + 1):
        for i in range(1, n - j + 2):
            for a in table[(i, j)]:
                for k in range(1, j):
                    for p in g.by_lhs(a):
                        if len(p.rhs) != 2 or not p.holds(i, j, open_hours):
                            continue
                        b, c = p.rhs
                        if b in table[(i, k)] and c in table[(i + k, j - k)]:
                            lhs, left, right = Node(a, i, j), Node(b, i, k), Node(c, i + k, j - k)
                            for s in (lhs, left, right):
                                nts.setdefault(s, None)
                            prods.append((lhs, (left, right)))
    start = Node(g.start, 1, n)
    order = sorted(nts, key=lambda s: (-s.length, s.start, g.nonterminals.index(s.symbol)))
    return AcyclicGrammar(start, tuple(order), tuple(terms), tuple(prods), g.terminals)


@dataclass(frozen=True)
class Pda:
    """Single-state PDA accepting on empty stack.

    ``expand[A]`` lists the strings pushed in place of A (ε-moves);
    ``consume`` lists the terminals popped while reading themselves.
    """

    start: Node
    expand: dict
    consume: tuple
    alphabet: tuple

    def transitions(self) -> list:
        """Transition entries as (input or None, stack top, pushed string)."""
        out = []
        for top, alts in self.expand.items():
            for beta in alts:
                out.append((None, top, beta))
        for t in self.consume:
            out.append((t, t, ()))
        return out

    def step(self, stack: tuple):
        """Successor configurations: yields (consumed terminal or None, new stack)."""
        if not stack:
            return
        top, rest = stack[0], stack[1:]
        if top.terminal:
            yield top, rest
        else:
            for beta in self.expand.get(top, ()):
                yield None, beta + rest

    def derivation(self, word: Sequence[str]) -> Optional[list]:
        """Stack trace of some accepting run on word, or None."""
        consume = set(self.consume)

        def search(pos, stack, trace):
            if not stack:
                return trace if pos == len(word) else None
            for t, nxt in self.step(stack):
                if t is not None:
                    if t not in consume or pos >= len(word) or word[pos] != t.symbol:
                        continue
                    found = search(pos + 1, nxt, trace + [nxt])
                else:
                    found = search(pos, nxt, trace + [nxt])
                if found is not None:
                    return found
            return None

        return search(0, (self.start,), [(self.start,)])

    def accepts(self, word: Sequence[str]) -> bool:
        return self.derivation(word) is not None


def grammar_to_pda(ga: AcyclicGrammar) -> Pda:
    expand: dict = {}
    for lhs, rhs in ga.productions:
        expand.setdefault(lhs, []).append(tuple(rhs))
    return Pda(ga.start, {k: tuple(v) for k, v in expand.items()}, tuple(ga.terminals), ga.alphabet)


@dataclass
class EpsilonNfa:
    """Acyclic NFA whose states are PDA stacks (index 0 is the top)."""

    n: int
    alphabet: tuple
    states: list = field(default_factory=list)
    transitions: list = field(default_factory=list)   # (src, Node or None, dst)
    initial: int = 0
    final: Optional[int] = None
    index: dict = field(default_factory=dict)

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_transitions(self) -> int:
        return len(self.transitions)

    def words(self) -> set:
        out_edges = [[] for _ in self.states]
        for s, lab, t in self.transitions:
            out_edges[s].append((lab, t))
        result = set()
        stack = [(self.initial, ())]
        while stack:
            s, w = stack.pop()
            if s == self.final:
                result.add(w)
            for lab, t in out_edges[s]:
                stack.append((t, w if lab is None else w + (lab.symbol,)))
        return result


def _check_stack(stack: tuple, n: int):
    # positioned symbols must tile the rest of the word, top first;
    # so nothing popped can come back
    pos = stack[0].start if stack else n + 1
    for s in stack:
        if s.start != pos:
            raise AssertionError(f"stack {stack} is not contiguous")
        pos = s.end + 1
    if pos != n + 1:
        raise AssertionError(f"stack {stack} does not end at position {n}")


def pda_to_nfa(pda: Pda, max_states: int | None = None) -> EpsilonNfa:
    """Unfold the PDA into the ε-NFA of its reachable stack configurations."""
    n = pda.start.length
    nfa = EpsilonNfa(n=n, alphabet=pda.alphabet)

    def intern(stack):
        sid = nfa.index.get(stack)
        if sid is None:
            if max_states is not None and len(nfa.states) >= max_states:
                raise BudgetExceeded(f"ε-NFA exceeds {max_states} states", len(nfa.states) + 1)
            _check_stack(stack, n)
            sid = len(nfa.states)
            nfa.index[stack] = sid
            nfa.states.append(stack)
            queue.append(stack)
        return sid

    queue: deque = deque()
    nfa.initial = intern((pda.start,))
    while queue:
        stack = queue.popleft()
        src = nfa.index[stack]
        for label, nxt in pda.step(stack):
            nfa.transitions.append((src, label, intern(nxt)))
    nfa.final = nfa.index.get(())
    return nfa


def epsilon_closure(nfa: EpsilonNfa) -> LayeredAutomaton:
    """Remove ε-moves.

    Kept states: the initial state, states with a labelled outgoing move,
    and the final state.  A kept state p gets p -a-> r whenever some state
    ε-reachable from p reads a into a state from which r is the first kept
    state on an ε-path.  Unreachable and dead states are then dropped.
    """
    size = len(nfa.states)
    eps = [[] for _ in range(size)]
    lab = [[] for _ in range(size)]
    for s, label, t in nfa.transitions:
        if label is None:
            eps[s].append(t)
        else:
            lab[s].append((label, t))
    kept = [bool(lab[s]) for s in range(size)]
    kept[nfa.initial] = True
    if nfa.final is not None:
        kept[nfa.final] = True

    # reverse topological order of the ε-graph
    order = _topo_order(size, eps, nfa.initial)
    first_kept: list = [None] * size
    for s in reversed(order):
        if kept[s]:
            first_kept[s] = (s,)
        else:
            acc = dict()
            for t in eps[s]:
                for r in first_kept[t] or ():
                    acc[r] = None
            first_kept[s] = tuple(acc)
    for s in range(size):
        if first_kept[s] is None:
            # not ε-reachable from the initial state along the order above
            acc = dict()
            for r in _first_kept_dfs(s, eps, kept):
                acc[r] = None
            first_kept[s] = tuple(acc)

    layer = _layers(nfa)
    edges = []
    for p in range(size):
        if not kept[p]:
            continue
        for q in _eps_reach(p, eps):
            for label, t in lab[q]:
                for r in first_kept[t]:
                    edges.append((p, label.symbol if isinstance(label, Node) else label, r))
    finals = [nfa.final] if nfa.final is not None else []
    return build_layered(nfa.n, nfa.alphabet, nfa.initial, finals, edges,
                         labels={s: nfa.states[s] for s in range(size) if kept[s]},
                         layer_hint=layer)


def _eps_reach(p, eps):
    seen = {p}
    todo = [p]
    out = [p]
    while todo:
        s = todo.pop()
        for t in eps[s]:
            if t not in seen:
                seen.add(t)
                todo.append(t)
                out.append(t)
    return out


def _first_kept_dfs(s, eps, kept):
    out = []
    for t in eps[s]:
        if kept[t]:
            out.append(t)
        else:
            out.extend(_first_kept_dfs(t, eps, kept))
    return out


def _topo_order(size, eps, root):
    """Topological order of all states w.r.t. ε-edges (Kahn)."""
    indeg = [0] * size
    for s in range(size):
        for t in eps[s]:
            indeg[t] += 1
    todo = deque(s for s in range(size) if indeg[s] == 0)
    order = []
    while todo:
        s = todo.popleft()
        order.append(s)
        for t in eps[s]:
            indeg[t] -= 1
            if indeg[t] == 0:
                todo.append(t)
    if len(order) != size:
        raise ValueError("ε-transitions contain a cycle")
    return order


def _layers(nfa: EpsilonNfa) -> dict:
    """Number of symbols consumed to reach each state; must be unique."""
    layer = {nfa.initial: 0}
    todo = deque([nfa.initial])
    out_edges = [[] for _ in nfa.states]
    for s, label, t in nfa.transitions:
        out_edges[s].append((label, t))
    while todo:
        s = todo.popleft()
        for label, t in out_edges[s]:
            k = layer[s] + (label is not None)
            if t in layer:
                if layer[t] != k:
                    raise ValueError(f"state {t} is reached at layers {layer[t]} and {k}")
            else:
                layer[t] = k
                todo.append(t)
    return layer
