"""CYK propagation for the Grammar constraint.

:func:`cyk_build` fills the table bottom-up from the domains, then walks it
top-down from the start symbol and keeps only entries that sit on some
complete derivation.  The survivors form the AND/OR graph: OR-nodes are
(symbol, start, length) entries, AND-nodes are production applications at a
split point.  The same graph doubles as the acyclic grammar used by the
reformulation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as _cartesian
from math import prod
from typing import NamedTuple, Optional, Sequence

from .grammar import Domains, Grammar, GrammarError, OpenHours


class BudgetExceeded(RuntimeError):
    """A construction or enumeration would exceed its configured cap."""

    def __init__(self, message: str, needed: int | None = None):
        self.needed = needed
        super().__init__(message)


class Node(NamedTuple):
    """A positioned symbol: nonterminal A_{i,j} or terminal a_i."""

    symbol: str
    start: int
    length: int
    terminal: bool = False

    @property
    def end(self) -> int:
        return self.start + self.length - 1

    def __str__(self):
        if self.terminal:
            return f"{self.symbol}_{self.start}"
        return f"{self.symbol}_{{{self.start},{self.length}}}"


@dataclass(frozen=True)
class AndNode:
    parent: int          # OR-node id
    production: int      # index into grammar.productions
    split: int           # k for binary applications, 0 for terminal ones
    children: tuple      # (left, right) OR ids, or (terminal OR id,)


@dataclass
class AndOrGraph:
    """Surviving part of the CYK table as a layered DAG.

    OR ids are in topological order (longer spans first), so every parent
    precedes its children and the root, when present, is id 0.
    """

    n: int
    grammar: Grammar
    or_nodes: list = field(default_factory=list)
    and_nodes: list = field(default_factory=list)
    or_children: list = field(default_factory=list)   # OR id -> [AND id]
    or_parents: list = field(default_factory=list)    # OR id -> [AND id]
    index: dict = field(default_factory=dict)         # Node -> OR id

    @property
    def root(self) -> Optional[int]:
        return 0 if self.or_nodes else None

    @property
    def empty(self) -> bool:
        return not self.or_nodes

    def node(self, label) -> int:
        """OR id for a Node or a plain (symbol, start, length[, terminal]) tuple."""
        key = label if isinstance(label, Node) else Node(*label)
        if key not in self.index:
            raise KeyError(f"{key} is not in the graph")
        return self.index[key]

    def is_terminal(self, v: int) -> bool:
        return self.or_nodes[v].terminal

    def role(self, v: int, a: int) -> str:
        """How OR-node v hangs under AND-node a: 'left', 'right' or 'only'."""
        ch = self.and_nodes[a].children
        if len(ch) == 1:
            return "only"
        return "left" if ch[0] == v else "right"

    def to_dot(self) -> str:
        lines = ["digraph andor {"]
        for v, label in enumerate(self.or_nodes):
            shape = "box" if label.terminal else "ellipse"
            lines.append(f'  o{v} [label="{label}", shape={shape}];')
        for a, node in enumerate(self.and_nodes):
            p = self.grammar.productions[node.production]
            lines.append(f'  n{a} [label="{p} k={node.split}", shape=point];')
            lines.append(f"  o{node.parent} -> n{a};")
            for c in node.children:
                lines.append(f"  n{a} -> o{c};")
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CykTable:
    """V[i][j] restricted to supported entries, plus the inputs it came from."""

    n: int
    cells: dict          # (i, j) -> tuple of nonterminals in grammar order
    grammar: Grammar
    domains: Domains
    open_hours: OpenHours = None

    def __getitem__(self, key) -> tuple:
        return self.cells.get(key, ())

    @property
    def empty(self) -> bool:
        return not any(self.cells.values())


def _check_inputs(g: Grammar, d: Domains):
    if not g.cnf:
        raise GrammarError("CYK needs a grammar in Chomsky normal form")
    if len(d) < 1:
        raise ValueError("constraint arity must be at least 1")


def cyk_build(g: Grammar, d: Domains, open_hours: OpenHours = None):
    """Return (CykTable, AndOrGraph) for Grammar([X_1..X_n], g) on domains d."""
    _check_inputs(g, d)
    n = len(d)
    nt_id = {a: k for k, a in enumerate(g.nonterminals)}
    start_bit = 1 << nt_id[g.start]

    unary = []   # (prod idx, A id, terminal)
    binary = []  # (prod idx, A id, B id, C id)
    for idx, p in enumerate(g.productions):
        if len(p.rhs) == 1:
            unary.append((idx, nt_id[p.lhs], p.rhs[0]))
        else:
            binary.append((idx, nt_id[p.lhs], nt_id[p.rhs[0]], nt_id[p.rhs[1]]))

    # bottom-up: gen[(i, j)] is a bitset of derivable nonterminals
    gen: dict[tuple[int, int], int] = {}
    derivs: dict[tuple[int, int], list] = {}
    for i in range(1, n + 1):
        bits = 0
        cell = []
        for idx, a, t in unary:
            if t in d[i - 1] and g.productions[idx].holds(i, 1, open_hours):
                bits |= 1 << a
                cell.append((idx, a, 0))
        gen[(i, 1)] = bits
        derivs[(i, 1)] = cell
    for j in range(2, n + 1):
        for i in range(1, n - j + 2):
            bits = 0
            cell = []
            for idx, a, b, c in binary:
                if not g.productions[idx].holds(i, j, open_hours):
                    continue
                bb, cb = 1 << b, 1 << c
                for k in range(1, j):
                    if gen[(i, k)] & bb and gen[(i + k, j - k)] & cb:
                        bits |= 1 << a
                        cell.append((idx, a, k))
            gen[(i, j)] = bits
            derivs[(i, j)] = cell

    graph = AndOrGraph(n=n, grammar=g)
    if not gen[(1, n)] & start_bit:
        return CykTable(n, {}, g, tuple(d), open_hours), graph

    # top-down: keep what hangs off the root
    children_of = {idx: (b, c) for idx, _, b, c in binary}
    marked: dict[tuple[int, int], int] = {(1, n): start_bit}
    kept: list = []   # (i, j, prod idx, A id, k)
    for j in range(n, 0, -1):
        for i in range(1, n - j + 2):
            m = marked.get((i, j), 0)
            if not m:
                continue
            for idx, a, k in derivs[(i, j)]:
                if not m >> a & 1:
                    continue
                kept.append((i, j, idx, a, k))
                if k:
                    b, c = children_of[idx]
                    marked[(i, k)] = marked.get((i, k), 0) | 1 << b
                    marked[(i + k, j - k)] = marked.get((i + k, j - k), 0) | 1 << c

    cells = {}
    labels = []
    for j in range(n, 0, -1):
        for i in range(1, n - j + 2):
            m = marked.get((i, j), 0)
            names = tuple(a for a in g.nonterminals if m >> nt_id[a] & 1)
            if names:
                cells[(i, j)] = names
                labels.extend(Node(a, i, j) for a in names)
    term_labels = sorted(
        {Node(g.productions[idx].rhs[0], i, 1, True) for i, j, idx, a, k in kept if k == 0},
        key=lambda t: (t.start, g.terminals.index(t.symbol)),
    )
    labels.extend(term_labels)
    graph.or_nodes = labels
    graph.index = {lab: v for v, lab in enumerate(labels)}
    graph.or_children = [[] for _ in labels]
    graph.or_parents = [[] for _ in labels]
    kept.sort(key=lambda r: (graph.index[Node(g.nonterminals[r[3]], r[0], r[1])], r[4], r[2]))
    for i, j, idx, a, k in kept:
        parent = graph.index[Node(g.nonterminals[a], i, j)]
        p = g.productions[idx]
        if k:
            children = (graph.index[Node(p.rhs[0], i, k)], graph.index[Node(p.rhs[1], i + k, j - k)])
        else:
            children = (graph.index[Node(p.rhs[0], i, 1, True)],)
        aid = len(graph.and_nodes)
        graph.and_nodes.append(AndNode(parent, idx, k, children))
        graph.or_children[parent].append(aid)
        for c in children:
            graph.or_parents[c].append(aid)
    return CykTable(n, cells, g, tuple(d), open_hours), graph


def propagate_grammar(g: Grammar, d: Domains, open_hours: OpenHours = None) -> Domains:
    """Domain-consistent filtering of d under Grammar(g)."""
    _, graph = cyk_build(g, d, open_hours)
    out = [set() for _ in d]
    for label in graph.or_nodes:
        if label.terminal:
            out[label.start - 1].add(label.symbol)
    return tuple(frozenset(s) for s in out)


def recognize(g: Grammar, word: Sequence[str], open_hours: OpenHours = None) -> bool:
    """Textbook CYK membership test, used as an oracle."""
    if not g.cnf:
        raise GrammarError("CYK needs a grammar in Chomsky normal form")
    n = len(word)
    if n == 0:
        return False
    table: dict[tuple[int, int], set] = {}
    for i in range(1, n + 1):
        table[(i, 1)] = {p.lhs for p in g.productions
                         if len(p.rhs) == 1 and p.rhs[0] == word[i - 1] and p.holds(i, 1, open_hours)}
    for j in range(2, n + 1):
        for i in range(1, n - j + 2):
            cell = set()
            for p in g.productions:
                if len(p.rhs) != 2 or p.lhs in cell or not p.holds(i, j, open_hours):
                    continue
                b, c = p.rhs
                if any(b in table[(i, k)] and c in table[(i + k, j - k)] for k in range(1, j)):
                    cell.add(p.lhs)
            table[(i, j)] = cell
    return g.start in table[(1, n)]


def enumerate_solutions(g: Grammar, d: Domains, open_hours: OpenHours = None,
                        limit: int = 10 ** 7) -> list:
    """Every word of the domain product accepted by g, in value order."""
    size = prod(len(x) for x in d)
    if size > limit:
        raise BudgetExceeded(f"{size} candidate words exceed the limit {limit}", size)
    order = {t: k for k, t in enumerate(g.terminals)}
    axes = [sorted(x, key=lambda t: order.get(t, len(order))) for x in d]
    return [w for w in _cartesian(*axes) if recognize(g, w, open_hours)]
