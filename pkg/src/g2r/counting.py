"""Predict the size of the unfolded NFA from the AND/OR graph alone.

A PDA stack with OR-node v on top is what you get by walking from v up to
the root and, every time the walk leaves an AND-node through its left
child, pushing that AND-node's right child.  Three counts follow:

* ``upper_bound``: number of root paths per node (distinct walks).
* ``stack_graph``: paths through the per-node stack graph, built by label
  propagation over the ancestors of v.
* ``exact``: distinct push sequences, found by determinizing the walk.

The stack graph merges walks by OR-node only, so two walks that pass
through the same node with different pending pushes can be recombined into
a sequence no walk produces; :func:`exact_state_count` therefore reports
the determinized count as the exact one and keeps the stack-graph figure
alongside for comparison.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .cyk import AndOrGraph


def path_counts(ga: AndOrGraph) -> list:
    """PD(v): number of root-to-v paths, for every OR-node."""
    pd = [0] * len(ga.or_nodes)
    if ga.empty:
        return pd
    pd[ga.root] = 1
    for v in range(len(ga.or_nodes)):          # ids are topological
        for a in ga.or_children[v]:
            for c in ga.and_nodes[a].children:
                pd[c] += pd[v]
    return pd


def path_count_upper_bound(ga: AndOrGraph) -> int:
    if ga.empty:
        raise ValueError("empty AND/OR graph")
    return sum(path_counts(ga))


@dataclass
class StackGraph:
    source: int
    vertices: set = field(default_factory=set)
    edges: set = field(default_factory=set)     # (OR id, OR id)
    sinks: set = field(default_factory=set)     # vertices whose span reaches position n

    def count_paths(self) -> int:
        """Paths from the source to a sink; each is one full stack."""
        succ: dict = {}
        for u, w in self.edges:
            succ.setdefault(u, []).append(w)
        memo: dict = {}

        def walk(u):
            if u not in memo:
                memo[u] = (u in self.sinks) + sum(walk(w) for w in succ.get(u, ()))
            return memo[u]

        return walk(self.source)

    def stacks(self, ga: AndOrGraph) -> set:
        """Stack words spelled by the paths (small graphs only)."""
        succ: dict = {}
        for u, w in self.edges:
            succ.setdefault(u, []).append(w)
        out = set()
        todo = [(self.source,)]
        while todo:
            p = todo.pop()
            if p[-1] in self.sinks:
                out.add(tuple(ga.or_nodes[u] for u in p))
            for w in succ.get(p[-1], ()):
                todo.append(p + (w,))
        return out


def build_stack_graph(ga: AndOrGraph, v: int) -> StackGraph:
    """Stack graph G_v by label propagation from v towards the root.

    Ancestors are visited in reverse topological order, so a label set is
    complete before it is read.  Each AND-node has at most one child on the
    way up (the children cover disjoint spans), so its label comes from
    that child alone.
    """
    if not 0 <= v < len(ga.or_nodes):
        raise KeyError(f"OR-node {v} is not in the graph")
    n = ga.n
    g = StackGraph(source=v, vertices={v})
    labels = {v: {v}}
    for c in range(v, -1, -1):
        if c not in labels:
            continue
        for a in ga.or_parents[c]:
            node = ga.and_nodes[a]
            if len(node.children) == 2 and node.children[0] == c:
                r = node.children[1]
                g.vertices.add(r)
                g.edges.update((u, r) for u in labels[c])
                carried = {r}
            else:
                carried = labels[c]
            labels.setdefault(node.parent, set()).update(carried)
    g.sinks = {u for u in g.vertices if ga.or_nodes[u].end == n}
    return g


class _StackCounter:
    """Distinct push sequences from a set of walk positions, memoized by subset."""

    def __init__(self, ga: AndOrGraph):
        self.ga = ga
        self.memo: dict = {}
        # per OR-node: ε-steps (right/only child) and pushes (left child)
        self.up_eps = [[] for _ in ga.or_nodes]
        self.up_push = [[] for _ in ga.or_nodes]
        for a, node in enumerate(ga.and_nodes):
            if len(node.children) == 2:
                left, right = node.children
                self.up_push[left].append((right, node.parent))
                self.up_eps[right].append(node.parent)
            else:
                self.up_eps[node.children[0]].append(node.parent)

    def closure(self, seeds) -> frozenset:
        seen = set(seeds)
        todo = list(seeds)
        while todo:
            c = todo.pop()
            for p in self.up_eps[c]:
                if p not in seen:
                    seen.add(p)
                    todo.append(p)
        return frozenset(seen)

    def count(self, subset: frozenset) -> int:
        # iterative over a post-order to stay clear of the recursion limit
        stack = [subset]
        while stack:
            s = stack[-1]
            if s in self.memo:
                stack.pop()
                continue
            succ = self.successors(s)
            pending = [t for t in succ.values() if t not in self.memo]
            if pending:
                stack.extend(pending)
                continue
            stack.pop()
            self.memo[s] = (self.ga.root in s) + sum(self.memo[t] for t in succ.values())
        return self.memo[subset]

    def successors(self, subset: frozenset) -> dict:
        by_push: dict = {}
        for c in subset:
            for r, p in self.up_push[c]:
                by_push.setdefault(r, set()).add(p)
        return {r: self.closure(ps) for r, ps in by_push.items()}


def stack_counts(ga: AndOrGraph) -> list:
    """Exact number of distinct stacks with each OR-node on top."""
    counter = _StackCounter(ga)
    return [counter.count(counter.closure([v])) for v in range(len(ga.or_nodes))]


@dataclass(frozen=True)
class SizeReport:
    upper_bound: int
    exact_pre_closure: int          # stacks of the ε-NFA, the empty stack excluded
    exact_post_closure: int         # states after ε-closure, the empty stack excluded
    stack_graph_pre_closure: int    # the same sum taken over stack-graph paths
    per_node: tuple                 # (label, PD, stacks, stack-graph paths)
    pre_closure_layers: tuple       # stacks by number of consumed symbols, 0..n-1
    post_closure_layers: tuple      # states after ε-closure by layer, 0..n (⟨⟩ at n)

    def rows(self) -> list:
        return [(str(lab), pd, ex, sg) for lab, pd, ex, sg in self.per_node]


def exact_state_count(ga: AndOrGraph) -> SizeReport:
    """Exact pre- and post-closure state counts without building the NFA.

    Post-closure the surviving states are the initial stack and the stacks
    topped by a terminal of position 2..n (each reached right after reading
    the previous symbol), plus the empty stack, which is reported in the
    layer breakdown but left out of the total.
    """
    if ga.empty:
        raise ValueError("empty AND/OR graph")
    n = ga.n
    pd = path_counts(ga)
    exact = stack_counts(ga)
    via_graph = [build_stack_graph(ga, v).count_paths() for v in range(len(ga.or_nodes))]
    pre_layers = [0] * n
    post_layers = [0] * (n + 1)
    post_layers[0] = 1
    post_layers[n] = 1
    for v, lab in enumerate(ga.or_nodes):
        pre_layers[lab.start - 1] += exact[v]
        if lab.terminal and lab.start >= 2:
            post_layers[lab.start - 1] += exact[v]
    per_node = tuple((lab, pd[v], exact[v], via_graph[v]) for v, lab in enumerate(ga.or_nodes))
    return SizeReport(
        upper_bound=sum(pd),
        exact_pre_closure=sum(exact),
        exact_post_closure=sum(post_layers) - 1,
        stack_graph_pre_closure=sum(via_graph),
        per_node=per_node,
        pre_closure_layers=tuple(pre_layers),
        post_closure_layers=tuple(post_layers),
    )
