"""Layered automata and the operators on them.

A :class:`LayeredAutomaton` accepts words of one fixed length n.  Its states
are numbered so that layer k occupies a contiguous id range, layer 0 holds
only the initial state and every accepting state sits in layer n.  All
constructors go through :func:`build_layered`, which trims states that are
not on an accepting path and renumbers by breadth-first search, so equal
inputs always give identical objects.

:class:`Dfa` is an ordinary (possibly cyclic) partial DFA, used for unfolding
and for the classical minimization that the order experiments compare with.
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .cyk import BudgetExceeded

DEFAULT_BUDGET = 10 ** 6


@dataclass(frozen=True)
class LayeredAutomaton:
    n: int
    alphabet: tuple
    layer_sizes: tuple            # states per layer, len n+1
    transitions: tuple            # sorted (src, symbol, dst)
    initial: Optional[int]
    finals: frozenset
    labels: Optional[tuple] = None   # optional state names, debugging only

    def __post_init__(self):
        if len(self.layer_sizes) != self.n + 1:
            raise ValueError("layer_sizes must have n+1 entries")
        sym = set(self.alphabet)
        layer = self.layer_of
        for s, a, t in self.transitions:
            if a not in sym:
                raise ValueError(f"symbol {a!r} is not in the alphabet")
            if not (0 <= s < self.num_states and 0 <= t < self.num_states):
                raise ValueError(f"transition {s} {a} {t} refers to an unknown state")
            if layer[t] != layer[s] + 1:
                raise ValueError(f"transition {s} {a} {t} does not go to the next layer")
        for f in self.finals:
            if layer[f] != self.n:
                raise ValueError(f"accepting state {f} is not in layer {self.n}")
        if self.initial is not None and layer[self.initial] != 0:
            raise ValueError("initial state must be in layer 0")

    @property
    def num_states(self) -> int:
        return sum(self.layer_sizes)

    @property
    def num_transitions(self) -> int:
        return len(self.transitions)

    @property
    def empty(self) -> bool:
        return self.initial is None

    @property
    def layer_of(self) -> tuple:
        out = []
        for k, size in enumerate(self.layer_sizes):
            out.extend([k] * size)
        return tuple(out)

    def layer(self, k: int) -> range:
        lo = sum(self.layer_sizes[:k])
        return range(lo, lo + self.layer_sizes[k])

    def out_edges(self) -> list:
        out = [[] for _ in range(self.num_states)]
        for s, a, t in self.transitions:
            out[s].append((a, t))
        return out

    @property
    def deterministic(self) -> bool:
        seen = set()
        for s, a, _ in self.transitions:
            if (s, a) in seen:
                return False
            seen.add((s, a))
        return True

    def accepts(self, word: Sequence[str]) -> bool:
        if self.empty or len(word) != self.n:
            return False
        out = self.out_edges()
        current = {self.initial}
        for a in word:
            current = {t for s in current for b, t in out[s] if b == a}
            if not current:
                return False
        return bool(current & self.finals)

    def words(self) -> set:
        """Every accepted word (the automaton is trim, so no dead ends)."""
        if self.empty:
            return set()
        out = self.out_edges()
        result = set()
        stack = [(self.initial, ())]
        while stack:
            s, w = stack.pop()
            if len(w) == self.n:
                if s in self.finals:
                    result.add(w)
                continue
            for a, t in out[s]:
                stack.append((t, w + (a,)))
        return result

    def count_words(self) -> int:
        if self.empty:
            return 0
        ways = [0] * self.num_states
        for f in self.finals:
            ways[f] = 1
        for s, a, t in sorted(self.transitions, key=lambda e: -e[0]):
            ways[s] += ways[t]
        return ways[self.initial]


def empty_automaton(n: int, alphabet: Iterable[str]) -> LayeredAutomaton:
    return LayeredAutomaton(n, tuple(alphabet), (0,) * (n + 1), (), None, frozenset())


def build_layered(n: int, alphabet: Iterable[str], initial, finals: Iterable,
                  edges: Iterable, labels: Optional[dict] = None,
                  layer_hint: Optional[dict] = None) -> LayeredAutomaton:
    """Trim and canonically number an automaton given by arbitrary state keys.

    States may be any hashable keys.  Layers are the BFS distance from the
    initial state; ``layer_hint`` is only used to double check them.
    """
    alphabet = tuple(alphabet)
    sym_rank = {a: k for k, a in enumerate(alphabet)}
    out = defaultdict(set)
    back = defaultdict(set)
    for s, a, t in edges:
        if a not in sym_rank:
            raise ValueError(f"symbol {a!r} is not in the alphabet")
        out[s].add((a, t))
        back[t].add(s)
    finals = set(finals)
    if initial is None:
        return empty_automaton(n, alphabet)

    # forward reachability with layers
    layer = {initial: 0}
    todo = deque([initial])
    while todo:
        s = todo.popleft()
        for _, t in out[s]:
            if t not in layer:
                layer[t] = layer[s] + 1
                todo.append(t)
            elif layer[t] != layer[s] + 1:
                raise ValueError(f"state {t!r} is reachable at two different depths")
    if layer_hint is not None:
        for s, k in layer.items():
            if s in layer_hint and layer_hint[s] != k:
                raise ValueError(f"state {s!r}: expected layer {layer_hint[s]}, found {k}")
    if any(k > n for k in layer.values()):
        raise ValueError(f"automaton reads more than {n} symbols")

    live = {f for f in finals if layer.get(f) == n}
    todo = deque(live)
    while todo:
        t = todo.popleft()
        for s in back[t]:
            if s in layer and s not in live:
                live.add(s)
                todo.append(s)
    if initial not in live:
        return empty_automaton(n, alphabet)

    # BFS renumbering; ties broken by symbol order, then first discovery
    number = {initial: 0}
    order = [initial]
    head = 0
    while head < len(order):
        s = order[head]
        head += 1
        succ = sorted((e for e in out[s] if e[1] in live), key=lambda e: (sym_rank[e[0]], _key(e[1])))
        for _, t in succ:
            if t not in number:
                number[t] = len(order)
                order.append(t)
    sizes = [0] * (n + 1)
    for s in order:
        sizes[layer[s]] += 1
    trans = sorted({(number[s], a, number[t]) for s in order for a, t in out[s] if t in live},
                   key=lambda e: (e[0], sym_rank[e[1]], e[2]))
    lab = None
    if labels is not None:
        lab = tuple(_state_name(labels.get(s, "")) for s in order)
    return LayeredAutomaton(n, alphabet, tuple(sizes), tuple(trans), 0,
                            frozenset(number[f] for f in live if f in finals), lab)


def _key(x):
    # stable ordering for heterogeneous state keys
    return (type(x).__name__, repr(x)) if not isinstance(x, int) else ("", x)


def _state_name(label) -> str:
    if isinstance(label, tuple):
        return "<" + ",".join(str(s) for s in label) + ">"
    return str(label)


def _rebuild(a: LayeredAutomaton, edges, finals, labels=None) -> LayeredAutomaton:
    return build_layered(a.n, a.alphabet, a.initial, finals, edges, labels=labels)


# ---------------------------------------------------------------- operators

def simplify(a: LayeredAutomaton, d) -> LayeredAutomaton:
    """Delete transitions outside the domains and whatever that strands."""
    if len(d) != a.n:
        raise ValueError(f"{len(d)} domains for an automaton of length {a.n}")
    if a.empty:
        return a
    layer = a.layer_of
    edges = [(s, x, t) for s, x, t in a.transitions if x in d[layer[s]]]
    return _rebuild(a, edges, a.finals)


def subset_construction(a: LayeredAutomaton, max_states: int = DEFAULT_BUDGET) -> LayeredAutomaton:
    """Determinize; subsets never mix layers, so the result stays layered."""
    if a.empty:
        return a
    out = a.out_edges()
    start = frozenset([a.initial])
    seen = {start}
    edges = []
    todo = deque([start])
    while todo:
        subset = todo.popleft()
        by_sym = defaultdict(set)
        for s in subset:
            for x, t in out[s]:
                by_sym[x].add(t)
        for x, targets in by_sym.items():
            nxt = frozenset(targets)
            edges.append((subset, x, nxt))
            if nxt not in seen:
                if len(seen) >= max_states:
                    raise BudgetExceeded(f"subset construction exceeds {max_states} states",
                                         len(seen) + 1)
                seen.add(nxt)
                todo.append(nxt)
    finals = [q for q in seen if q & a.finals]
    return build_layered(a.n, a.alphabet, start, finals, edges)


def _merge_by_signature(a: LayeredAutomaton, reverse: bool) -> tuple:
    """One sweep of signature merging.

    Forward (``reverse=False``): layer n down to 0, states with the same
    acceptance bit and the same set of (symbol, successor class) merge.
    Reverse: layer 0 up to n with predecessor classes instead.
    Returns (class of each state, number of classes).
    """
    cls = [None] * a.num_states
    if reverse:
        nbrs = [[] for _ in range(a.num_states)]
        for s, x, t in a.transitions:
            nbrs[t].append((x, s))
        layers = range(a.n + 1)
        flag = lambda s: s == a.initial
    else:
        nbrs = a.out_edges()
        layers = range(a.n, -1, -1)
        flag = lambda s: s in a.finals
    count = 0
    for k in layers:
        table = {}
        for s in a.layer(k):
            sig = (flag(s), frozenset((x, cls[t]) for x, t in nbrs[s]))
            if sig not in table:
                table[sig] = count
                count += 1
            cls[s] = table[sig]
    return cls, count


def _quotient(a: LayeredAutomaton, cls) -> LayeredAutomaton:
    edges = {(cls[s], x, cls[t]) for s, x, t in a.transitions}
    return build_layered(a.n, a.alphabet, cls[a.initial], {cls[f] for f in a.finals}, edges)


def minimize_layered(a: LayeredAutomaton) -> LayeredAutomaton:
    """Minimal layered DFA by backward signature merging."""
    if not a.deterministic:
        raise ValueError("minimize_layered needs a deterministic automaton")
    if a.empty:
        return a
    cls, _ = _merge_by_signature(a, reverse=False)
    return _quotient(a, cls)


def heuristic_minimize_nfa(a: LayeredAutomaton) -> LayeredAutomaton:
    """Merge states with equal outgoing sets, then equal incoming sets, until stable."""
    if a.empty:
        return a
    while True:
        before = a.num_states
        cls, count = _merge_by_signature(a, reverse=False)
        if count < a.num_states:
            a = _quotient(a, cls)
        cls, count = _merge_by_signature(a, reverse=True)
        if count < a.num_states:
            a = _quotient(a, cls)
        if a.num_states == before:
            return a


# ---------------------------------------------------------------- cyclic DFAs

@dataclass(frozen=True)
class Dfa:
    alphabet: tuple
    num_states: int
    initial: int
    finals: frozenset
    delta: dict          # (state, symbol) -> state

    def accepts(self, word: Sequence[str]) -> bool:
        q = self.initial
        for a in word:
            q = self.delta.get((q, a))
            if q is None:
                return False
        return q in self.finals

    @property
    def num_transitions(self) -> int:
        return len(self.delta)


def make_dfa(alphabet: Iterable[str], initial, finals: Iterable, delta: dict) -> Dfa:
    """Dfa over arbitrary state keys, restricted to reachable states and renumbered by BFS."""
    alphabet = tuple(alphabet)
    finals = set(finals)
    number = {initial: 0}
    order = [initial]
    head = 0
    while head < len(order):
        q = order[head]
        head += 1
        for a in alphabet:
            t = delta.get((q, a))
            if t is not None and t not in number:
                number[t] = len(order)
                order.append(t)
    new_delta = {(number[q], a): number[delta[(q, a)]]
                 for q in order for a in alphabet if (q, a) in delta}
    return Dfa(alphabet, len(order), 0, frozenset(number[q] for q in order if q in finals), new_delta)


def unfold(a: Dfa, n: int) -> LayeredAutomaton:
    """The n-layer automaton for L(a) restricted to words of length n."""
    if n < 1:
        raise ValueError("unfolding length must be at least 1")
    edges = []
    frontier = {a.initial}
    for k in range(n):
        nxt = set()
        for q in frontier:
            for x in a.alphabet:
                t = a.delta.get((q, x))
                if t is not None:
                    edges.append(((q, k), x, (t, k + 1)))
                    nxt.add(t)
        frontier = nxt
    finals = [(q, n) for q in frontier if q in a.finals]
    return build_layered(n, a.alphabet, (a.initial, 0), finals, edges)


def minimize_dfa(a: Dfa) -> Dfa:
    """Hopcroft partition refinement; the dead class, if any, is dropped."""
    sink = a.num_states
    size = sink + 1
    alphabet = a.alphabet
    delta = [[sink] * len(alphabet) for _ in range(size)]
    for (q, x), t in a.delta.items():
        delta[q][alphabet.index(x)] = t
    inverse = [[[] for _ in alphabet] for _ in range(size)]
    for q in range(size):
        for k in range(len(alphabet)):
            inverse[delta[q][k]][k].append(q)

    finals = set(a.finals)
    blocks = [b for b in (finals, set(range(size)) - finals) if b]
    block_of = [0] * size
    for i, b in enumerate(blocks):
        for q in b:
            block_of[q] = i
    work = {(min(range(len(blocks)), key=lambda i: len(blocks[i])), k) for k in range(len(alphabet))}
    while work:
        bi, k = work.pop()
        splitter = {p for q in blocks[bi] for p in inverse[q][k]}
        touched = defaultdict(set)
        for p in splitter:
            touched[block_of[p]].add(p)
        for bj, inside in touched.items():
            if len(inside) == len(blocks[bj]):
                continue
            outside = blocks[bj] - inside
            small, large = (inside, outside) if len(inside) <= len(outside) else (outside, inside)
            blocks[bj] = large
            new = len(blocks)
            blocks.append(small)
            for q in small:
                block_of[q] = new
            # the smaller half suffices; if bj was pending it still is
            for kk in range(len(alphabet)):
                work.add((new, kk))
    # drop the class that cannot reach acceptance
    live = {block_of[q] for q in finals}
    changed = True
    while changed:
        changed = False
        for q in range(size):
            b = block_of[q]
            if b not in live and any(block_of[t] in live for t in delta[q]):
                live.add(b)
                changed = True
    new_delta = {}
    for q in range(size):
        if block_of[q] not in live:
            continue
        for k, x in enumerate(alphabet):
            t = delta[q][k]
            if block_of[t] in live:
                new_delta[(block_of[q], x)] = block_of[t]
    init = block_of[a.initial]
    if init not in live:
        return Dfa(alphabet, 1, 0, frozenset(), {})
    return make_dfa(alphabet, init, {block_of[q] for q in finals}, new_delta)


# ---------------------------------------------------------------- file formats

def serialize_fla(a: LayeredAutomaton) -> str:
    lines = [f"fla {a.n} {a.num_states} {a.num_transitions}",
             "alphabet " + " ".join(a.alphabet),
             "layers " + " ".join(str(c) for c in a.layer_sizes)]
    layer = a.layer_of
    for s, x, t in a.transitions:
        lines.append(f"{layer[s]} {s} {x} {t}")
    lines.append("initial" + ("" if a.initial is None else f" {a.initial}"))
    lines.append(" ".join(["final"] + [str(f) for f in sorted(a.finals)]))
    return "\n".join(lines) + "\n"


def parse_fla(text: str) -> LayeredAutomaton:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty fla file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "fla":
        raise ValueError("first line must be 'fla <n> <states> <transitions>'")
    n, num_states, num_trans = (int(x) for x in head[1:])
    alphabet, sizes, trans = None, None, []
    initial, finals = None, frozenset()
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "alphabet":
            alphabet = tuple(parts[1:])
        elif parts[0] == "layers":
            sizes = tuple(int(x) for x in parts[1:])
        elif parts[0] == "initial":
            initial = int(parts[1]) if len(parts) > 1 else None
        elif parts[0] == "final":
            finals = frozenset(int(x) for x in parts[1:])
        elif len(parts) == 4:
            k, s, x, t = parts
            trans.append((int(s), x, int(t), int(k)))
        else:
            raise ValueError(f"cannot parse fla line {ln!r}")
    if alphabet is None:
        alphabet = tuple(dict.fromkeys(x for _, x, _, _ in trans))
    if sizes is None:
        raise ValueError("fla file lacks a 'layers' line")
    a = LayeredAutomaton(n, alphabet, sizes, tuple((s, x, t) for s, x, t, _ in trans), initial, finals)
    layer = a.layer_of
    for s, x, t, k in trans:
        if layer[s] != k:
            raise ValueError(f"transition {s} {x} {t} is listed at layer {k}, state is in {layer[s]}")
    if a.num_states != num_states or a.num_transitions != num_trans:
        raise ValueError("fla header counts do not match the body")
    return a


def serialize_dfa(a: Dfa) -> str:
    lines = [f"dfa {a.num_states}", "alphabet " + " ".join(a.alphabet),
             f"initial {a.initial}", " ".join(["final"] + [str(f) for f in sorted(a.finals)])]
    rank = {x: k for k, x in enumerate(a.alphabet)}
    for (q, x), t in sorted(a.delta.items(), key=lambda e: (e[0][0], rank[e[0][1]])):
        lines.append(f"{q} {x} {t}")
    return "\n".join(lines) + "\n"


def parse_dfa(text: str) -> Dfa:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    head = lines[0].split()
    if len(head) != 2 or head[0] != "dfa":
        raise ValueError("first line must be 'dfa <states>'")
    size = int(head[1])
    alphabet, initial, finals, delta = (), 0, frozenset(), {}
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "alphabet":
            alphabet = tuple(parts[1:])
        elif parts[0] == "initial":
            initial = int(parts[1])
        elif parts[0] == "final":
            finals = frozenset(int(x) for x in parts[1:])
        elif len(parts) == 3:
            q, x, t = parts
            if (int(q), x) in delta:
                raise ValueError(f"two transitions from state {q} on {x}")
            delta[(int(q), x)] = int(t)
        else:
            raise ValueError(f"cannot parse dfa line {ln!r}")
    for (q, x), t in delta.items():
        if x not in alphabet or not (0 <= q < size and 0 <= t < size):
            raise ValueError(f"bad transition {q} {x} {t}")
    return Dfa(alphabet, size, initial, finals, delta)
