"""Fixture grammars, random instance generators and the separation families."""
from __future__ import annotations

import random
from itertools import combinations

from .automata import Dfa, make_dfa
from .grammar import (Domains, Grammar, Production, ShiftRules, full_domains,
                      parse_grammar, shift_scheduling_grammar, to_cnf)

RUNNING_EXAMPLE = """\
S -> A B
A -> A A | 'a'
B -> B B | 'b'
"""

PALINDROMES = """\
# even-length palindromes over {0,1}
S -> Z X | O Y | Z Z | O O
X -> S Z
Y -> S O
Z -> '0'
O -> '1'
"""

SHARED_STACKS = """\
S -> A A
A -> 'a' | A A | B C
B -> 'b' | B B
C -> 'c' | C C
"""

# two root paths reach V_{1,1}, and the stack graph glues them wrongly
OVERCOUNT = """\
S -> A B | A2 D
A -> X Y
A2 -> Z Y
X -> V U
Z -> V U2
V -> 'v'
U -> 'u'
U2 -> 'u'
Y -> 'y'
B -> 'b'
D -> 'b'
"""


def running_example() -> tuple:
    g = parse_grammar(RUNNING_EXAMPLE)
    d = (frozenset("a"), frozenset("ab"), frozenset("b"))
    return g, d


def palindrome_grammar() -> Grammar:
    return parse_grammar(PALINDROMES)


def shared_stack_grammar() -> Grammar:
    return parse_grammar(SHARED_STACKS)


def overcount_grammar() -> Grammar:
    return parse_grammar(OVERCOUNT)


# ---------------------------------------------------------------- random

def random_cnf_grammar(rng: random.Random, max_nonterminals: int = 6,
                       max_terminals: int = 3) -> Grammar:
    """Random CNF grammar; every nonterminal gets at least one production."""
    k = rng.randint(1, max_nonterminals)
    t = rng.randint(1, max_terminals)
    nts = ["S"] + [f"N{i}" for i in range(1, k)]
    terms = "abc"[:t]
    prods = []
    for a in nts:
        for _ in range(rng.randint(1, 3)):
            if rng.random() < 0.35:
                prods.append(Production(a, (rng.choice(terms),)))
            else:
                prods.append(Production(a, (rng.choice(nts), rng.choice(nts))))
    if not any(len(p.rhs) == 1 for p in prods):
        prods.append(Production(rng.choice(nts), (rng.choice(terms),)))
    prods = list(dict.fromkeys(prods))
    return Grammar.build(prods, start="S", terminals=list(terms))


def random_domains(rng: random.Random, alphabet, n: int, keep: float = 0.75) -> Domains:
    """Random sub-domains; each value survives with probability ``keep``."""
    alphabet = list(alphabet)
    return tuple(frozenset(s for s in alphabet if rng.random() < keep) for _ in range(n))


def random_dfa(rng: random.Random, max_states: int = 40, max_symbols: int = 4) -> Dfa:
    size = rng.randint(1, max_states)
    alphabet = tuple(str(i) for i in range(rng.randint(1, max_symbols)))
    density = rng.uniform(0.5, 1.0)
    delta = {(q, a): rng.randrange(size) for q in range(size) for a in alphabet
             if rng.random() < density}
    finals = {q for q in range(size) if rng.random() < 0.4}
    return make_dfa(alphabet, 0, finals, delta)


# ---------------------------------------------------------------- separation families

def separation1_dfa(m: int) -> Dfa:
    """Words over 0..m-1 that contain the symbol (length mod m).

    States are (length mod m, set of symbols seen).  For a fixed length n
    that is a multiple of m the condition is just "contains 0", which a
    layered automaton tracks with two states per layer.
    """
    if m < 1:
        raise ValueError("m must be positive")
    alphabet = tuple(str(i) for i in range(m))
    delta = {}
    states = [(k, frozenset(s)) for k in range(m)
              for r in range(m + 1) for s in combinations(range(m), r)]
    for k, seen in states:
        for a in range(m):
            delta[((k, seen), str(a))] = ((k + 1) % m, seen | {a})
    finals = [(k, seen) for k, seen in states if k in seen]
    return make_dfa(alphabet, (0, frozenset()), finals, delta)


def separation2_dfa(n: int) -> Dfa:
    """Words over 1..n with some repeated value whose last two values differ."""
    if n < 2:
        raise ValueError("n must be at least 2")
    alphabet = tuple(str(i) for i in range(1, n + 1))
    start = ("start",)
    delta = {}
    todo = [start]
    seen_states = {start}
    finals = set()
    while todo:
        q = todo.pop()
        for a in range(1, n + 1):
            if q == start:
                t = (frozenset([a]), False, a, False)
            else:
                seen, rep, last, _ = q
                t = (seen | {a}, rep or a in seen, a, a != last)
            delta[(q, str(a))] = t
            if t[1] and t[3]:
                finals.add(t)
            if t not in seen_states:
                seen_states.add(t)
                todo.append(t)
    return make_dfa(alphabet, start, finals, delta)


def separation2_domains(n: int) -> Domains:
    """All values except n, at every one of the n positions."""
    return tuple(frozenset(str(i) for i in range(1, n)) for _ in range(n))


# ---------------------------------------------------------------- shift instances

#: small-day rules keeping the shape of the 96-slot grammar
TOY_RULES = {
    12: ShiftRules(part_time=(4, 8), full_time=(9, 10), lunch=1, min_work=2),
    24: ShiftRules(part_time=(5, 10), full_time=(11, 16), lunch=2, min_work=2),
}


def shift_rules(n: int) -> ShiftRules:
    return TOY_RULES.get(n, ShiftRules())


def default_open_hours(n: int, first: int = 29, last: int = 68, day: int = 96):
    """Open iff the slot midpoint, rescaled to a ``day``-slot day, falls in [first-1, last]."""
    def is_open(i: int) -> bool:
        mid = (i - 0.5) * day / n
        return first - 1 <= mid <= last
    return is_open


def shift_instance(n: int, activities: int = 1):
    """(CNF grammar, full domains, open-hours predicate) for an n-slot day."""
    g = to_cnf(shift_scheduling_grammar(activities, shift_rules(n)))
    return g, full_domains(g.terminals, n), default_open_hours(n)
