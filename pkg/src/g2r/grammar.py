"""Context-free grammars with position-restricted productions.

A grammar is the tuple (terminals, nonterminals, productions, start).  Every
production may carry a :class:`PositionPredicate` that restricts the start
slot and length of the substring its left-hand side matches.  Grammars are
immutable; :func:`to_cnf` returns a new one.

Text format (one directive or production group per line)::

    # comment
    @start S
    @terminals 'a' 'b'
    S -> A B | A B B {len in [2,5]}
    A -> A A | 'a'
    @restrict A len in [1,4]
    @restrict B start open
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product as _cartesian
from typing import Callable, Iterable, Optional, Sequence

OpenHours = Optional[Callable[[int], bool]]
Domains = tuple  # tuple[frozenset[str], ...], one set per position


class GrammarError(ValueError):
    """Raised for malformed grammar text or structurally invalid grammars."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class PositionPredicate:
    """Restriction f(i, j) on the start slot i and length j of a match.

    Closed under conjunction: intervals intersect and the open flag ORs.
    ``open_start`` asks the open-hours function supplied at parse time
    whether slot i is open.
    """

    len_lo: int = 1
    len_hi: Optional[int] = None
    start_lo: int = 1
    start_hi: Optional[int] = None
    open_start: bool = False

    def __call__(self, i: int, j: int, open_hours: OpenHours = None) -> bool:
        if j < self.len_lo or (self.len_hi is not None and j > self.len_hi):
            return False
        if i < self.start_lo or (self.start_hi is not None and i > self.start_hi):
            return False
        if self.open_start and open_hours is not None and not open_hours(i):
            return False
        return True

    def conjoin(self, other: Optional["PositionPredicate"]) -> "PositionPredicate":
        if other is None:
            return self
        return PositionPredicate(
            len_lo=max(self.len_lo, other.len_lo),
            len_hi=_min_opt(self.len_hi, other.len_hi),
            start_lo=max(self.start_lo, other.start_lo),
            start_hi=_min_opt(self.start_hi, other.start_hi),
            open_start=self.open_start or other.open_start,
        )

    @property
    def trivial(self) -> bool:
        return self == TRUE

    @property
    def satisfiable(self) -> bool:
        if self.len_hi is not None and self.len_hi < self.len_lo:
            return False
        return self.start_hi is None or self.start_hi >= self.start_lo

    def clauses(self) -> list[str]:
        out = []
        if self.len_lo != 1 or self.len_hi is not None:
            out.append(f"len in [{self.len_lo},{_bound(self.len_hi)}]")
        if self.start_lo != 1 or self.start_hi is not None:
            out.append(f"start in [{self.start_lo},{_bound(self.start_hi)}]")
        if self.open_start:
            out.append("start open")
        return out

    def __str__(self):
        return "; ".join(self.clauses()) or "true"


TRUE = PositionPredicate()


def _min_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _bound(v):
    return "*" if v is None else str(v)


def conjoin(f: Optional[PositionPredicate], g: Optional[PositionPredicate]):
    if f is None:
        return g
    return f.conjoin(g)


@dataclass(frozen=True)
class Production:
    lhs: str
    rhs: tuple
    predicate: Optional[PositionPredicate] = None

    def holds(self, i: int, j: int, open_hours: OpenHours = None) -> bool:
        return self.predicate is None or self.predicate(i, j, open_hours)

    def __str__(self):
        return f"{self.lhs} -> {' '.join(self.rhs)}"


@dataclass(frozen=True)
class Grammar:
    terminals: tuple
    nonterminals: tuple
    productions: tuple
    start: str

    @classmethod
    def build(cls, productions: Iterable[Production], start: str | None = None,
              terminals: Sequence[str] | None = None) -> "Grammar":
        """Validate and assemble a grammar.

        Nonterminals are the left-hand sides in order of first appearance.
        Any rhs symbol that is not a nonterminal must be a terminal; when
        ``terminals`` is given the undeclared ones are rejected.
        """
        productions = tuple(
            p if p.predicate is None or not p.predicate.trivial else Production(p.lhs, p.rhs)
            for p in productions
        )
        nonterminals = tuple(dict.fromkeys(p.lhs for p in productions))
        nts = set(nonterminals)
        if start is None:
            if not productions:
                raise GrammarError("missing start symbol: grammar has no productions")
            start = productions[0].lhs
        if start not in nts:
            raise GrammarError(f"missing start symbol: {start!r} has no productions")
        seen_terms = list(terminals or ())
        declared = set(seen_terms)
        for p in productions:
            for s in p.rhs:
                if s in nts:
                    continue
                if terminals is not None and s not in declared:
                    raise GrammarError(f"undeclared symbol {s!r} in {p}")
                if s not in declared:
                    declared.add(s)
                    seen_terms.append(s)
        clash = nts & declared
        if clash:
            raise GrammarError(f"symbols used as both terminal and nonterminal: {sorted(clash)}")
        return cls(tuple(seen_terms), nonterminals, productions, start)

    @cached_property
    def terminal_set(self) -> frozenset:
        return frozenset(self.terminals)

    @cached_property
    def cnf(self) -> bool:
        nts = set(self.nonterminals)
        for p in self.productions:
            if len(p.rhs) == 1 and p.rhs[0] in self.terminal_set:
                continue
            if len(p.rhs) == 2 and p.rhs[0] in nts and p.rhs[1] in nts:
                continue
            return False
        return True

    def by_lhs(self, nt: str) -> list[Production]:
        return [p for p in self.productions if p.lhs == nt]

    def is_terminal(self, s: str) -> bool:
        return s in self.terminal_set

    def generates(self, word: Sequence[str], open_hours: OpenHours = None) -> bool:
        """Membership test for arbitrary (non-CNF, ε-free) grammars.

        Chart parser over spans; unit productions are closed by fixpoint
        iteration inside each span so unit chains need no special form.
        """
        n = len(word)
        if n == 0:
            return False
        chart: dict[tuple[int, int], set] = {}

        def splits(rhs, pos, i, end):
            # can rhs[pos:] cover word slots i..end (1-based, inclusive)?
            k = len(rhs) - pos
            if k == 1:
                return _derives(rhs[pos], i, end - i + 1)
            for j in range(1, end - i + 2 - (k - 1)):
                if _derives(rhs[pos], i, j) and splits(rhs, pos + 1, i + j, end):
                    return True
            return False

        def _derives(sym, i, j):
            if sym in self.terminal_set:
                return j == 1 and word[i - 1] == sym
            return sym in chart.get((i, j), ())

        for j in range(1, n + 1):
            for i in range(1, n - j + 2):
                cell = chart.setdefault((i, j), set())
                changed = True
                while changed:
                    changed = False
                    for p in self.productions:
                        if p.lhs in cell or not p.rhs or not p.holds(i, j, open_hours):
                            continue
                        if len(p.rhs) > j:
                            continue
                        if splits(p.rhs, 0, i, i + j - 1):
                            cell.add(p.lhs)
                            changed = True
        return self.start in chart[(1, n)]

    def language(self, n: int, open_hours: OpenHours = None) -> set:
        """All words of length n, by brute force over terminals^n."""
        return {w for w in _cartesian(self.terminals, repeat=n) if self.generates(w, open_hours)}


# ---------------------------------------------------------------------------
# text format

_NT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_T_RE = re.compile(r"'([^\s',]+)'$")
_INTERVAL_RE = re.compile(r"(len|start)\s+in\s+\[\s*(\d+)\s*,\s*(\d+|\*)\s*\]$")


def _parse_clause(text: str, line: int) -> PositionPredicate:
    text = text.strip()
    if text == "start open":
        return PositionPredicate(open_start=True)
    m = _INTERVAL_RE.match(text)
    if not m:
        raise GrammarError(f"bad predicate clause {text!r}", line)
    lo = int(m.group(2))
    hi = None if m.group(3) == "*" else int(m.group(3))
    if m.group(1) == "len":
        return PositionPredicate(len_lo=lo, len_hi=hi)
    return PositionPredicate(start_lo=lo, start_hi=hi)


def _parse_predicate(text: str, line: int) -> PositionPredicate:
    pred = TRUE
    for part in text.split(";"):
        if part.strip():
            pred = pred.conjoin(_parse_clause(part, line))
    return pred


def parse_grammar(text: str) -> Grammar:
    productions: list[tuple[Production, int]] = []
    restrictions: list[tuple[str, PositionPredicate, int]] = []
    start = None
    terminals = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("@"):
            head, _, rest = line.partition(" ")
            rest = rest.strip()
            if head == "@start":
                if not _NT_RE.match(rest):
                    raise GrammarError(f"bad start symbol {rest!r}", lineno)
                start = rest
            elif head == "@terminals":
                terminals = []
                for tok in rest.split():
                    m = _T_RE.match(tok)
                    if not m:
                        raise GrammarError(f"bad terminal {tok!r}", lineno)
                    terminals.append(m.group(1))
            elif head == "@restrict":
                nt, _, clause = rest.partition(" ")
                if not _NT_RE.match(nt):
                    raise GrammarError(f"bad nonterminal {nt!r}", lineno)
                restrictions.append((nt, _parse_predicate(clause, lineno), lineno))
            else:
                raise GrammarError(f"unknown directive {head}", lineno)
            continue
        if "->" not in line:
            raise GrammarError("expected 'NT -> rhs'", lineno)
        lhs, _, body = line.partition("->")
        lhs = lhs.strip()
        if not _NT_RE.match(lhs):
            raise GrammarError(f"bad nonterminal {lhs!r}", lineno)
        for alt in body.split("|"):
            alt = alt.strip()
            pred = None
            if alt.endswith("}"):
                brace = alt.rfind("{")
                if brace < 0:
                    raise GrammarError("unbalanced '}'", lineno)
                pred = _parse_predicate(alt[brace + 1:-1], lineno)
                alt = alt[:brace].strip()
            if not alt:
                raise GrammarError("empty alternative (ε-productions are not supported)", lineno)
            rhs = []
            for tok in alt.split():
                m = _T_RE.match(tok)
                if m:
                    rhs.append(("t", m.group(1)))
                elif _NT_RE.match(tok):
                    rhs.append(("n", tok))
                else:
                    raise GrammarError(f"bad symbol {tok!r}", lineno)
            productions.append((Production(lhs, tuple(rhs), pred), lineno))

    if not productions:
        raise GrammarError("missing start symbol: grammar has no productions")
    lhs_set = {p.lhs for p, _ in productions}
    for p, lineno in productions:
        for kind, name in p.rhs:
            if kind == "n" and name not in lhs_set:
                raise GrammarError(f"undeclared symbol {name!r}", lineno)
            if kind == "t" and terminals is not None and name not in terminals:
                raise GrammarError(f"undeclared terminal {name!r}", lineno)
    for nt, _, lineno in restrictions:
        if nt not in lhs_set:
            raise GrammarError(f"undeclared symbol {nt!r}", lineno)
    if start is not None and start not in lhs_set:
        raise GrammarError(f"missing start symbol: {start!r} has no productions")

    final = []
    for p, _ in productions:
        pred = p.predicate
        for nt, r, _ in restrictions:
            if nt == p.lhs:
                pred = conjoin(pred, r)
        final.append(Production(p.lhs, tuple(name for _, name in p.rhs), pred))
    return Grammar.build(final, start=start, terminals=terminals)


def serialize_grammar(g: Grammar) -> str:
    lines = [f"@start {g.start}", "@terminals " + " ".join(f"'{t}'" for t in g.terminals)]
    for p in g.productions:
        rhs = " ".join(f"'{s}'" if g.is_terminal(s) else s for s in p.rhs)
        line = f"{p.lhs} -> {rhs}"
        if p.predicate is not None and not p.predicate.trivial:
            line += " {" + str(p.predicate) + "}"
        lines.append(line)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# domains

def parse_domains(text: str, alphabet: Sequence[str]) -> Domains:
    """One line per position: comma-separated terminals, or ``*``."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "*":
            out.append(frozenset(alphabet))
            continue
        values = frozenset(v.strip() for v in line.split(",") if v.strip())
        unknown = values - set(alphabet)
        if unknown:
            raise GrammarError(f"unknown terminals {sorted(unknown)}", lineno)
        out.append(values)
    return tuple(out)


def serialize_domains(d: Domains, alphabet: Sequence[str]) -> str:
    lines = []
    for values in d:
        if set(values) == set(alphabet):
            lines.append("*")
        else:
            lines.append(",".join(s for s in alphabet if s in values))
    return "\n".join(lines) + "\n"


def full_domains(alphabet: Iterable[str], n: int) -> Domains:
    values = frozenset(alphabet)
    return tuple(values for _ in range(n))


def as_domains(d: Iterable[Iterable[str]]) -> Domains:
    return tuple(frozenset(x) for x in d)


# ---------------------------------------------------------------------------
# Chomsky normal form

def _fresh(base: str, taken: set) -> str:
    k = 1
    while f"{base}_{k}" in taken:
        k += 1
    name = f"{base}_{k}"
    taken.add(name)
    return name


def to_cnf(g: Grammar) -> Grammar:
    """Convert to Chomsky normal form.

    Predicates stay on the production whose left-hand side they restrict:
    binarization keeps the predicate on the topmost production and the
    introduced helpers are unrestricted; unit elimination conjoins.
    """
    reachable = _reachable(g)
    prods = []
    for p in g.productions:
        if not p.rhs:
            if p.lhs in reachable:
                raise GrammarError(f"ε-production reachable from start: {p.lhs} -> ε")
            continue
        prods.append(p)
    if len(prods) == len(g.productions) and g.cnf:
        return g

    taken = set(g.nonterminals) | set(g.terminals)
    nts = set(g.nonterminals)

    # terminals inside long right-hand sides
    helpers: dict[str, str] = {}
    helper_prods = []
    lifted = []
    for p in prods:
        if len(p.rhs) >= 2 and any(s not in nts for s in p.rhs):
            rhs = []
            for s in p.rhs:
                if s in nts:
                    rhs.append(s)
                    continue
                if s not in helpers:
                    helpers[s] = _fresh(f"T_{s}", taken)
                    helper_prods.append(Production(helpers[s], (s,)))
                rhs.append(helpers[s])
            p = Production(p.lhs, tuple(rhs), p.predicate)
        lifted.append(p)
    lifted.extend(helper_prods)
    nts |= set(helpers.values())

    # binarize
    binary = []
    for p in lifted:
        if len(p.rhs) <= 2:
            binary.append(p)
            continue
        lhs, pred = p.lhs, p.predicate
        rest = list(p.rhs)
        while len(rest) > 2:
            h = _fresh(p.lhs, taken)
            nts.add(h)
            binary.append(Production(lhs, (rest[0], h), pred))
            lhs, pred = h, None
            rest = rest[1:]
        binary.append(Production(lhs, tuple(rest), pred))

    # unit elimination
    by_lhs: dict[str, list[Production]] = {}
    for p in binary:
        by_lhs.setdefault(p.lhs, []).append(p)
    expanded: dict[str, list[Production]] = {}

    def expand(nt, stack):
        if nt in expanded:
            return expanded[nt]
        if nt in stack:
            raise GrammarError(f"unit cycle among nonterminals: {' -> '.join(stack + [nt])}")
        out = []
        for p in by_lhs.get(nt, []):
            if len(p.rhs) == 1 and p.rhs[0] in nts:
                for q in expand(p.rhs[0], stack + [nt]):
                    out.append(Production(nt, q.rhs, conjoin(p.predicate, q.predicate)))
            else:
                out.append(p)
        expanded[nt] = out
        return out

    result = []
    for nt in dict.fromkeys(p.lhs for p in binary):
        for p in expand(nt, []):
            if p.predicate is not None:
                if not p.predicate.satisfiable:
                    continue
                if len(p.rhs) == 1 and p.predicate.len_lo > 1:
                    continue
            if p not in result:
                result.append(p)

    # drop productions that mention nonterminals left without productions
    while True:
        live = {p.lhs for p in result}
        kept = [p for p in result if all(s in live or s not in nts for s in p.rhs)]
        if len(kept) == len(result):
            break
        result = kept
    out = Grammar.build(result, start=g.start, terminals=g.terminals)
    assert out.cnf
    return out


def _reachable(g: Grammar) -> set:
    seen = {g.start}
    todo = [g.start]
    nts = set(g.nonterminals)
    while todo:
        a = todo.pop()
        for p in g.by_lhs(a):
            for s in p.rhs:
                if s in nts and s not in seen:
                    seen.add(s)
                    todo.append(s)
    return seen


# ---------------------------------------------------------------------------
# shift scheduling

@dataclass(frozen=True)
class ShiftRules:
    """Length bounds of the shift-scheduling grammar, in slots.

    Defaults are the 96-slot day; scaled-down rules keep the same shape
    for small test instances.
    """

    part_time: tuple = (13, 24)
    full_time: tuple = (30, 38)
    lunch: int = 4
    min_work: int = 4


def shift_scheduling_grammar(activities: int, rules: ShiftRules = ShiftRules()) -> Grammar:
    """Shift-scheduling grammar over {a1..a<activities>, b, l, r}, not in CNF.

    Lunch is written ``L -> 'l' Lrun | 'l'`` with an unrestricted ``Lrun``
    so the exact-length restriction applies to the whole lunch block and
    not to each recursive suffix.
    """
    if activities < 1:
        raise GrammarError("need at least one activity")
    pl, ph = rules.part_time
    fl, fh = rules.full_time
    P = Production
    prods = [
        P("S", ("R", "P", "R")),
        P("S", ("R", "F", "R")),
        P("P", ("W", "b", "W"), PositionPredicate(len_lo=pl, len_hi=ph)),
        P("F", ("P", "L", "P"), PositionPredicate(len_lo=fl, len_hi=fh)),
        P("L", ("l", "Lrun"), PositionPredicate(len_lo=rules.lunch, len_hi=rules.lunch)),
        P("L", ("l",), PositionPredicate(len_lo=rules.lunch, len_hi=rules.lunch)),
        P("Lrun", ("l", "Lrun")),
        P("Lrun", ("l",)),
        P("R", ("r", "R")),
        P("R", ("r",)),
    ]
    open_pred = PositionPredicate(open_start=True)
    for k in range(1, activities + 1):
        prods.append(P("W", (f"A{k}",), PositionPredicate(len_lo=rules.min_work)))
    for k in range(1, activities + 1):
        prods.append(P(f"A{k}", (f"a{k}", f"A{k}"), open_pred))
        prods.append(P(f"A{k}", (f"a{k}",), open_pred))
    terminals = [f"a{k}" for k in range(1, activities + 1)] + ["b", "l", "r"]
    return Grammar.build(prods, start="S", terminals=terminals)


def activity_symbols(g: Grammar) -> tuple:
    return tuple(t for t in g.terminals if re.fullmatch(r"a\d+", t))
