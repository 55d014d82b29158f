import random

import pytest
from hypothesis import given, strategies as st
from oracles import projection, solutions

from g2r.bench import palindrome_grammar, random_cnf_grammar, random_domains, running_example
from g2r.cyk import (BudgetExceeded, Node, cyk_build, enumerate_solutions, propagate_grammar,
                     recognize)
from g2r.grammar import full_domains, parse_grammar, to_cnf


def test_running_example_surviving_nodes():
    g, d = running_example()
    table, graph = cyk_build(g, d)
    labels = {str(v) for v in graph.or_nodes}
    assert labels == {"S_{1,3}", "A_{1,2}", "B_{2,2}", "A_{1,1}", "A_{2,1}", "B_{2,1}", "B_{3,1}",
                      "a_1", "a_2", "b_2", "b_3"}
    assert graph.root == 0 and graph.or_nodes[0] == Node("S", 1, 3)
    assert table[(1, 3)] == ("S",)
    assert table[(1, 1)] == ("A",)     # B_{1,1} is not in the domain
    assert table[(2, 1)] == ("A", "B")


def test_and_nodes_shape():
    g, d = running_example()
    _, graph = cyk_build(g, d)
    for node in graph.and_nodes:
        parent = graph.or_nodes[node.parent]
        if parent.length == 1:
            assert len(node.children) == 1 and graph.is_terminal(node.children[0])
        else:
            assert len(node.children) == 2
            left, right = (graph.or_nodes[c] for c in node.children)
            assert left.start == parent.start and right.end == parent.end
            assert left.length == node.split
    # topological ids: parents precede children
    for node in graph.and_nodes:
        assert all(c > node.parent for c in node.children)


def test_every_node_on_root_path():
    g = palindrome_grammar()
    _, graph = cyk_build(g, full_domains(g.terminals, 6))
    reach = {graph.root}
    for v in range(len(graph.or_nodes)):
        if v in reach:
            for a in graph.or_children[v]:
                reach.update(graph.and_nodes[a].children)
    assert reach == set(range(len(graph.or_nodes)))
    for v in range(1, len(graph.or_nodes)):
        assert graph.or_parents[v]


def test_empty_domain_gives_empty_table():
    g, _ = running_example()
    table, graph = cyk_build(g, (frozenset(), frozenset("ab"), frozenset("b")))
    assert table.empty and graph.empty and graph.root is None


def test_palindromes_n6():
    g = palindrome_grammar()
    d = full_domains(g.terminals, 6)
    table, graph = cyk_build(g, d)
    assert not table.empty
    expect = {w + w[::-1] for w in __import__("itertools").product("01", repeat=3)}
    assert set(enumerate_solutions(g, d)) == expect


def test_propagate_running_example():
    g, d = running_example()
    assert propagate_grammar(g, d) == d
    assert set(enumerate_solutions(g, d)) == {tuple("aab"), tuple("abb")}


def test_propagate_wipes_out():
    g, _ = running_example()
    d = (frozenset("b"), frozenset("ab"), frozenset("b"))
    assert propagate_grammar(g, d) == (frozenset(),) * 3


def test_propagate_single_production():
    g = parse_grammar("S -> 'a'")
    assert propagate_grammar(g, (frozenset("ab"),)) == (frozenset("a"),)


def test_enumerate_examples():
    g = palindrome_grammar()
    got = enumerate_solutions(g, full_domains(g.terminals, 4))
    assert [''.join(w) for w in got] == ["0000", "0110", "1001", "1111"]
    assert enumerate_solutions(g, (frozenset(),) * 4) == []


def test_enumerate_budget():
    g = palindrome_grammar()
    with pytest.raises(BudgetExceeded):
        enumerate_solutions(g, full_domains(g.terminals, 12), limit=1000)


def test_recognize_with_predicates():
    g = to_cnf(parse_grammar("S -> A A\nA -> 'a' A | 'a'\n@restrict A start open"))
    assert recognize(g, "aaa", lambda i: True)
    # every A-run starts at an open slot, and a run of length 2 has an inner one
    assert not recognize(g, "aaa", lambda i: i != 2)
    assert not recognize(g, "aaa", lambda i: i in (1, 3))
    assert recognize(g, "aa", lambda i: i in (1, 2))


def test_open_hours_at_terminal_level():
    g = to_cnf(parse_grammar("S -> 'a' S | 'b' S | 'a' | 'b'\n@restrict S start open"))
    hours = lambda i: i != 2
    assert not enumerate_solutions(g, full_domains(g.terminals, 3), hours)


def test_to_dot_lists_every_node():
    g, d = running_example()
    _, graph = cyk_build(g, d)
    dot = graph.to_dot()
    assert dot.count("shape=box") == 4 and dot.count("shape=point") == len(graph.and_nodes)


def corpus(seed):
    rng = random.Random(seed)
    g = random_cnf_grammar(rng)
    n = rng.randint(1, 6)
    return g, random_domains(rng, g.terminals, n)


@given(st.integers(0, 10 ** 6))
def test_domain_consistency(seed):
    g, d = corpus(seed)
    sols = solutions(g, d)
    assert set(enumerate_solutions(g, d)) == sols
    assert propagate_grammar(g, d) == projection(sols, len(d))


@given(st.integers(0, 10 ** 6))
def test_idempotent(seed):
    g, d = corpus(seed)
    once = propagate_grammar(g, d)
    assert propagate_grammar(g, once) == once


@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6))
def test_monotone(seed, sub):
    g, d2 = corpus(seed)
    rng = random.Random(sub)
    d1 = tuple(frozenset(x for x in s if rng.random() < 0.7) for s in d2)
    p1, p2 = propagate_grammar(g, d1), propagate_grammar(g, d2)
    assert all(a <= b for a, b in zip(p1, p2))
