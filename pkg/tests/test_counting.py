import random

from hypothesis import given, strategies as st
from oracles import stacks_by_simulation

from g2r.bench import (overcount_grammar, palindrome_grammar, random_cnf_grammar, random_domains,
                       running_example, shared_stack_grammar)
from g2r.counting import (build_stack_graph, exact_state_count, path_count_upper_bound,
                          path_counts, stack_counts)
from g2r.cyk import Node, cyk_build
from g2r.grammar import full_domains, parse_grammar, to_cnf
from g2r.reformulate import construct_acyclic_grammar, epsilon_closure, grammar_to_pda, pda_to_nfa


def graph_of(g, d):
    return cyk_build(g, d)


def built_sizes(table):
    enfa = pda_to_nfa(grammar_to_pda(construct_acyclic_grammar(table)))
    return enfa.num_states, epsilon_closure(enfa).num_states


def test_path_counts_running_example():
    g, d = running_example()
    _, graph = graph_of(g, d)
    pd = {str(v): c for v, c in zip(graph.or_nodes, path_counts(graph))}
    assert pd == {"S_{1,3}": 1, "A_{1,2}": 1, "B_{2,2}": 1, "B_{3,1}": 2, "A_{1,1}": 2,
                  "A_{2,1}": 1, "B_{2,1}": 1, "a_1": 2, "a_2": 1, "b_2": 1, "b_3": 2}
    assert path_count_upper_bound(graph) == 15


def test_chain_graph_bound():
    g = to_cnf(parse_grammar("S -> A\nA -> 'a'"))
    _, graph = graph_of(g, (frozenset("a"),))
    # S_{1,1} -> a_1 after unit elimination: every PD is 1
    assert path_count_upper_bound(graph) == len(graph.or_nodes) == 2


def test_stack_graph_running_example():
    g, d = running_example()
    _, graph = graph_of(g, d)
    v = graph.node(("A", 1, 1))
    sg = build_stack_graph(graph, v)
    edges = {(str(graph.or_nodes[a]), str(graph.or_nodes[b])) for a, b in sg.edges}
    assert edges == {("A_{1,1}", "B_{2,2}"), ("A_{1,1}", "A_{2,1}"), ("A_{2,1}", "B_{3,1}")}
    assert sg.count_paths() == 2


def test_stack_graph_root():
    g, d = running_example()
    _, graph = graph_of(g, d)
    sg = build_stack_graph(graph, graph.root)
    assert sg.vertices == {graph.root} and not sg.edges and sg.count_paths() == 1


def test_distinct_paths_same_stack():
    g = shared_stack_grammar()
    _, graph = graph_of(g, full_domains(g.terminals, 5))
    c = graph.node(("C", 4, 2))
    # two different root paths put C_{4,2} under something; the stack <C_{4,2}> itself
    # is reached along both and counted once
    stacks = {st for st in stacks_by_simulation(graph) if st and st[0] == c}
    assert stack_counts(graph)[c] == len(stacks)
    assert path_counts(graph)[c] > len(stacks)


def test_stack_graph_overcounts_when_contexts_mix():
    g = overcount_grammar()
    _, graph = graph_of(g, full_domains(g.terminals, 4))
    v = graph.node(("V", 1, 1))
    true_stacks = {st for st in stacks_by_simulation(graph) if st and st[0] == v}
    assert len(true_stacks) == 2
    assert stack_counts(graph)[v] == 2
    assert build_stack_graph(graph, v).count_paths() == 4
    assert path_counts(graph)[v] == 2


def test_report_running_example():
    g, d = running_example()
    table, graph = graph_of(g, d)
    r = exact_state_count(graph)
    assert (r.upper_bound, r.exact_pre_closure, r.exact_post_closure) == (15, 13, 4)
    assert r.post_closure_layers == (1, 2, 1, 1)
    assert built_sizes(table) == (14, 5)
    assert r.exact_post_closure <= r.exact_pre_closure <= r.upper_bound


def test_report_trivial():
    g = parse_grammar("S -> 'a'")
    table, graph = graph_of(g, (frozenset("a"),))
    r = exact_state_count(graph)
    assert (r.exact_pre_closure, r.exact_post_closure) == (2, 1)
    assert built_sizes(table) == (3, 2)


def test_palindrome_growth():
    g = palindrome_grammar()
    counts = []
    for n in (4, 6, 8, 10, 12):
        table, graph = graph_of(g, full_domains(g.terminals, n))
        r = exact_state_count(graph)
        assert built_sizes(table) == (r.exact_pre_closure + 1, r.exact_post_closure + 1)
        assert r.upper_bound >= r.exact_pre_closure
        counts.append(r.exact_pre_closure)
    assert counts == [29, 69, 149, 309, 629]
    assert all(b >= 1.8 * a for a, b in zip(counts, counts[1:]))


def test_big_integers():
    g = palindrome_grammar()
    _, graph = graph_of(g, full_domains(g.terminals, 140))
    r = exact_state_count(graph)
    assert r.exact_pre_closure > 2 ** 64


@given(st.integers(0, 10 ** 6))
def test_counts_match_construction(seed):
    rng = random.Random(seed)
    g = random_cnf_grammar(rng)
    d = random_domains(rng, g.terminals, rng.randint(1, 6))
    table, graph = graph_of(g, d)
    if graph.empty:
        return
    r = exact_state_count(graph)
    pre, post = built_sizes(table)
    assert r.exact_pre_closure == pre - 1
    assert r.exact_post_closure == post - 1
    assert r.upper_bound >= r.exact_pre_closure >= r.exact_post_closure >= 1
    # per-node exact counts equal the simulated stacks with that node on top
    sim = stacks_by_simulation(graph)
    for v, c in enumerate(stack_counts(graph)):
        assert c == sum(1 for s in sim if s and s[0] == v)
