import random

import pytest
from hypothesis import given, settings, strategies as st

from oraclelog.errors import SafetyError, StronglyUnsafe, UnknownExternalPredicate, WeaklyUnsafe
from oraclelog.parser import parse_program, parse_rule
from oraclelog.registry import Package, Registry
from oraclelog.safety import (
    STRONGLY_SAFE, USUALLY_SAFE, WEAKLY_SAFE, analyze_program, build_dependency_graph,
    check_usual_safety, complete_rule, requires_strong_safety, strongly_connected_components,
)
from oraclelog.syntax import Variable

import refeval


def restricted_registry():
    """Oracles as assumed in the classic examples: sqr and fatt have ii and iO only."""
    reg = Registry(stdlib=False)
    pkg = Package("classic")
    for name in ("sqr", "fatt"):
        entry = pkg.predicate(name, 2)
        entry.oracle("ii")(lambda x, y: True)
        entry.oracle("iO")(lambda x: [1])
    r = pkg.predicate("r", 3)
    r.oracle("iii")(lambda *a: True)
    r.oracle("iiO")(lambda y, z: [1])
    succ = pkg.predicate("succ", 2)
    succ.oracle("ii")(lambda a, b: True)
    succ.oracle("iO")(lambda a: [1])
    succ.oracle("Oi")(lambda b: [1])
    reg.register_package(pkg)
    reg.active.update(pkg.entries)
    reg.imported.add("classic")
    return reg


def order_text(cdr):
    return [str(lit) for lit in cdr.ordered_body]


# -- graph --------------------------------------------------------------------

def test_graph_examples():
    g = build_dependency_graph(parse_program("squares(S) :- number(N), #sqr(N,S).\n"))
    assert g.nodes == [0] and not any(g.edges.values())
    assert not requires_strong_safety(0, g)

    g = build_dependency_graph(parse_program("int(X) :- int(Y), #succ(X,Y).\n"))
    assert g.edges == {0: {0}}
    assert requires_strong_safety(0, g)

    g = build_dependency_graph(parse_program("p(X) :- q(X).\nq(X) :- p(X).\n"))
    assert g.edges == {0: {1}, 1: {0}}
    assert requires_strong_safety(0, g) and requires_strong_safety(1, g)


def test_graph_negative_occurrence_is_an_edge():
    g = build_dependency_graph(parse_program("q(1).\np(X) :- d(X), not q(X).\n"))
    assert g.edges == {0: {1}}


def occurrence_edges(program):
    edges = set()
    for i, r1 in enumerate(program.rules):
        for j, r2 in enumerate(program.rules):
            if r1.head is not None and any(
                    not l.atom.external and l.atom.predicate == r1.head.predicate
                    for l in r2.body):
                edges.add((i, j))
    return edges


def test_graph_matches_occurrence_relation():
    rng = random.Random(3)
    for _ in range(100):
        program = parse_program(refeval.render(*refeval.generate_program(rng)))
        g = build_dependency_graph(program)
        assert {(i, j) for i, js in g.edges.items() for j in js} == occurrence_edges(program)


def test_scc_deep_chain_no_recursion_error():
    n = 5000
    edges = {k: {k + 1} for k in range(n)}
    edges[n] = {0}
    assert strongly_connected_components(range(n + 1), edges) == [set(range(n + 1))]


# -- usual safety -------------------------------------------------------------

def test_usual_safety():
    X, S = Variable("X"), Variable("S")
    assert check_usual_safety(parse_rule("p(X) :- q(X).")) == {X: True}
    assert check_usual_safety(parse_rule("h(S) :- number(N), #sqr(N,S)."))[S] is False
    assert check_usual_safety(parse_rule("p(X) :- not q(X).")) == {X: False}


# -- complete_rule ------------------------------------------------------------

def test_r_example():
    rule = parse_rule("p(X) :- q(X,Y), s(Y,T), m(Z), n(Z,T), #r(Y,Z,T).")
    cdr = complete_rule(rule, restricted_registry())
    assert order_text(cdr) == ["q(X,Y)", "s(Y,T)", "m(Z)", "#r(Y,Z,T)", "n(Z,T)"]
    assert cdr.oracle_choice[4].pattern.text == "iii"


def test_classic_safe_and_unsafe():
    reg = restricted_registry()
    cdr = complete_rule(parse_rule("h(S) :- number(N), #sqr(N,S)."), reg)
    assert order_text(cdr) == ["number(N)", "#sqr(N,S)"]
    assert cdr.oracle_choice[1].pattern.text == "iO"

    cdr = complete_rule(parse_rule("h(S1) :- number(N), #fatt(N,S), #sqr(S,S1)."), reg)
    assert order_text(cdr) == ["number(N)", "#fatt(N,S)", "#sqr(S,S1)"]
    assert [cdr.oracle_choice[k].pattern.text for k in (1, 2)] == ["iO", "iO"]

    with pytest.raises(WeaklyUnsafe) as info:
        complete_rule(parse_rule("h(S) :- number(S), #sqr(N,S)."), reg)
    assert info.value.variables == (Variable("N"),)

    with pytest.raises(WeaklyUnsafe):
        complete_rule(parse_rule("h(S1) :- number(S1), #fatt(N,S), #sqr(S,S1)."), reg)


def test_strongly_unsafe():
    rule = parse_rule("int(X) :- int(Y), #succ(X,Y).")
    with pytest.raises(StronglyUnsafe) as info:
        complete_rule(rule, Registry(), strong_required=True)
    assert info.value.variables == (Variable("X"),)
    # Without the recursion requirement the rule is weakly safe.
    complete_rule(rule, Registry(), strong_required=False)


def test_unknown_external():
    with pytest.raises(UnknownExternalPredicate):
        complete_rule(parse_rule("p(X) :- q(X), #nosuch(X)."), Registry())


def test_negated_external_uses_base():
    cdr = complete_rule(parse_rule("p(X) :- d(X), e(Y), not #gt(X,Y)."), Registry())
    assert order_text(cdr) == ["d(X)", "e(Y)", "not #gt(X,Y)"]
    assert cdr.oracle_choice[2].pattern.is_base


def test_stdlib_inverse_makes_rule_safe():
    cdr = complete_rule(parse_rule("h(S) :- number(S), #sqr(N,S)."), Registry())
    assert cdr.oracle_choice[1].pattern.text == "Oi"


def test_bound_output_acts_as_filter():
    cdr = complete_rule(parse_rule("p(X) :- d(X), #sqr(X,X)."), Registry())
    assert cdr.oracle_choice[1].pattern.text == "ii"


# -- analyze_program ----------------------------------------------------------

def test_analyze_classic_safe_rules():
    text = ("number(2).\nnumber(3).\nh(S) :- number(N), #sqr(N,S).\n"
            "h(S1) :- number(N), #fatt(N,S), #sqr(S,S1).\n")
    analysis = analyze_program(parse_program(text), restricted_registry())
    assert len(analysis.rules) == 2
    assert {v.kind for v in analysis.report.verdicts.values()} == {WEAKLY_SAFE}


def test_analyze_int_succ():
    with pytest.raises(SafetyError) as info:
        analyze_program(parse_program("int(0).\nint(X) :- int(Y), #succ(X,Y).\n"), Registry())
    verdict = info.value.report.verdicts[1]
    assert verdict.recursive and verdict.error == "StronglyUnsafe"
    assert verdict.variables and verdict.reason
    assert "StronglyUnsafe [recursive] {X}" in info.value.report.render()


def test_analyze_allow_unsafe_recursion():
    analysis = analyze_program(parse_program("int(0).\nint(X) :- int(Y), #succ(X,Y).\n"),
                               Registry(), allow_unsafe_recursion=True)
    assert [d.code for d in analysis.diagnostics] == ["StronglyUnsafe"]


def test_analyze_collects_all_failures():
    text = "p(X) :- not q(X).\nr(Y) :- s(X).\nt(X) :- s(X).\n"
    with pytest.raises(SafetyError) as info:
        analyze_program(parse_program(text), Registry())
    assert sorted(info.value.report.unsafe()) == [0, 1]
    assert len(info.value.errors) == 2


def test_strongly_safe_verdict():
    # Recursive, head variable usually safe, body variable Y bound only by an oracle.
    text = "t(1,2).\nr(X) :- t(X,_).\nr(X) :- r(X), #succ(X,Y), #gt(Y,0).\n"
    analysis = analyze_program(parse_program(text), Registry())
    assert analysis.report.verdicts[2].kind == STRONGLY_SAFE


def test_pure_datalog_is_usual_safety():
    ok = "e(1,2).\np(X,Y) :- e(X,Y).\np(X,Z) :- p(X,Y), e(Y,Z).\n"
    analysis = analyze_program(parse_program(ok), Registry())
    assert all(v.kind == USUALLY_SAFE for v in analysis.report.verdicts.values())
    with pytest.raises(SafetyError):
        analyze_program(parse_program("p(X) :- e(Y,Y).\n"), Registry())


# -- properties over generated programs ---------------------------------------

def replay_violations(cdr):
    bound = set()
    violations = 0
    for k in cdr.body_order:
        lit = cdr.source.body[k]
        if lit.atom.external:
            oracle = cdr.oracle_choice[k]
            for pos in oracle.pattern.inputs:
                t = lit.atom.args[pos]
                if isinstance(t, Variable) and t not in bound:
                    violations += 1
        if lit.negated and any(v not in bound for v in lit.atom.variables()):
            violations += 1
        bound.update(lit.atom.variables())
    return violations


def accepted_programs(seed, count):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        program = parse_program(refeval.render(*refeval.generate_program(rng)))
        reg = Registry()
        try:
            out.append((program, reg, analyze_program(program, reg)))
        except SafetyError:
            continue
    return out


def test_order_soundness_and_preference():
    for program, reg, analysis in accepted_programs(11, 150):
        cyclic = analysis.graph.cyclic_nodes()
        for cdr in analysis.rules:
            assert replay_violations(cdr) == 0
            assert sorted(cdr.body_order) == list(range(len(cdr.source.body)))
            # strong-safety restriction
            if cdr.index in cyclic:
                usual = check_usual_safety(cdr.source)
                assert all(usual[v] for v in cdr.source.head.variables())
            # oracle preference: every admissible alternative has >= outputs
            bound = set()
            for k in cdr.body_order:
                lit = cdr.source.body[k]
                if k in cdr.oracle_choice and lit.positive:
                    chosen = cdr.oracle_choice[k]
                    entry = reg.lookup(lit.atom)
                    for other in entry.oracles.values():
                        if all(not isinstance(lit.atom.args[p], Variable)
                               or lit.atom.args[p] in bound for p in other.pattern.inputs):
                            assert chosen.pattern.n_outputs <= other.pattern.n_outputs
                bound.update(lit.atom.variables())


def test_determinism():
    rng = random.Random(5)
    for _ in range(50):
        program = parse_program(refeval.render(*refeval.generate_program(rng)))
        results = []
        for _ in range(2):
            try:
                a = analyze_program(program, Registry())
                results.append([(c.body_order, {k: o.pattern.text for k, o in
                                                c.oracle_choice.items()}) for c in a.rules])
            except SafetyError as exc:
                results.append(exc.report.render())
        assert results[0] == results[1]


preds = st.sampled_from(["a", "b", "c"])
vars_ = st.sampled_from(["X", "Y", "Z"])
lits = st.tuples(preds, st.lists(vars_, min_size=1, max_size=2))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(preds, st.lists(vars_, max_size=2),
                          st.lists(lits, min_size=1, max_size=4)), min_size=1, max_size=4))
def test_conservativity_positive_datalog(rules):
    # Fixed arities per predicate name so the program always parses.
    arity = {"a": 1, "b": 2, "c": 1}

    def atom(p, vs):
        vs = (vs * 2)[:arity[p]]
        return f"{p}({','.join(vs)})"

    text = "".join(
        f"{atom(h, hv or ['X'])} :- {', '.join(atom(p, vs) for p, vs in body)}.\n"
        for h, hv, body in rules)
    program = parse_program(text)
    usually_safe = all(all(check_usual_safety(r).values()) for r in program.rules)
    try:
        analysis = analyze_program(program, Registry())
    except SafetyError:
        assert not usually_safe
        return
    assert usually_safe
    for cdr in analysis.rules:
        assert cdr.body_order == tuple(range(len(cdr.source.body)))
