import itertools

import pytest
from hypothesis import given, settings, strategies as st

from oraclelog.errors import ArityMismatch, DuplicatePattern, MissingBaseOracle, OracleFailure
from oraclelog.oracles import (
    Call, ExternalPredicate, OracleSignature, Pattern, TalkativeOracle, answer_call,
    call_subsumes, pattern_of_terms, pattern_preference,
)
from oraclelog.stdlib import stdlib
from oraclelog.syntax import Integer, String, Symbol, Variable

a, b, c, d = (Symbol(n) for n in "abcd")
X, Y = Variable("X"), Variable("Y")


def std():
    return {e.name: e for pkg in stdlib() for e in pkg.entries.values()}


def I(*vals):
    return tuple(Integer(v) for v in vals)


# -- patterns -----------------------------------------------------------------

def test_pattern_of_terms():
    assert pattern_of_terms((X, b, Y)).text == "OiO"
    assert pattern_of_terms(I(1, 2, 3)).text == "iii"
    assert pattern_of_terms(()).text == ""


def test_pattern_helpers():
    p = Pattern("iOi")
    assert p.inputs == (0, 2) and p.outputs == (1,)
    assert p.assemble(("x", "z"), ("y",)) == ("x", "y", "z")
    assert Pattern.base(3).is_base
    with pytest.raises(ValueError):
        Pattern("ix")
    with pytest.raises(ValueError):
        OracleSignature("p", 2, Pattern("i"))


def test_pattern_preference():
    assert sorted(["Oi", "iO", "ii"], key=pattern_preference) == ["ii", "iO", "Oi"]


# -- subsumption --------------------------------------------------------------

def test_subsumption_examples():
    assert call_subsumes(Call((a, b, X)), Call((a, b, c)))
    assert not call_subsumes(Call((a, b, c)), Call((a, b, X)))
    assert not call_subsumes(Call((c, d, X)), Call((a, d, X)))
    assert not call_subsumes(Call((a, d, X)), Call((c, d, X)))
    assert call_subsumes(Call((a, b, X)), Call((a, b, X)))
    with pytest.raises(ArityMismatch):
        call_subsumes(Call((a,)), Call((a, b)))


def test_subsumption_repeated_placeholder():
    assert call_subsumes(Call((X, X)), Call((a, a)))
    assert not call_subsumes(Call((X, X)), Call((a, b)))


def calls(arity):
    term = st.one_of(st.sampled_from([a, b, c]), st.sampled_from([X, Y, Variable("Z")]))
    return st.lists(term, min_size=arity, max_size=arity).map(lambda t: Call(tuple(t)))


def canonical(call):
    """Rename placeholders by first occurrence."""
    names = {}
    return tuple(names.setdefault(t, len(names)) if isinstance(t, Variable) else t
                 for t in call.terms)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 4).flatmap(lambda n: st.tuples(calls(n), calls(n), calls(n))))
def test_subsumption_partial_order(triple):
    c1, c2, c3 = triple
    assert call_subsumes(c1, c1)
    if call_subsumes(c1, c2) and call_subsumes(c2, c3):
        assert call_subsumes(c1, c3)
    if call_subsumes(c1, c2) and call_subsumes(c2, c1):
        assert canonical(c1) == canonical(c2)


# -- answer_call and the cache -------------------------------------------------

def test_fatt_cache_sequence():
    fatt = std()["fatt"]
    assert answer_call(fatt, fatt.oracles["iO"], I(3)) == {I(6)}
    assert fatt.invocations == 1
    assert answer_call(fatt, fatt.oracles["iO"], I(3)) == {I(6)}
    assert fatt.invocations == 1
    # (3,X) subsumes (3,6): the base check is answered from the cache.
    assert answer_call(fatt, fatt.base, I(3, 6)) == {()}
    assert fatt.invocations == 1
    # Same answer as a run without any cache.
    fresh = std()["fatt"]
    fresh.caching = False
    assert answer_call(fresh, fresh.base, I(3, 6)) == {()}
    assert fresh.invocations == 1


def test_cache_negative_answer_through_subsumption():
    fatt = std()["fatt"]
    answer_call(fatt, fatt.oracles["iO"], I(3))
    assert answer_call(fatt, fatt.base, I(3, 7)) == set()
    assert fatt.invocations == 1


def test_cache_across_patterns():
    sqr = std()["sqr"]
    answer_call(sqr, sqr.oracles["Oi"], I(9))
    # iO on 3 is not subsumed by the call (X,9): it must be invoked.
    assert answer_call(sqr, sqr.oracles["iO"], I(3)) == {I(9)}
    assert sqr.invocations == 2
    assert sqr.cache.performed_calls == {
        Call.for_pattern(Pattern("Oi"), I(9)), Call.for_pattern(Pattern("iO"), I(3))}


def test_answer_call_arity_check():
    fatt = std()["fatt"]
    with pytest.raises(ArityMismatch):
        answer_call(fatt, fatt.oracles["iO"], I(1, 2))


def test_oracle_failure_is_not_empty():
    fatt = std()["fatt"]
    with pytest.raises(OracleFailure):
        answer_call(fatt, fatt.oracles["iO"], (String("x"),))
    with pytest.raises(OracleFailure):
        answer_call(fatt, fatt.oracles["iO"], I(21))


def test_external_predicate_errors():
    p = ExternalPredicate("p", 1)

    @p.oracle("O")
    def _():
        return [1]

    with pytest.raises(MissingBaseOracle):
        p.validate()
    with pytest.raises(DuplicatePattern):
        p.oracle("O")(lambda: [])


def test_bad_oracle_results():
    sig = OracleSignature("p", 2, Pattern("iO"))
    with pytest.raises(OracleFailure):
        TalkativeOracle(sig, lambda x: [(1, 2)]).evaluate(I(1))
    with pytest.raises(OracleFailure):
        TalkativeOracle(sig, lambda x: [object()]).evaluate(I(1))
    assert TalkativeOracle(sig, lambda x: [5, "s"]).evaluate(I(1)) == {I(5), (String("s"),)}


# Random sequences of calls over all stdlib predicates and patterns.
def call_sequences():
    entries = std()
    options = [(name, pat) for name, e in sorted(entries.items()) if name != "contains"
               for pat in e.patterns()]
    step = st.sampled_from(options).flatmap(
        lambda np: st.tuples(st.just(np[0]), st.just(np[1]),
                             st.lists(st.integers(-6, 6), min_size=np[1].count("i"),
                                      max_size=np[1].count("i"))))
    return st.lists(step, max_size=25)


@settings(max_examples=150, deadline=None)
@given(call_sequences())
def test_cache_soundness(seq):
    entries = std()
    for name, pat, ins in seq:
        answer_call(entries[name], entries[name].oracles[pat], I(*ins))
    for name, pat, ins in seq:
        cached = answer_call(entries[name], entries[name].oracles[pat], I(*ins))
        fresh = std()[name]
        fresh.caching = False
        assert cached == answer_call(fresh, fresh.oracles[pat], I(*ins))


@settings(max_examples=150, deadline=None)
@given(call_sequences())
def test_cache_economy(seq):
    entries = std()
    issued = {}
    bound = {}
    for name, pat, ins in seq:
        call = Call.for_pattern(Pattern(pat), I(*ins))
        earlier = issued.setdefault(name, [])
        if not any(call_subsumes(prev, call) for prev in earlier):
            bound[name] = bound.get(name, 0) + 1
        earlier.append(call)
        answer_call(entries[name], entries[name].oracles[pat], I(*ins))
    for name, entry in entries.items():
        assert entry.invocations <= bound.get(name, 0)


# -- stdlib -------------------------------------------------------------------

def test_stdlib_examples():
    e = std()
    assert e["fatt"].oracles["iO"].evaluate(I(3)) == {I(6)}
    assert e["fatt"].oracles["Oi"].evaluate(I(6)) == {I(3)}
    assert e["sqr"].oracles["iO"].evaluate(I(3)) == {I(9)}
    assert e["succ"].base.evaluate(I(2, 3)) == {()}


def test_fatt_inverse_of_seven_empty():
    # Brute force: no n in 0..7 has n! == 7 (and n! > 7 beyond).
    f, facts = 1, []
    for n in range(0, 8):
        f = f * n if n else 1
        facts.append(f)
    assert 7 not in facts
    assert std()["fatt"].oracles["Oi"].evaluate(I(7)) == set()


def test_fatt_inverse_of_one():
    assert std()["fatt"].oracles["Oi"].evaluate(I(1)) == {I(0), I(1)}


def test_div_truncates_and_fails_on_zero():
    div = std()["div"]
    assert div.oracles["iiO"].evaluate(I(-7, 2)) == {I(-3)}
    assert div.oracles["iiO"].evaluate(I(7, 0)) == set()
    assert div.base.evaluate(I(7, 0, 0)) == set()


def test_contains():
    contains = std()["contains"]
    assert contains.base.evaluate((String("red stripes"), String("stripes"))) == {()}
    assert contains.base.evaluate((String("red"), String("stripes"))) == set()


DOMAIN = range(-20, 21)


@pytest.mark.parametrize("name", ["succ", "sqr", "fatt", "add", "div", "gt"])
def test_consistency_with_base(name):
    entry = std()[name]
    base = entry.base
    window = range(-500, 501) if entry.arity == 2 else range(-50, 51)
    for text in entry.patterns():
        pattern = Pattern(text)
        if pattern.is_base:
            continue
        oracle = entry.oracles[text]
        for ins in itertools.product(DOMAIN, repeat=len(pattern.inputs)):
            answers = oracle.evaluate(I(*ins))
            for out in answers:
                assert base.evaluate(pattern.assemble(I(*ins), out)) == {()}
            for outs in itertools.product(window, repeat=pattern.n_outputs):
                if base.evaluate(pattern.assemble(I(*ins), I(*outs))):
                    assert I(*outs) in answers
