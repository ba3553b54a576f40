"""Talkative oracles and the per-predicate call cache.

A pattern marks each argument position of an external predicate as input
(``i``: a constant must be supplied) or output (``O``: the oracle computes
it).  A talkative oracle for a pattern maps a tuple of input constants to
the *set* of output tuples that make the ground atom true; the empty set
means failure.

Calls are cached per external predicate, not per oracle, so an answer
computed through one pattern can serve a later call through another.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .errors import ArityMismatch, DuplicatePattern, MissingBaseOracle, OracleFailure
from .syntax import Integer, String, Symbol, Variable, constant

log = logging.getLogger(__name__)

INPUT = "i"
OUTPUT = "O"


@dataclass(frozen=True)
class Pattern:
    text: str

    def __post_init__(self):
        if any(ch not in (INPUT, OUTPUT) for ch in self.text):
            raise ValueError(f"pattern {self.text!r} may contain only 'i' and 'O'")

    @classmethod
    def base(cls, arity: int) -> "Pattern":
        return cls(INPUT * arity)

    def __len__(self):
        return len(self.text)

    def __str__(self):
        return self.text

    @property
    def inputs(self) -> tuple:
        return tuple(k for k, ch in enumerate(self.text) if ch == INPUT)

    @property
    def outputs(self) -> tuple:
        return tuple(k for k, ch in enumerate(self.text) if ch == OUTPUT)

    @property
    def n_outputs(self) -> int:
        return self.text.count(OUTPUT)

    @property
    def is_base(self) -> bool:
        return OUTPUT not in self.text

    def assemble(self, inputs, outputs) -> tuple:
        """Interleave input and output values positionally into a full tuple."""
        ins = iter(inputs)
        outs = iter(outputs)
        return tuple(next(ins) if ch == INPUT else next(outs) for ch in self.text)


_RANK = str.maketrans({INPUT: "0", OUTPUT: "1"})


def pattern_preference(text: str) -> tuple:
    """Sort key: fewer output slots first, then positional order with ``i`` before ``O``."""
    return (text.count(OUTPUT), text.translate(_RANK))


def pattern_of_terms(terms) -> Pattern:
    """Constants become input slots, variables output slots."""
    return Pattern("".join(OUTPUT if isinstance(t, Variable) else INPUT for t in terms))


@dataclass(frozen=True)
class OracleSignature:
    predicate: str
    arity: int
    pattern: Pattern

    def __post_init__(self):
        if len(self.pattern) != self.arity:
            raise ValueError(
                f"pattern {self.pattern} has length {len(self.pattern)}, "
                f"expected arity {self.arity}")

    def __str__(self):
        return f"#{self.predicate}/{self.arity}^{self.pattern}"


class TalkativeOracle:
    """An evaluation function bound to one pattern of one external predicate.

    ``function`` receives one constant term per input slot.  For the base
    pattern it returns a truth value; otherwise it returns an iterable of
    output tuples (a bare value is accepted when there is one output slot).
    Plain ``int``/``str`` results are converted to Integer/String terms.
    """

    def __init__(self, signature: OracleSignature, function: Callable):
        self.signature = signature
        self.function = function

    @property
    def pattern(self) -> Pattern:
        return self.signature.pattern

    def __repr__(self):
        return f"TalkativeOracle({self.signature})"

    def evaluate(self, inputs: tuple) -> set:
        sig = self.signature
        try:
            result = self.function(*inputs)
        except OracleFailure:
            raise
        except Exception as exc:
            raise OracleFailure(
                f"{sig} failed on ({', '.join(map(str, inputs))}): {exc}",
                predicate=sig.predicate) from exc
        if sig.pattern.is_base:
            return {()} if result else set()
        answers = set()
        width = sig.pattern.n_outputs
        for item in result or ():
            if not isinstance(item, tuple):
                if width != 1:
                    raise OracleFailure(f"{sig} returned non-tuple answer {item!r}",
                                        predicate=sig.predicate)
                item = (item,)
            if len(item) != width:
                raise OracleFailure(
                    f"{sig} returned {len(item)} values, expected {width}",
                    predicate=sig.predicate)
            try:
                answers.add(tuple(constant(v) for v in item))
            except TypeError as exc:
                raise OracleFailure(f"{sig} returned a non-constant: {exc}",
                                    predicate=sig.predicate) from exc
        return answers


@dataclass(frozen=True)
class Call:
    """A term tuple submitted to an oracle; variables act as placeholders."""
    terms: tuple

    @classmethod
    def for_pattern(cls, pattern: Pattern, inputs) -> "Call":
        outs = (Variable(f"_O{k}") for k in range(pattern.n_outputs))
        return cls(pattern.assemble(inputs, outs))

    @property
    def pattern(self) -> Pattern:
        return pattern_of_terms(self.terms)

    def __str__(self):
        return "(" + ",".join(map(str, self.terms)) + ")"


def call_subsumes(c1: Call, c2: Call) -> bool:
    """True iff instantiating c1's placeholders can yield c2 (c1 is at least as general)."""
    if len(c1.terms) != len(c2.terms):
        raise ArityMismatch(f"cannot compare calls of arity {len(c1.terms)} "
                            f"and {len(c2.terms)}")
    subst = {}
    for t1, t2 in zip(c1.terms, c2.terms):
        if isinstance(t1, Variable):
            bound = subst.setdefault(t1, t2)
            if bound != t2:
                return False
        elif t1 != t2:
            return False
    return True


class ExternalPredicateCache:
    """Known ground tuples of one external predicate plus the calls that produced them.

    Performed calls are stored per input mask; for calls with distinct
    placeholders (the only kind the engine issues) subsumption reduces to
    "mask inputs are a subset and the projected constants agree", which
    makes the covered-check a handful of set lookups.
    """

    def __init__(self, arity: int):
        self.arity = arity
        self.ground_atoms: set = set()
        self._calls: dict = {}   # input positions -> set of input tuples
        self._index: dict = {}   # input positions -> {input tuple: set of output tuples}

    @property
    def performed_calls(self) -> set:
        calls = set()
        for mask, keys in self._calls.items():
            pattern = Pattern("".join(INPUT if k in mask else OUTPUT for k in range(self.arity)))
            calls.update(Call.for_pattern(pattern, key) for key in keys)
        return calls

    def covered(self, mask: tuple, inputs: tuple) -> bool:
        if inputs in self._calls.get(mask, ()):
            return True
        wanted = set(mask)
        by_pos = dict(zip(mask, inputs))
        for other, keys in self._calls.items():
            if other != mask and wanted.issuperset(other):
                if tuple(by_pos[k] for k in other) in keys:
                    return True
        return False

    def record(self, mask: tuple, inputs: tuple, tuples: Iterable[tuple]):
        self._calls.setdefault(mask, set()).add(inputs)
        for t in tuples:
            if t in self.ground_atoms:
                continue
            self.ground_atoms.add(t)
            for m, index in self._index.items():
                key = tuple(t[k] for k in m)
                out = tuple(t[k] for k in range(self.arity) if k not in m)
                index.setdefault(key, set()).add(out)

    def answers(self, mask: tuple, inputs: tuple) -> set:
        index = self._index.get(mask)
        if index is None:
            index = {}
            for t in self.ground_atoms:
                key = tuple(t[k] for k in mask)
                out = tuple(t[k] for k in range(self.arity) if k not in mask)
                index.setdefault(key, set()).add(out)
            self._index[mask] = index
        return set(index.get(inputs, ()))

    def clear(self):
        self.ground_atoms.clear()
        self._calls.clear()
        self._index.clear()


class ExternalPredicate:
    """One external predicate: its oracles (one per pattern) and its call cache."""

    def __init__(self, name: str, arity: int, oracles: Iterable[TalkativeOracle] = (),
                 package: str | None = None):
        self.name = name
        self.arity = arity
        self.package = package
        self.oracles: dict = {}
        self.cache = ExternalPredicateCache(arity)
        self.invocations = 0
        self.caching = True
        for oracle in oracles:
            self.add_oracle(oracle)

    def __repr__(self):
        return f"ExternalPredicate(#{self.name}/{self.arity}, {sorted(self.oracles)})"

    def add_oracle(self, oracle: TalkativeOracle):
        sig = oracle.signature
        if sig.predicate != self.name or sig.arity != self.arity:
            raise ValueError(f"oracle {sig} does not belong to #{self.name}/{self.arity}")
        if sig.pattern.text in self.oracles:
            raise DuplicatePattern(f"#{self.name}/{self.arity} already has an oracle "
                                   f"for pattern {sig.pattern}")
        self.oracles[sig.pattern.text] = oracle
        return oracle

    def oracle(self, pattern: str):
        """Decorator registering ``function`` as the oracle for ``pattern``."""
        def wrap(function):
            sig = OracleSignature(self.name, self.arity, Pattern(pattern))
            self.add_oracle(TalkativeOracle(sig, function))
            return function
        return wrap

    @property
    def base(self) -> TalkativeOracle:
        try:
            return self.oracles[INPUT * self.arity]
        except KeyError:
            raise MissingBaseOracle(f"#{self.name}/{self.arity} has no base oracle "
                                    f"({INPUT * self.arity})") from None

    def patterns(self) -> list:
        return sorted(self.oracles, key=pattern_preference)

    def validate(self):
        self.base  # raises MissingBaseOracle

    def reset(self):
        self.cache.clear()
        self.invocations = 0

    def invoke(self, oracle: TalkativeOracle, inputs: tuple) -> set:
        """Raw oracle invocation, bypassing the cache (counted)."""
        self.invocations += 1
        return oracle.evaluate(inputs)


def answer_call(entry: ExternalPredicate, oracle: TalkativeOracle, inputs: tuple) -> set:
    """Output tuples for ``inputs`` under ``oracle``, consulting the cache first.

    The oracle is invoked only when no previously performed call subsumes
    this one; its answers are merged into the predicate's known extension.
    """
    pattern = oracle.pattern
    if len(inputs) != len(pattern.inputs):
        raise ArityMismatch(f"{oracle.signature} expects {len(pattern.inputs)} inputs, "
                            f"got {len(inputs)}")
    if not entry.caching:
        return entry.invoke(oracle, inputs)
    mask = pattern.inputs
    cache = entry.cache
    if not cache.covered(mask, inputs):
        outputs = entry.invoke(oracle, inputs)
        cache.record(mask, inputs, (pattern.assemble(inputs, out) for out in outputs))
    return cache.answers(mask, inputs)


# -- helpers for writing oracle functions ------------------------------------

def as_int(term) -> int:
    if isinstance(term, Integer):
        return term.value
    raise TypeError(f"expected an integer, got {term}")


def as_text(term) -> str:
    if isinstance(term, String):
        return term.value
    if isinstance(term, Symbol):
        return term.name
    raise TypeError(f"expected a string or symbol, got {term}")
