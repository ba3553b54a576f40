"""Bottom-up grounding with on-demand oracle calls.

Each stratum is evaluated to a fixpoint.  The first round instantiates
every rule of the stratum against the whole interpretation; later rounds
only consider derivations that use at least one atom produced by the
previous round (semi-naive restriction).  External atoms are evaluated
during the join through the completed rule's chosen oracle, and the
constants they return enter the Herbrand universe as they appear.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConstraintViolation, LimitExceeded, NotStratifiable, OracleFailure
from .oracles import answer_call
from .registry import Diagnostic
from .safety import Analysis, analyze_program, strongly_connected_components
from .syntax import Atom, Literal, Program, Variable, term_sort_key

log = logging.getLogger(__name__)


class ConstantRegistry:
    """Interning table for constants; identifiers are dense and never reused."""

    def __init__(self, cap: Optional[int] = None):
        self._ids: dict = {}
        self._constants: list = []
        # Interning beyond this many constants raises LimitExceeded.
        self.cap = cap

    def intern(self, c) -> int:
        ident = self._ids.get(c)
        if ident is None:
            if self.cap is not None and len(self._constants) >= self.cap:
                raise LimitExceeded("constants", self.cap)
            ident = len(self._constants)
            self._ids[c] = ident
            self._constants.append(c)
        return ident

    def constant(self, ident: int):
        return self._constants[ident]

    def __contains__(self, c):
        return c in self._ids

    def __len__(self):
        return len(self._constants)

    def __iter__(self):
        return iter(self._constants)


def intern_constant(constants: ConstantRegistry, c) -> int:
    return constants.intern(c)


class Interpretation:
    """Ground ordinary atoms, grouped by predicate, with lazily built lookup indexes."""

    def __init__(self):
        self.relations: dict = {}
        self._indexes: dict = {}   # (predicate, positions) -> {key: [tuple, ...]}

    def add(self, predicate: str, args: tuple) -> bool:
        rel = self.relations.setdefault(predicate, set())
        if args in rel:
            return False
        rel.add(args)
        for (pred, positions), index in self._indexes.items():
            if pred == predicate:
                index.setdefault(tuple(args[k] for k in positions), []).append(args)
        return True

    def add_atom(self, atom: Atom) -> bool:
        return self.add(atom.predicate, atom.args)

    def contains(self, predicate: str, args: tuple) -> bool:
        return args in self.relations.get(predicate, ())

    def lookup(self, predicate: str, positions: tuple, key: tuple):
        rel = self.relations.get(predicate)
        if not rel:
            return ()
        if not positions:
            return rel
        if len(positions) == len(next(iter(rel))):
            return (key,) if key in rel else ()
        index = self._indexes.get((predicate, positions))
        if index is None:
            index = {}
            for t in rel:
                index.setdefault(tuple(t[k] for k in positions), []).append(t)
            self._indexes[(predicate, positions)] = index
        return index.get(key, ())

    def __len__(self):
        return sum(len(r) for r in self.relations.values())

    def __eq__(self, other):
        if not isinstance(other, Interpretation):
            return NotImplemented
        mine = {p: r for p, r in self.relations.items() if r}
        theirs = {p: r for p, r in other.relations.items() if r}
        return mine == theirs

    def atoms(self) -> list:
        """All atoms, sorted by predicate then arguments."""
        out = []
        for pred in sorted(self.relations):
            rows = sorted(self.relations[pred], key=lambda t: tuple(map(term_sort_key, t)))
            out.extend(Atom(pred, t) for t in rows)
        return out

    def copy(self) -> "Interpretation":
        new = Interpretation()
        new.relations = {p: set(r) for p, r in self.relations.items()}
        return new


@dataclass(frozen=True)
class GroundRule:
    head: Optional[Atom]
    body: tuple = ()
    # External literals that were verified true; kept only on request.
    checks: tuple = field(default=(), compare=False)

    def __str__(self):
        head = str(self.head) if self.head is not None else ""
        if self.body:
            text = f"{head} :- {', '.join(map(str, self.body))}." if head else \
                f":- {', '.join(map(str, self.body))}."
        else:
            text = f"{head}." if head else ":- ."
        if self.checks:
            text += "  % checked: " + ", ".join(map(str, self.checks))
        return text


def _atom_key(atom):
    return (atom.predicate, tuple(term_sort_key(t) for t in atom.args))


def ground_rule_sort_key(rule: GroundRule):
    head = (0, _atom_key(rule.head)) if rule.head is not None else (1, ("", ()))
    return head + (tuple((l.negated,) + _atom_key(l.atom) for l in rule.body),)


@dataclass(frozen=True)
class GroundingLimits:
    max_iterations: int = 10_000
    max_new_constants: int = 1_000_000

    def __post_init__(self):
        if self.max_iterations <= 0 or self.max_new_constants <= 0:
            raise ValueError("grounding limits must be positive")


# -- stratification -------------------------------------------------------------

@dataclass
class Stratification:
    strata: list          # list of sets of predicate names, lowest first
    level: dict           # predicate -> stratum index


def stratify(program: Program) -> Stratification:
    preds = []
    edges = {}            # body predicate -> set of head predicates
    negative = set()      # (body predicate, head predicate)
    for rule in program.rules:
        atoms = ([rule.head] if rule.head is not None else []) + \
            [l.atom for l in rule.body if not l.atom.external]
        preds.extend(a.predicate for a in atoms)
        if rule.head is None:
            continue
        for lit in rule.body:
            if lit.atom.external:
                continue
            edges.setdefault(lit.atom.predicate, set()).add(rule.head.predicate)
            if lit.negated:
                negative.add((lit.atom.predicate, rule.head.predicate))
    preds = list(dict.fromkeys(preds))

    components = strongly_connected_components(preds, edges)
    component_of = {}
    for c, scc in enumerate(components):
        for p in scc:
            component_of[p] = c
    for q, p in sorted(negative):
        if component_of[q] == component_of[p]:
            cycle = sorted(components[component_of[p]])
            raise NotStratifiable(cycle)

    incoming = {}
    for q, targets in edges.items():
        for p in targets:
            incoming.setdefault(p, []).append(q)
    level = {}
    # Components come sinks-first; walk them sources-first.
    for scc in reversed(components):
        lvl = 0
        for p in scc:
            for q in incoming.get(p, ()):
                if q not in scc:
                    lvl = max(lvl, level[q] + (1 if (q, p) in negative else 0))
        for p in scc:
            level[p] = lvl
    distinct = sorted(set(level.values()))
    remap = {v: k for k, v in enumerate(distinct)}
    level = {p: remap[v] for p, v in level.items()}
    strata = [set() for _ in distinct]
    for p, v in level.items():
        strata[v].add(p)
    return Stratification(strata, level)


# -- instantiation ------------------------------------------------------------

_POS, _NEG, _EXT, _NEXT = range(4)


def _compile(cdr, registry):
    """Turn a completed rule into join steps with statically known bound positions."""
    steps = []
    bound = set()
    body = cdr.source.body
    for k in cdr.body_order:
        lit = body[k]
        atom = lit.atom
        args = atom.args
        if atom.external:
            entry = registry.lookup(atom)
            oracle = cdr.oracle_choice[k]
            kind = _NEXT if lit.negated else _EXT
            steps.append((kind, k, entry, oracle, args))
        elif lit.negated:
            steps.append((_NEG, k, atom.predicate, None, args))
        else:
            positions = tuple(i for i, t in enumerate(args)
                              if not isinstance(t, Variable) or t in bound)
            steps.append((_POS, k, atom.predicate, positions, args))
        bound.update(atom.variables())
    return steps


def _value(term, binding):
    return binding[term] if isinstance(term, Variable) else term


def _unify(args, positions, values, binding):
    """Extend ``binding`` so that args[positions] == values; None on clash."""
    new = None
    for k, v in zip(positions, values):
        t = args[k]
        if isinstance(t, Variable):
            current = (new or binding).get(t)
            if current is None:
                if new is None:
                    new = dict(binding)
                new[t] = v
            elif current != v:
                return None
        elif t != v:
            return None
    return new if new is not None else binding


def _join(steps, i, binding, interp, delta_step, delta, constants):
    if i == len(steps):
        yield binding
        return
    kind, k, what, extra, args = steps[i]
    if kind == _POS:
        positions = extra
        key = tuple(_value(args[p], binding) for p in positions)
        source = delta if i == delta_step else interp
        free = tuple(p for p in range(len(args)) if p not in positions)
        for t in source.lookup(what, positions, key):
            b = _unify(args, free, tuple(t[p] for p in free), binding)
            if b is not None:
                yield from _join(steps, i + 1, b, interp, delta_step, delta, constants)
    elif kind == _NEG:
        ground = tuple(_value(t, binding) for t in args)
        if not interp.contains(what, ground):
            yield from _join(steps, i + 1, binding, interp, delta_step, delta, constants)
    else:
        entry, oracle = what, extra
        pattern = oracle.pattern
        inputs = tuple(_value(args[p], binding) for p in pattern.inputs)
        try:
            answers = answer_call(entry, oracle, inputs)
        except OracleFailure as exc:
            if exc.context is None:
                exc.context = dict(binding)
            raise
        if kind == _NEXT:
            if not answers:
                yield from _join(steps, i + 1, binding, interp, delta_step, delta, constants)
            return
        outputs = pattern.outputs
        for out in answers:
            for c in out:
                constants.intern(c)
            b = _unify(args, outputs, out, binding)
            if b is not None:
                yield from _join(steps, i + 1, b, interp, delta_step, delta, constants)


def _ground_atom(atom, binding):
    return Atom(atom.predicate, tuple(_value(t, binding) for t in atom.args),
                atom.external, atom.package)


def instantiate_rule(cdr, interp: Interpretation, registry, constants: ConstantRegistry,
                     delta: Interpretation | None = None, delta_position: int | None = None,
                     keep_external: bool = False, _steps=None) -> set:
    """All ground instances of ``cdr`` whose body holds in ``interp``.

    With ``delta``, the positive literal at join step ``delta_position``
    ranges over ``delta`` instead of ``interp``.
    """
    steps = _steps if _steps is not None else _compile(cdr, registry)
    rule = cdr.source
    out = set()
    try:
        bindings = list(_join(steps, 0, {}, interp, delta_position, delta, constants))
    except OracleFailure as exc:
        context = ", ".join(f"{v}={c}" for v, c in (exc.context or {}).items())
        raise OracleFailure(f"{exc} in rule '{rule}' with {context or 'no bindings'}",
                            exc.predicate, exc.context, rule) from exc
    for binding in bindings:
        head = _ground_atom(rule.head, binding) if rule.head is not None else None
        body = tuple(Literal(_ground_atom(l.atom, binding), l.negated)
                     for l in rule.body if not l.atom.external)
        checks = ()
        if keep_external:
            checks = tuple(Literal(_ground_atom(l.atom, binding), l.negated)
                           for l in rule.body if l.atom.external)
        out.add(GroundRule(head, body, checks))
    return out


# -- evaluation -----------------------------------------------------------------

@dataclass
class EvaluationResult:
    model: Interpretation
    ground_rules: list
    warnings: list
    constants: ConstantRegistry
    stratification: Stratification
    iterations: int = 0
    invented: int = 0
    analysis: Analysis | None = None

    def model_atoms(self) -> list:
        return self.model.atoms()


def _program_constants(program, constants):
    for rule in program.rules:
        atoms = ([rule.head] if rule.head is not None else []) + [l.atom for l in rule.body]
        for atom in atoms:
            for t in atom.args:
                if not isinstance(t, Variable):
                    constants.intern(t)


def evaluate(program: Program, registry, limits: GroundingLimits | None = None, *,
             allow_unsafe_recursion: bool = False, keep_external: bool = False,
             analysis: Analysis | None = None, on_round=None) -> EvaluationResult:
    """Perfect model and simplified ground program of a stratified program.

    A precomputed ``analysis`` may be passed; its diagnostics are then left
    to the caller.  ``on_round(level, interp)`` is called after every round.
    """
    limits = limits or GroundingLimits()
    warnings = []
    if analysis is None:
        analysis = analyze_program(program, registry, allow_unsafe_recursion)
        warnings.extend(analysis.diagnostics)
    strat = stratify(program)

    constants = ConstantRegistry()
    _program_constants(program, constants)
    baseline = len(constants)
    constants.cap = baseline + limits.max_new_constants

    interp = Interpretation()
    ground = set()
    for rule in program.rules:
        if rule.is_fact:
            interp.add_atom(rule.head)
            ground.add(GroundRule(rule.head))

    by_stratum = [[] for _ in strat.strata]
    constraints = []
    for cdr in analysis.rules:
        if cdr.source.head is None:
            constraints.append(cdr)
        else:
            by_stratum[strat.level[cdr.source.head.predicate]].append(cdr)

    iterations = 0
    for level, rules in enumerate(by_stratum):
        if not rules:
            continue
        members = strat.strata[level]
        compiled = [(cdr, _compile(cdr, registry)) for cdr in rules]
        delta = None
        while True:
            iterations += 1
            if iterations > limits.max_iterations:
                raise LimitExceeded("iterations", limits.max_iterations)
            derived = set()
            for cdr, steps in compiled:
                if delta is None:
                    derived |= instantiate_rule(cdr, interp, registry, constants,
                                                keep_external=keep_external, _steps=steps)
                    continue
                for i, step in enumerate(steps):
                    if step[0] == _POS and step[2] in members and step[2] in delta.relations:
                        derived |= instantiate_rule(cdr, interp, registry, constants, delta, i,
                                                    keep_external=keep_external, _steps=steps)
            ground |= derived
            delta = Interpretation()
            for g in derived:
                if not interp.contains(g.head.predicate, g.head.args):
                    delta.add_atom(g.head)
            if not delta.relations:
                if on_round is not None:
                    on_round(level, interp)
                break
            for pred, rows in delta.relations.items():
                for t in rows:
                    interp.add(pred, t)
            if on_round is not None:
                on_round(level, interp)
            log.debug("stratum %d round %d: %d new atoms", level, iterations, len(delta))

    for cdr in constraints:
        violated = instantiate_rule(cdr, interp, registry, constants,
                                    keep_external=keep_external)
        if violated:
            first = min(violated, key=ground_rule_sort_key)
            raise ConstraintViolation(str(first), cdr.source)

    invented = len(constants) - baseline
    if iterations >= 0.9 * limits.max_iterations:
        warnings.append(Diagnostic("warning", "LimitNear",
                                   f"{iterations} of {limits.max_iterations} iterations used"))
    if invented >= 0.9 * limits.max_new_constants:
        warnings.append(Diagnostic("warning", "LimitNear",
                                   f"{invented} of {limits.max_new_constants} new constants used"))
    return EvaluationResult(interp, sorted(ground, key=ground_rule_sort_key), warnings,
                            constants, strat, iterations, invented, analysis)
