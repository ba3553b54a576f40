"""Safety analysis and body reordering.

A rule is *completed* by fixing a left-to-right instantiation order of its
body and choosing one talkative oracle for every external atom, such that
each oracle's input positions are bound by the time it is reached.
Rules lying on a cycle of the rule dependency graph must additionally
keep every head variable bound by an ordinary positive body atom, since an
oracle output fed back through recursion can invent constants forever.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    RuleSafetyError, SafetyError, StronglyUnsafe, UnknownExternalPredicate, WeaklyUnsafe,
)
from .oracles import ExternalPredicate, TalkativeOracle, pattern_preference
from .registry import Diagnostic
from .syntax import Program, Rule, Variable

USUALLY_SAFE = "UsuallySafe"
WEAKLY_SAFE = "WeaklySafe"
STRONGLY_SAFE = "StronglySafe"
UNSAFE = "Unsafe"


# -- dependency graph ---------------------------------------------------------

@dataclass
class RuleDependencyGraph:
    """Nodes are rule indices; r1 -> r2 iff r1's head predicate occurs in r2's body."""
    nodes: list
    edges: dict

    def successors(self, node):
        return self.edges.get(node, ())

    def components(self):
        return strongly_connected_components(self.nodes, self.edges)

    def cyclic_nodes(self) -> set:
        cyclic = set()
        for scc in self.components():
            if len(scc) > 1:
                cyclic.update(scc)
            else:
                (node,) = scc
                if node in self.edges.get(node, ()):
                    cyclic.add(node)
        return cyclic


def strongly_connected_components(vertices, edges):
    """Tarjan's algorithm, iterative so deep graphs do not hit the recursion limit.

    Returns a list of sets in reverse topological order (sinks first).
    """
    index = {}
    lowlink = {}
    on_stack = set()
    stack = []
    result = []
    counter = 0
    for root in vertices:
        if root in index:
            continue
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(edges.get(root, ())))]
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = lowlink[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(edges.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                scc = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    scc.add(w)
                    if w == v:
                        break
                result.append(scc)
    return result


def build_dependency_graph(program: Program) -> RuleDependencyGraph:
    used_in = {}
    for k, rule in enumerate(program.rules):
        for lit in rule.body:
            if not lit.atom.external:
                used_in.setdefault(lit.atom.predicate, set()).add(k)
    edges = {}
    for k, rule in enumerate(program.rules):
        if rule.head is not None and rule.head.predicate in used_in:
            edges[k] = set(used_in[rule.head.predicate])
    return RuleDependencyGraph(list(range(len(program.rules))), edges)


def requires_strong_safety(rule_index: int, graph: RuleDependencyGraph) -> bool:
    return rule_index in graph.cyclic_nodes()


# -- safety -------------------------------------------------------------------

def check_usual_safety(rule: Rule) -> dict:
    """Map each variable of ``rule`` to whether it occurs in a positive ordinary body atom."""
    safe = set()
    for lit in rule.body:
        if lit.positive and not lit.atom.external:
            safe.update(lit.atom.variables())
    return {v: v in safe for v in rule.variables()}


@dataclass
class CompletelyDefinedRule:
    source: Rule
    body_order: tuple
    oracle_choice: dict = field(default_factory=dict)   # body index -> TalkativeOracle
    index: int | None = None

    @property
    def ordered_body(self):
        return [self.source.body[k] for k in self.body_order]

    def __str__(self):
        parts = []
        for k in self.body_order:
            lit = self.source.body[k]
            text = str(lit)
            if k in self.oracle_choice:
                text += f"[{self.oracle_choice[k].pattern}]"
            parts.append(text)
        head = str(self.source.head) if self.source.head is not None else ""
        if not parts:
            return f"{head}."
        return f"{head} :- {', '.join(parts)}."


def _admissible(entry: ExternalPredicate, atom, bound) -> TalkativeOracle | None:
    """The preferred oracle whose input slots are all bound, if any."""
    best = None
    for text, oracle in entry.oracles.items():
        if all(not isinstance(atom.args[k], Variable) or atom.args[k] in bound
               for k in oracle.pattern.inputs):
            if best is None or pattern_preference(text) < pattern_preference(best.pattern.text):
                best = oracle
    return best


def _ordered_unique(variables):
    return list(dict.fromkeys(variables))


def complete_rule(rule: Rule, registry, strong_required: bool = False) -> CompletelyDefinedRule:
    """Greedy body ordering with oracle selection.

    Each step places, in priority order: the textually first positive
    external atom having an admissible oracle (the one with fewest output
    slots); else the first negated literal whose variables are all bound;
    else the first positive ordinary literal.  No backtracking.
    """
    body = rule.body
    entries = {}
    for k, lit in enumerate(body):
        if lit.atom.external:
            try:
                entries[k] = registry.lookup(lit.atom)
            except UnknownExternalPredicate as exc:
                raise UnknownExternalPredicate(str(exc), (), rule) from None

    bound = set()
    order = []
    choice = {}
    remaining = list(range(len(body)))
    while remaining:
        pick = None
        for k in remaining:
            lit = body[k]
            if lit.atom.external and lit.positive:
                oracle = _admissible(entries[k], lit.atom, bound)
                if oracle is not None:
                    pick = k
                    choice[k] = oracle
                    break
        if pick is None:
            for k in remaining:
                lit = body[k]
                if lit.negated and all(v in bound for v in lit.atom.variables()):
                    pick = k
                    if lit.atom.external:
                        choice[k] = entries[k].base
                    break
        if pick is None:
            for k in remaining:
                lit = body[k]
                if lit.positive and not lit.atom.external:
                    pick = k
                    break
        if pick is None:
            stuck = _ordered_unique(
                v for k in remaining for v in body[k].atom.variables() if v not in bound)
            names = ", ".join(v.name for v in stuck)
            raise WeaklyUnsafe(
                f"cannot place {', '.join(str(body[k]) for k in remaining)}: "
                f"no admissible oracle or binding for {names}", stuck, rule)
        order.append(pick)
        remaining.remove(pick)
        bound.update(body[pick].atom.variables())

    if rule.head is not None:
        unbound = _ordered_unique(v for v in rule.head.variables() if v not in bound)
        if unbound:
            raise WeaklyUnsafe(
                f"head variable(s) {', '.join(v.name for v in unbound)} never bound",
                unbound, rule)
        if strong_required:
            usual = check_usual_safety(rule)
            inventing = _ordered_unique(v for v in rule.head.variables() if not usual[v])
            if inventing:
                raise StronglyUnsafe(
                    f"recursive rule binds head variable(s) "
                    f"{', '.join(v.name for v in inventing)} only through oracle outputs",
                    inventing, rule)

    return CompletelyDefinedRule(rule, tuple(order), choice)


# -- whole program ------------------------------------------------------------

@dataclass
class Verdict:
    kind: str
    recursive: bool = False
    reason: str = ""
    variables: tuple = ()
    error: str = ""   # name of the error class for unsafe rules

    @property
    def safe(self) -> bool:
        return self.kind != UNSAFE


@dataclass
class SafetyReport:
    verdicts: dict = field(default_factory=dict)   # rule index -> Verdict
    rules: tuple = ()

    @property
    def ok(self) -> bool:
        return all(v.safe for v in self.verdicts.values())

    def unsafe(self):
        return {k: v for k, v in self.verdicts.items() if not v.safe}

    def render(self) -> str:
        lines = []
        for k in sorted(self.verdicts):
            v = self.verdicts[k]
            kind = v.error if not v.safe else v.kind
            text = f"rule {k + 1}: {kind}"
            if v.recursive:
                text += " [recursive]"
            if not v.safe:
                text += f" {{{', '.join(x.name for x in v.variables)}}}: {v.reason}"
            lines.append(text)
        return "\n".join(lines) + ("\n" if lines else "")


@dataclass
class Analysis:
    rules: list            # CompletelyDefinedRule, facts excluded
    report: SafetyReport
    graph: RuleDependencyGraph
    diagnostics: list = field(default_factory=list)


def analyze_program(program: Program, registry, allow_unsafe_recursion: bool = False) -> Analysis:
    """Complete every non-fact rule; raise SafetyError listing all unsafe rules.

    With ``allow_unsafe_recursion`` a StronglyUnsafe rule is downgraded to a
    warning and kept in its weakly safe completion.
    """
    graph = build_dependency_graph(program)
    cyclic = graph.cyclic_nodes()
    report = SafetyReport(rules=program.rules)
    completed = []
    diagnostics = []
    failures = []
    for k, rule in enumerate(program.rules):
        if rule.is_fact:
            continue
        recursive = k in cyclic
        try:
            cdr = complete_rule(rule, registry, strong_required=recursive)
        except StronglyUnsafe as exc:
            if not allow_unsafe_recursion:
                report.verdicts[k] = Verdict(UNSAFE, recursive, str(exc), exc.variables,
                                             "StronglyUnsafe")
                failures.append((k, exc))
                continue
            diagnostics.append(Diagnostic(
                "warning", "StronglyUnsafe", f"{exc} (allowed by --allow-unsafe-recursion)",
                rule.file, rule.line))
            cdr = complete_rule(rule, registry, strong_required=False)
        except RuleSafetyError as exc:
            report.verdicts[k] = Verdict(UNSAFE, recursive, str(exc), exc.variables,
                                         type(exc).__name__)
            failures.append((k, exc))
            continue
        cdr.index = k
        completed.append(cdr)
        usual = check_usual_safety(rule)
        if all(usual.values()):
            kind = USUALLY_SAFE
        elif recursive and all(usual[v] for v in (rule.head.variables() if rule.head else ())):
            kind = STRONGLY_SAFE
        else:
            kind = WEAKLY_SAFE
        report.verdicts[k] = Verdict(kind, recursive)
    if failures:
        first_k, first = failures[0]
        rule = program.rules[first_k]
        where = f"line {rule.line}: " if rule.line else ""
        raise SafetyError(f"{len(failures)} unsafe rule(s); first: {where}{first}",
                          report, [e for _, e in failures])
    return Analysis(completed, report, graph, diagnostics)
