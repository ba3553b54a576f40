"""Program representation: terms, atoms, literals, rules and programs."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

VARIABLE_RE = re.compile(r"[A-Z_][A-Za-z0-9_]*\Z")
SYMBOL_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1


@dataclass(frozen=True, slots=True)
class Integer:
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True, slots=True)
class String:
    value: str

    def __str__(self):
        escaped = (self.value.replace("\\", "\\\\").replace('"', '\\"')
                   .replace("\n", "\\n"))
        return f'"{escaped}"'


@dataclass(frozen=True, slots=True)
class Symbol:
    name: str

    def __post_init__(self):
        if not SYMBOL_RE.match(self.name):
            raise ValueError(f"invalid symbol constant {self.name!r}")

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Variable:
    name: str

    def __post_init__(self):
        if not VARIABLE_RE.match(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")

    def __str__(self):
        return self.name


Constant = Union[Integer, String, Symbol]
Term = Union[Integer, String, Symbol, Variable]

_KIND_RANK = {Integer: 0, Symbol: 1, String: 2}


def is_constant(term) -> bool:
    return not isinstance(term, Variable)


def term_sort_key(term):
    """Total order on constants: integers (numeric), then symbols, then strings."""
    if isinstance(term, Integer):
        return (0, term.value, "")
    if isinstance(term, Symbol):
        return (1, 0, term.name)
    if isinstance(term, String):
        return (2, 0, term.value)
    return (3, 0, term.name)


def constant(value) -> Constant:
    """Coerce a Python value into a constant term.

    ``int`` becomes Integer, ``str`` becomes String; terms pass through.
    """
    if isinstance(value, (Integer, String, Symbol)):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not constants")
    if isinstance(value, int):
        return Integer(value)
    if isinstance(value, str):
        return String(value)
    raise TypeError(f"cannot convert {value!r} to a constant")


@dataclass(frozen=True, slots=True)
class Atom:
    predicate: str
    args: tuple = ()
    external: bool = False
    package: Optional[str] = None

    def __post_init__(self):
        if self.package is not None and not self.external:
            raise ValueError("only external atoms can be package-qualified")

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def qualified_name(self) -> str:
        if self.package:
            return f"{self.package}.{self.predicate}"
        return self.predicate

    def variables(self):
        return [t for t in self.args if isinstance(t, Variable)]

    def is_ground(self) -> bool:
        return not any(isinstance(t, Variable) for t in self.args)

    def __str__(self):
        name = self.qualified_name
        if self.external:
            name = "#" + name
        if not self.args:
            return name
        return f"{name}({','.join(str(t) for t in self.args)})"


@dataclass(frozen=True, slots=True)
class Literal:
    atom: Atom
    negated: bool = False

    @property
    def positive(self) -> bool:
        return not self.negated

    def __str__(self):
        return f"not {self.atom}" if self.negated else str(self.atom)


@dataclass(frozen=True)
class Rule:
    head: Optional[Atom]
    body: tuple = ()
    # Source position, for diagnostics only.
    line: Optional[int] = field(default=None, compare=False)
    file: Optional[str] = field(default=None, compare=False)

    @property
    def is_constraint(self) -> bool:
        return self.head is None

    @property
    def is_fact(self) -> bool:
        return self.head is not None and not self.body and self.head.is_ground()

    def variables(self):
        """Distinct variables in order of first occurrence (head first)."""
        seen = {}
        atoms = ([self.head] if self.head is not None else []) + [l.atom for l in self.body]
        for atom in atoms:
            for v in atom.variables():
                seen.setdefault(v, None)
        return list(seen)

    def __str__(self):
        head = str(self.head) if self.head is not None else ""
        if not self.body:
            return f"{head}."
        body = ", ".join(str(l) for l in self.body)
        return f"{head} :- {body}." if head else f":- {body}."


@dataclass(frozen=True)
class ImportDirective:
    path: tuple
    wildcard: bool = False
    line: Optional[int] = field(default=None, compare=False)
    file: Optional[str] = field(default=None, compare=False)
    # "include" is accepted as a deprecated spelling of "import".
    keyword: str = field(default="import", compare=False)

    def __post_init__(self):
        if not self.path:
            raise ValueError("import path must not be empty")

    @property
    def dotted(self) -> str:
        return ".".join(self.path)

    def __str__(self):
        return f"#import {self.dotted}{'.*' if self.wildcard else ''}"


@dataclass(frozen=True)
class Program:
    imports: tuple = ()
    rules: tuple = ()

    def __str__(self):
        lines = [str(i) for i in self.imports] + [str(r) for r in self.rules]
        return "\n".join(lines) + ("\n" if lines else "")


def render(item) -> str:
    """Concrete syntax for any term, atom, literal, rule, directive or program."""
    return str(item)
