"""Recursive-descent parser for the program language.

Grammar (informal)::

    program    := directive* statement*
    directive  := ('#import' | '#include') dotted ['.*'] ['.']     (one per line)
    statement  := [atom] [':-' body] '.'
    body       := literal (',' literal)*
    literal    := ['not'] (atom | extatom)
    atom       := ident ['(' term (',' term)* ')']
    extatom    := '#' ident ('.' ident)* ['(' term (',' term)* ')']
    term       := integer | "string" | Variable | symbol

``%`` starts a comment running to the end of the line.
"""

from __future__ import annotations

import bisect
import re

from .errors import (
    ArityMismatch, ClassicallyNegatedExternal, ExternalInHead, ImportAfterRule,
    ParseError,
)
from .syntax import (
    INT64_MAX, INT64_MIN, Atom, ImportDirective, Integer, Literal, Program, Rule,
    String, Symbol, Variable,
)

RESERVED_EXTERNAL = frozenset({"sum", "count", "times", "min", "max", "avg", "template"})

_TOKEN_SPEC = [
    ("SKIP", r"[ \t\r\n]+|%[^\n]*"),
    ("DIRECTIVE", r"#(?:import|include)\b[^\n%]*"),
    ("EXT", r"#[a-z][A-Za-z0-9_]*(?:\.[a-z][A-Za-z0-9_]*)*"),
    ("IF", r":-"),
    ("INT", r"-?[0-9]+"),
    ("STRING", r'"(?:[^"\\\n]|\\.)*"'),
    ("VAR", r"[A-Z_][A-Za-z0-9_]*"),
    ("IDENT", r"[a-z][A-Za-z0-9_]*"),
    ("LPAREN", r"\("),
    ("RPAREN", r"\)"),
    ("COMMA", r","),
    ("DOT", r"\."),
    ("MINUS", r"-"),
    ("ERROR", r"."),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{name}>{rx})" for name, rx in _TOKEN_SPEC))
_SEGMENT_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos

    def __repr__(self):
        return f"{self.kind}({self.text!r})"


def _tokenize(text):
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        if kind == "SKIP":
            continue
        tokens.append(_Token(kind, m.group(), m.start()))
    tokens.append(_Token("EOF", "", len(text)))
    return tokens


def _unescape(body):
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


class _Parser:
    def __init__(self, text, filename=None):
        self.text = text
        self.filename = filename
        self.tokens = _tokenize(text)
        self.i = 0
        self._line_starts = [0] + [m.end() for m in re.finditer(r"\n", text)]
        # (external?, qualified name) -> (arity, line)
        self.arities = {}

    # -- helpers --------------------------------------------------------------

    def position(self, pos):
        line = bisect.bisect_right(self._line_starts, pos)
        column = pos - self._line_starts[line - 1] + 1
        return line, column

    def error(self, message, token=None, cls=ParseError):
        token = token or self.peek()
        line, column = self.position(token.pos)
        return cls(message, line, column)

    def peek(self, offset=0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind, what):
        tok = self.peek()
        if tok.kind != kind:
            found = tok.text or "end of input"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance()

    # -- program --------------------------------------------------------------

    def program(self):
        imports = []
        rules = []
        while self.peek().kind != "EOF":
            if self.peek().kind == "DIRECTIVE":
                tok = self.advance()
                if rules:
                    raise self.error("import directives must precede all rules", tok,
                                     ImportAfterRule)
                imports.append(self.directive(tok))
            else:
                rules.append(self.statement())
        return Program(tuple(imports), tuple(rules))

    def directive(self, tok):
        m = re.match(r"#(import|include)\s+(\S+)\Z", tok.text.strip())
        if not m:
            raise self.error("malformed import directive", tok)
        keyword, payload = m.groups()
        if payload.endswith("."):
            payload = payload[:-1]
        segments = payload.split(".")
        wildcard = segments[-1] == "*"
        if wildcard:
            segments = segments[:-1]
        if not segments or not all(_SEGMENT_RE.match(s) for s in segments):
            raise self.error(f"malformed package path {payload!r}", tok)
        line, _ = self.position(tok.pos)
        return ImportDirective(tuple(segments), wildcard, line=line, file=self.filename,
                               keyword=keyword)

    def statement(self):
        start = self.peek()
        line, _ = self.position(start.pos)
        head = None
        body = []
        if start.kind == "IF":
            self.advance()
            body = self.body()
        else:
            head = self.head()
            if self.peek().kind == "IF":
                self.advance()
                body = self.body()
        self.expect("DOT", "'.' at end of rule")
        rule = Rule(head, tuple(body), line=line, file=self.filename)
        rule = _expand_anonymous(rule)
        self.check_arities(rule, line)
        return rule

    def head(self):
        tok = self.peek()
        if tok.kind == "EXT":
            raise self.error("external atoms may appear only in rule bodies and constraints",
                             tok, ExternalInHead)
        if tok.kind == "MINUS":
            if self.peek(1).kind == "EXT":
                raise self.error("external atoms cannot be classically negated", tok,
                                 ClassicallyNegatedExternal)
            raise self.error("classical negation is not supported", tok)
        if tok.kind == "IDENT" and tok.text == "not" and self.peek(1).kind in ("IDENT", "EXT"):
            raise self.error("default negation is not allowed in rule heads", tok)
        if tok.kind != "IDENT":
            raise self.error(f"expected a rule head, found {tok.text or 'end of input'!r}")
        return self.atom()

    def body(self):
        literals = [self.literal()]
        while self.peek().kind == "COMMA":
            self.advance()
            literals.append(self.literal())
        return literals

    def literal(self):
        tok = self.peek()
        negated = False
        if tok.kind == "IDENT" and tok.text == "not" and self.peek(1).kind in ("IDENT", "EXT", "MINUS"):
            self.advance()
            negated = True
            tok = self.peek()
        if tok.kind == "MINUS":
            if self.peek(1).kind == "EXT":
                raise self.error("external atoms cannot be classically negated", tok,
                                 ClassicallyNegatedExternal)
            raise self.error("classical negation is not supported", tok)
        if tok.kind in ("IDENT", "EXT"):
            return Literal(self.atom(), negated)
        raise self.error(f"expected a literal, found {tok.text or 'end of input'!r}")

    def atom(self):
        tok = self.advance()
        external = tok.kind == "EXT"
        package = None
        name = tok.text
        if external:
            parts = tok.text[1:].split(".")
            name = parts[-1]
            if len(parts) > 1:
                package = ".".join(parts[:-1])
            if name in RESERVED_EXTERNAL or name in ("import", "include"):
                raise self.error(f"#{name} is a reserved identifier", tok)
        args = ()
        if self.peek().kind == "LPAREN":
            self.advance()
            args = [self.term()]
            while self.peek().kind == "COMMA":
                self.advance()
                args.append(self.term())
            self.expect("RPAREN", "')'")
            args = tuple(args)
        return Atom(name, args, external, package)

    def term(self):
        tok = self.advance()
        if tok.kind == "INT":
            value = int(tok.text)
            if not INT64_MIN <= value <= INT64_MAX:
                raise self.error(f"integer {tok.text} does not fit in 64 bits", tok)
            return Integer(value)
        if tok.kind == "STRING":
            return String(_unescape(tok.text[1:-1]))
        if tok.kind == "VAR":
            return Variable(tok.text)
        if tok.kind == "IDENT":
            return Symbol(tok.text)
        self.i -= 1
        raise self.error(f"expected a term, found {tok.text or 'end of input'!r}", tok)

    def check_arities(self, rule, line):
        atoms = ([rule.head] if rule.head is not None else []) + [l.atom for l in rule.body]
        for atom in atoms:
            key = (atom.external, atom.qualified_name)
            seen = self.arities.setdefault(key, (atom.arity, line))
            if seen[0] != atom.arity:
                shown = ("#" if atom.external else "") + atom.qualified_name
                raise ArityMismatch(
                    f"{shown} used with arity {atom.arity}, but with arity {seen[0]} "
                    f"on line {seen[1]}", line, 1)


def _expand_anonymous(rule):
    """Replace every ``_`` with a variable not occurring elsewhere in the rule."""
    atoms = ([rule.head] if rule.head is not None else []) + [l.atom for l in rule.body]
    if not any(t == Variable("_") for a in atoms for t in a.args):
        return rule
    used = {v.name for v in rule.variables()}
    counter = 0

    def fresh():
        nonlocal counter
        while True:
            counter += 1
            name = f"_{counter}"
            if name not in used:
                return Variable(name)

    def rewrite(atom):
        args = tuple(fresh() if t == Variable("_") else t for t in atom.args)
        return Atom(atom.predicate, args, atom.external, atom.package)

    head = rewrite(rule.head) if rule.head is not None else None
    body = tuple(Literal(rewrite(l.atom), l.negated) for l in rule.body)
    return Rule(head, body, line=rule.line, file=rule.file)


def parse_program(text: str, filename: str | None = None) -> Program:
    return _Parser(text, filename).program()


def parse_rule(text: str) -> Rule:
    """Parse exactly one rule, fact or constraint."""
    parser = _Parser(text)
    if parser.peek().kind == "DIRECTIVE":
        raise parser.error("expected a rule, found an import directive")
    rule = parser.statement()
    if parser.peek().kind != "EOF":
        raise parser.error("unexpected input after rule")
    return rule
