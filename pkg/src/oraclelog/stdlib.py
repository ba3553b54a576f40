"""Built-in oracle packages.

``std.math`` and ``std.strings`` are always active.  ``ext.strings`` is
compiled in as well but must be imported through a manifest.

All integer arithmetic is checked against the signed 64-bit range; a
result outside it is an oracle failure rather than a silently wrapped
value.
"""

from __future__ import annotations

from math import isqrt

from .oracles import ExternalPredicate, as_int, as_text
from .registry import Package
from .syntax import INT64_MAX, INT64_MIN


def _checked(value: int) -> int:
    if not INT64_MIN <= value <= INT64_MAX:
        raise OverflowError(f"result {value} does not fit in 64 bits")
    return value


def _trunc_div(x: int, y: int) -> int:
    q = abs(x) // abs(y)
    return q if (x >= 0) == (y > 0) else -q


# 20! is the largest factorial that fits in a signed 64-bit integer.
_FACTORIALS = [1]
for _n in range(1, 21):
    _FACTORIALS.append(_FACTORIALS[-1] * _n)


def _succ():
    succ = ExternalPredicate("succ", 2)

    @succ.oracle("ii")
    def _(a, b):
        return as_int(b) == as_int(a) + 1

    @succ.oracle("iO")
    def _(a):
        return [(_checked(as_int(a) + 1),)]

    @succ.oracle("Oi")
    def _(b):
        return [(_checked(as_int(b) - 1),)]

    return succ


def _sqr():
    sqr = ExternalPredicate("sqr", 2)

    @sqr.oracle("ii")
    def _(x, y):
        return as_int(y) == as_int(x) ** 2

    @sqr.oracle("iO")
    def _(x):
        return [(_checked(as_int(x) ** 2),)]

    @sqr.oracle("Oi")
    def _(y):
        y = as_int(y)
        if y < 0:
            return []
        root = isqrt(y)
        if root * root != y:
            return []
        return {(root,), (-root,)}

    return sqr


def _fatt():
    fatt = ExternalPredicate("fatt", 2)

    @fatt.oracle("ii")
    def _(n, f):
        n, f = as_int(n), as_int(f)
        return 0 <= n < len(_FACTORIALS) and _FACTORIALS[n] == f

    @fatt.oracle("iO")
    def _(n):
        n = as_int(n)
        if n < 0:
            return []
        if n >= len(_FACTORIALS):
            raise OverflowError(f"{n}! does not fit in 64 bits")
        return [(_FACTORIALS[n],)]

    @fatt.oracle("Oi")
    def _(f):
        f = as_int(f)
        # 0! = 1! = 1, so the answer can have two elements.
        return [(n,) for n, v in enumerate(_FACTORIALS) if v == f]

    return fatt


def _add():
    add = ExternalPredicate("add", 3)

    @add.oracle("iii")
    def _(x, y, z):
        return as_int(x) + as_int(y) == as_int(z)

    @add.oracle("iiO")
    def _(x, y):
        return [(_checked(as_int(x) + as_int(y)),)]

    @add.oracle("iOi")
    def _(x, z):
        return [(_checked(as_int(z) - as_int(x)),)]

    @add.oracle("Oii")
    def _(y, z):
        return [(_checked(as_int(z) - as_int(y)),)]

    return add


def _div():
    div = ExternalPredicate("div", 3)

    @div.oracle("iii")
    def _(x, y, z):
        x, y, z = as_int(x), as_int(y), as_int(z)
        return y != 0 and _trunc_div(x, y) == z

    @div.oracle("iiO")
    def _(x, y):
        x, y = as_int(x), as_int(y)
        if y == 0:
            return []
        return [(_checked(_trunc_div(x, y)),)]

    return div


def _gt():
    gt = ExternalPredicate("gt", 2)

    @gt.oracle("ii")
    def _(x, y):
        return as_int(x) > as_int(y)

    return gt


def _contains():
    contains = ExternalPredicate("contains", 2)

    @contains.oracle("ii")
    def _(text, part):
        return as_text(part) in as_text(text)

    return contains


def stdlib() -> list:
    """Fresh ``std.math`` and ``std.strings`` packages (each call gets private caches)."""
    math = Package("std.math", [_succ(), _sqr(), _fatt(), _add(), _div(), _gt()])
    strings = Package("std.strings", [_contains()])
    return [math, strings]


def extra_packages() -> list:
    """Packages that ship with the CLI but need an explicit import."""
    pkg = Package("ext.strings")

    concat = pkg.predicate("concat", 3)

    @concat.oracle("iii")
    def _(a, b, c):
        return as_text(a) + as_text(b) == as_text(c)

    @concat.oracle("iiO")
    def _(a, b):
        return [(as_text(a) + as_text(b),)]

    length = pkg.predicate("length", 2)

    @length.oracle("ii")
    def _(s, n):
        return len(as_text(s)) == as_int(n)

    @length.oracle("iO")
    def _(s):
        return [(len(as_text(s)),)]

    contains = pkg.predicate("contains", 2)

    @contains.oracle("ii")
    def _(text, part):
        return as_text(part).lower() in as_text(text).lower()

    return [pkg]
