"""Expressions such as ``2*sin(pi*z)^2 + exp(2*pi*i*sqrt2*z)`` to :class:`ExpSum`.

Basis names are declared as ``name=decimal``; the entry ``one`` (value 1)
is always present and ``pi`` is reserved for the constant.  Inside
``sin``/``cos`` the coefficient of ``z`` must be ``pi`` times a rational
combination of basis names, inside ``exp`` it must be ``2 pi i`` times one.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from fractions import Fraction

from .algebra import MP, ExpSum, FreqVector, FrequencyBasis, add, make_expsum, multiply, power, scale
from .errors import BasisMismatch, ParseError
from .generators import cosine_expsum, sine_expsum

RESERVED = {"pi", "i", "z", "sin", "cos", "exp", "one"}

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str):
    out, pos = [], 0
    while True:
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ParseError(f"unexpected character {text[pos:].strip()[0]!r}", len(text) - len(text[pos:].lstrip()))
            break
        kind = m.lastgroup
        out.append(Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(Token("end", "", len(text)))
    return out


def build_basis(declarations) -> FrequencyBasis:
    """Basis from ``{name: decimal}`` (or ``"name=decimal"`` strings) plus the implicit ``one``."""
    if not isinstance(declarations, dict):
        pairs = {}
        for item in declarations or ():
            name, sep, value = item.partition("=")
            if not sep:
                raise ParseError(f"basis declaration {item!r} is not name=decimal", 0)
            pairs[name.strip()] = value.strip()
        declarations = pairs
    entries = [("one", "1")]
    for name, value in declarations.items():
        if name == "pi":
            if abs(MP.mpf(value) - MP.pi) > MP.mpf("1e-12"):
                raise ParseError("'pi' is reserved for the constant", 0)
            continue
        if name in RESERVED:
            raise ParseError(f"{name!r} is a reserved name", 0)
        entries.append((name, str(value)))
    return FrequencyBasis(tuple(entries))


# -- symbolic coefficients inside function arguments -------------------------
# A Sym maps (z degree, pi power, basis name or None) to a complex number whose
# real and imaginary parts are Fractions.

def _c(re=Fraction(0), im=Fraction(0)):
    return (Fraction(re), Fraction(im))


def _cmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _sym_add(a, b, sign=1):
    out = dict(a)
    for k, v in b.items():
        w = out.get(k, _c())
        out[k] = (w[0] + sign * v[0], w[1] + sign * v[1])
    return {k: v for k, v in out.items() if v != (0, 0)}


def _sym_mul(a, b, pos):
    out = {}
    for (za, pa, na), va in a.items():
        for (zb, pb, nb), vb in b.items():
            if na and nb:
                raise ParseError("products of two basis names are not frequencies", pos)
            key = (za + zb, pa + pb, na or nb)
            if key[0] > 1:
                raise ParseError("argument must be linear in z", pos)
            w = out.get(key, _c())
            p = _cmul(va, vb)
            out[key] = (w[0] + p[0], w[1] + p[1])
    return {k: v for k, v in out.items() if v != (0, 0)}


class Parser:
    def __init__(self, text: str, basis: FrequencyBasis):
        self.text = text
        self.basis = basis
        self.tokens = tokenize(text)
        self.i = 0

    # token helpers
    @property
    def tok(self):
        return self.tokens[self.i]

    def take(self, text=None, kind=None):
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r} but found {t.text or 'end of input'!r}", t.pos)
        self.i += 1
        return t

    def parse(self) -> ExpSum:
        value = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.pos)
        if isinstance(value, complex):
            value = ExpSum.constant(self.basis, value)
        return make_expsum(value.terms().items(), self.basis)

    # top level: values are ExpSum or complex constants
    def expr(self):
        sign = 1
        if self.tok.text in "+-" and self.tok.kind == "op":
            sign = -1 if self.take().text == "-" else 1
        value = self.product()
        if sign < 0:
            value = self._scale(value, -1)
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.take().text
            rhs = self.product()
            value = self._add(value, rhs if op == "+" else self._scale(rhs, -1))
        return value

    def product(self):
        value = self.power()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.take()
            rhs = self.power()
            if op.text == "*":
                value = self._mul(value, rhs)
            else:
                if not isinstance(rhs, complex):
                    raise ParseError("division by a non-constant", op.pos)
                if rhs == 0:
                    raise ParseError("division by zero", op.pos)
                value = self._scale(value, 1 / rhs)
        return value

    def power(self):
        base = self.primary()
        if self.tok.text == "^":
            op = self.take()
            sign = 1
            if self.tok.text == "-":
                self.take()
                sign = -1
            n = self.take(kind="num")
            if not re.fullmatch(r"\d+", n.text):
                raise ParseError("exponent must be a non-negative integer", n.pos)
            k = sign * int(n.text)
            if isinstance(base, complex):
                return base ** k
            if k < 0:
                raise ParseError("negative powers of exponential sums are not exponential sums", op.pos)
            return power(base, k)
        return base

    def primary(self):
        t = self.tok
        if t.kind == "op" and t.text in "+-":
            self.take()
            v = self.power()
            return v if t.text == "+" else self._scale(v, -1)
        if t.kind == "num":
            self.take()
            return complex(float(Fraction(t.text)))
        if t.text == "(":
            self.take()
            v = self.expr()
            self.take(")")
            return v
        if t.kind == "name":
            self.take()
            if t.text in ("sin", "cos", "exp"):
                self.take("(")
                start = self.tok.pos
                arg = self.arg_expr()
                self.take(")")
                return self._function(t.text, arg, start)
            if t.text == "i":
                return 1j
            if t.text == "pi":
                return complex(math.pi)
            if t.text == "z":
                raise ParseError("z may only appear inside sin, cos or exp", t.pos)
            if t.text in self.basis.names:
                return complex(self.basis.float_value(self.basis.vector(**{t.text: 1})))
            raise ParseError(f"unknown name {t.text!r}", t.pos)
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.pos)

    # arguments: values are Syms
    def arg_expr(self):
        sign = 1
        if self.tok.kind == "op" and self.tok.text in "+-":
            sign = -1 if self.take().text == "-" else 1
        value = self.arg_product()
        if sign < 0:
            value = _sym_add({}, value, -1)
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.take().text
            value = _sym_add(value, self.arg_product(), 1 if op == "+" else -1)
        return value

    def arg_product(self):
        value = self.arg_primary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.take()
            rhs = self.arg_primary()
            if op.text == "*":
                value = _sym_mul(value, rhs, op.pos)
            else:
                if set(rhs) != {(0, 0, None)} or rhs[(0, 0, None)][1] != 0 or rhs[(0, 0, None)][0] == 0:
                    raise ParseError("only division by a nonzero real number is allowed here", op.pos)
                value = {k: (v[0] / rhs[(0, 0, None)][0], v[1] / rhs[(0, 0, None)][0]) for k, v in value.items()}
        return value

    def arg_primary(self):
        t = self.tok
        if t.kind == "op" and t.text in "+-":
            self.take()
            v = self.arg_primary()
            return v if t.text == "+" else _sym_add({}, v, -1)
        if t.kind == "num":
            self.take()
            return {(0, 0, None): _c(Fraction(t.text))}
        if t.text == "(":
            self.take()
            v = self.arg_expr()
            self.take(")")
            return v
        if t.kind == "name":
            self.take()
            if t.text == "z":
                return {(1, 0, None): _c(1)}
            if t.text == "pi":
                return {(0, 1, None): _c(1)}
            if t.text == "i":
                return {(0, 0, None): _c(0, 1)}
            if t.text in self.basis.names:
                return {(0, 0, None if t.text == "one" else t.text): _c(1)}
            raise ParseError(f"unknown name {t.text!r}", t.pos)
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.pos)

    # conversion
    def _const_value(self, sym, pos):
        total = 0j
        for (zd, pp, name), (re_, im_) in sym.items():
            v = complex(float(re_), float(im_)) * math.pi ** pp
            if name:
                v *= self.basis.float_value(self.basis.vector(**{name: 1}))
            total += v
        return total

    def _frequency(self, sym, pi_power, unit, pos):
        """Exact vector ``sym / (unit * pi^pi_power)`` for the z-part of an argument."""
        coeffs = {}
        for (zd, pp, name), (re_, im_) in sym.items():
            if (im_ if unit == 1 else re_) != 0:
                raise ParseError("frequency not real", pos)
            if pp != pi_power:
                raise BasisMismatch(f"frequency at position {pos} is not a rational combination of basis entries"
                                    f" times {'2*pi*i' if unit == 2j else 'pi'}")
            c = (re_, im_)
            if unit == 2j:
                c = (im_ / 2, -re_ / 2)
            key = name or "one"
            coeffs[key] = coeffs.get(key, Fraction(0)) + c[0]
        if "one" in coeffs and "one" not in self.basis.names:
            raise BasisMismatch("rational frequencies need a basis entry named 'one'")
        return self.basis.vector(**coeffs)

    def _function(self, name, arg, pos):
        zpart = {k: v for k, v in arg.items() if k[0] == 1}
        const = {k: v for k, v in arg.items() if k[0] == 0}
        c = self._const_value(const, pos)
        if name == "exp":
            if not zpart:
                return cmath.exp(c)
            omega = self._frequency(zpart, 1, 2j, pos)
            return make_expsum([(omega, cmath.exp(c))], self.basis)
        if not zpart:
            return (cmath.sin if name == "sin" else cmath.cos)(c)
        alpha_over_pi = self._frequency(zpart, 1, 1, pos)
        if self.basis.value(alpha_over_pi) < 0:
            # sin(-a z + b) = -sin(a z - b), cos(-a z + b) = cos(a z - b)
            s = (sine_expsum if name == "sin" else cosine_expsum)(self.basis, -alpha_over_pi, -c)
            return scale(s, -1) if name == "sin" else s
        if alpha_over_pi.is_zero():
            return (cmath.sin if name == "sin" else cmath.cos)(c)
        return (sine_expsum if name == "sin" else cosine_expsum)(self.basis, alpha_over_pi, c)

    # mixed arithmetic
    def _as_sum(self, v):
        return ExpSum.constant(self.basis, v) if isinstance(v, complex) else v

    def _add(self, a, b):
        if isinstance(a, complex) and isinstance(b, complex):
            return a + b
        return add(self._as_sum(a), self._as_sum(b))

    def _mul(self, a, b):
        if isinstance(a, complex) and isinstance(b, complex):
            return a * b
        if isinstance(a, complex):
            return scale(b, a)
        if isinstance(b, complex):
            return scale(a, b)
        return multiply(a, b)

    def _scale(self, v, c):
        return v * c if isinstance(v, complex) else scale(v, c)


def parse_expression(text: str, basis=None) -> ExpSum:
    """Parse ``text`` over ``basis`` (a FrequencyBasis, a ``{name: decimal}`` dict or ``name=decimal`` strings)."""
    if not isinstance(basis, FrequencyBasis):
        basis = build_basis(basis or {})
    return Parser(text, basis).parse()
