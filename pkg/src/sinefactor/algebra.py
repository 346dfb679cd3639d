"""Exponential sums with exact real frequencies.

An :class:`ExpSum` is a finite sum ``sum_w q_w exp(2 pi i w z)`` whose
frequencies ``w`` are exact rational vectors over a declared real basis
(:class:`FrequencyBasis`).  Equality of frequencies is therefore decidable,
which the log-derivative recursion and the semigroup enumeration rely on.
Coefficients are ordinary complex floats.
"""

from __future__ import annotations

import cmath
import json
import math
import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import mpmath
import numpy as np

from .errors import BasisMismatch, EmptySum, OverflowSignal

# Working precision for frequency values; basis entries carry >= 60 digits.
MP = mpmath.MPContext()
MP.dps = 80

CLOSE_VALUE_WARNING = mpmath.mpf("1e-40")
_LOG_FLOAT_MAX = 709.0
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def mp_string(x, digits=70):
    """Render an mpmath number (or anything MP accepts) as a decimal string."""
    return MP.nstr(MP.mpf(x), digits, strip_zeros=True, min_fixed=-MP.inf, max_fixed=MP.inf)


def parse_fraction(text) -> Fraction:
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    return Fraction(str(text).strip())


def fraction_string(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


@dataclass(frozen=True)
class FrequencyBasis:
    """Ordered finite list of positive reals spanning the frequencies.

    ``entries`` is a tuple of ``(name, decimal_string)`` pairs.  Linear
    independence over the rationals is the caller's claim and is never
    checked; see :func:`make_expsum` for the near-collision diagnostic.
    """

    entries: tuple
    independence_claimed: bool = True
    _values: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        entries = tuple((str(n), str(v)) for n, v in self.entries)
        object.__setattr__(self, "entries", entries)
        names = [n for n, _ in entries]
        if not entries:
            raise ValueError("basis must have at least one entry")
        for n in names:
            if not _NAME_RE.match(n):
                raise ValueError(f"basis name {n!r} is not an identifier")
        if len(set(names)) != len(names):
            raise ValueError("basis names must be unique")
        values = tuple(MP.mpf(v) for _, v in entries)
        if any(v <= 0 for v in values):
            raise ValueError("basis values must be positive")
        if len(set(values)) != len(values):
            raise ValueError("basis values must be pairwise distinct")
        object.__setattr__(self, "_values", values)

    @classmethod
    def from_values(cls, values: Mapping, independence_claimed=True, digits=70):
        """Build a basis from ``{name: number}``; numbers may be mpmath values or strings."""
        return cls(tuple((n, mp_string(v, digits)) for n, v in values.items()), independence_claimed)

    @classmethod
    def unit(cls):
        return cls((("one", "1"),))

    @property
    def names(self):
        return [n for n, _ in self.entries]

    @property
    def dim(self):
        return len(self.entries)

    @property
    def mp_values(self):
        return self._values

    def index(self, name):
        return self.names.index(name)

    def vector(self, **coeffs) -> "FreqVector":
        """``basis.vector(one=Fraction(1, 2), sqrt2=1)`` -> FreqVector."""
        out = [Fraction(0)] * self.dim
        for name, c in coeffs.items():
            if name not in self.names:
                raise BasisMismatch(f"no basis entry named {name!r}")
            out[self.index(name)] = parse_fraction(c)
        return FreqVector(tuple(out))

    def zero(self) -> "FreqVector":
        return FreqVector((Fraction(0),) * self.dim)

    def value(self, v: "FreqVector"):
        """Value of ``v`` in extended precision (an mpmath mpf)."""
        if len(v.coeffs) != self.dim:
            raise BasisMismatch(f"vector of length {len(v.coeffs)} over a basis of size {self.dim}")
        total = MP.mpf(0)
        for c, b in zip(v.coeffs, self._values):
            if c:
                total += MP.mpf(c.numerator) / c.denominator * b
        return total

    def float_value(self, v: "FreqVector") -> float:
        return float(self.value(v))

    def to_list(self):
        return [{"name": n, "value": v} for n, v in self.entries]


@dataclass(frozen=True)
class FreqVector:
    """Exact rational coordinates of a frequency over a :class:`FrequencyBasis`."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(parse_fraction(c) for c in self.coeffs))

    def _check(self, other):
        if len(other.coeffs) != len(self.coeffs):
            raise BasisMismatch("frequency vectors of different lengths")

    def __add__(self, other):
        self._check(other)
        return FreqVector(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other):
        self._check(other)
        return FreqVector(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self):
        return FreqVector(tuple(-a for a in self.coeffs))

    def scale(self, r) -> "FreqVector":
        r = parse_fraction(r)
        return FreqVector(tuple(a * r for a in self.coeffs))

    def is_zero(self):
        return not any(self.coeffs)

    def to_strings(self):
        return [fraction_string(c) for c in self.coeffs]

    @classmethod
    def from_strings(cls, items: Sequence[str]):
        return cls(tuple(parse_fraction(s) for s in items))

    def __repr__(self):
        return "FreqVector(" + ", ".join(str(c) for c in self.coeffs) + ")"


class ExpSum:
    """Finite exponential sum ``sum q_w exp(2 pi i w z)``; immutable.

    Terms are kept sorted by increasing frequency value.  The zero sum (no
    terms) is representable but rejected by the analysis routines.
    """

    __slots__ = ("basis", "_vectors", "_coeffs", "_freqs", "_mp_freqs")

    def __init__(self, basis: FrequencyBasis, terms: Mapping):
        self.basis = basis
        items = []
        for v, q in terms.items():
            if len(v.coeffs) != basis.dim:
                raise BasisMismatch(f"vector of length {len(v.coeffs)} over a basis of size {basis.dim}")
            q = complex(q)
            if q != 0:
                items.append((basis.value(v), v, q))
        items.sort(key=lambda t: t[0])
        self._mp_freqs = tuple(t[0] for t in items)
        self._vectors = tuple(t[1] for t in items)
        self._coeffs = np.array([t[2] for t in items], dtype=complex)
        self._freqs = np.array([float(t[0]) for t in items], dtype=float)
        self._coeffs.setflags(write=False)
        self._freqs.setflags(write=False)

    @classmethod
    def zero(cls, basis):
        return cls(basis, {})

    @classmethod
    def constant(cls, basis, q=1.0):
        return cls(basis, {basis.zero(): q})

    # -- accessors -------------------------------------------------------
    def __len__(self):
        return len(self._vectors)

    def is_zero(self):
        return len(self._vectors) == 0

    @property
    def vectors(self):
        return self._vectors

    @property
    def coeffs(self):
        return self._coeffs

    @property
    def freqs(self):
        return self._freqs

    @property
    def mp_freqs(self):
        return self._mp_freqs

    def terms(self):
        return dict(zip(self._vectors, (complex(q) for q in self._coeffs)))

    def coefficient(self, v: FreqVector) -> complex:
        try:
            return complex(self._coeffs[self._vectors.index(v)])
        except ValueError:
            return 0j

    def __repr__(self):
        parts = [f"({complex(q):.6g})e^(2πi·{f:.6g}z)" for q, f in zip(self._coeffs, self._freqs)]
        return "ExpSum(" + " + ".join(parts) + ")" if parts else "ExpSum(0)"

    # -- numerics --------------------------------------------------------
    def __call__(self, z):
        return evaluate(self, z)

    def _scaled(self, z, derivative=False):
        z = np.asarray(z, dtype=complex)
        expo = 2j * np.pi * np.multiply.outer(z, self._freqs)
        shift = expo.real.max(axis=-1, keepdims=True)
        w = np.exp(expo - shift)
        val = w @ self._coeffs
        if derivative:
            dval = w @ (2j * np.pi * self._freqs * self._coeffs)
            return val, dval, shift[..., 0]
        return val, shift[..., 0]

    def evaluate_array(self, z):
        """Vectorised evaluation (no overflow handling beyond numpy's inf)."""
        if self.is_zero():
            return np.zeros(np.shape(z), dtype=complex)
        val, shift = self._scaled(z)
        return val * np.exp(shift)

    def derivative_array(self, z):
        if self.is_zero():
            return np.zeros(np.shape(z), dtype=complex)
        _, dval, shift = self._scaled(z, derivative=True)
        return dval * np.exp(shift)

    def log_derivative_array(self, z):
        """Q'/Q together with |Q| relative to its own term scale, vectorised.

        Returns ``(ratio, rel_abs)`` where ``rel_abs = |Q(z)| / sum |q_w e^{2 pi i w z}|``;
        the scale factor cancels so no overflow occurs for large ``|Im z|``.
        """
        z = np.asarray(z, dtype=complex)
        expo = 2j * np.pi * np.multiply.outer(z, self._freqs)
        expo -= expo.real.max(axis=-1, keepdims=True)
        w = np.exp(expo)
        val = w @ self._coeffs
        dval = w @ (2j * np.pi * self._freqs * self._coeffs)
        scale = np.abs(w) @ np.abs(self._coeffs)
        return dval / val, np.abs(val) / scale

    def local_scale(self, z) -> float:
        """Sum of term magnitudes at ``z`` (the natural size of Q there)."""
        return float(np.sum(np.abs(self._coeffs) * np.exp(-2 * np.pi * self._freqs * complex(z).imag)))

    def is_close(self, other: "ExpSum", tol=1e-12) -> bool:
        if self.basis != other.basis or set(self._vectors) != set(other._vectors):
            return False
        return all(abs(self.coefficient(v) - other.coefficient(v)) <= tol * max(1.0, abs(q))
                   for v, q in zip(self._vectors, self._coeffs))

    # -- serialisation ---------------------------------------------------
    def to_dict(self):
        return {
            "basis": self.basis.to_list(),
            "terms": [{"freq": v.to_strings(), "re": float(q.real), "im": float(q.imag)}
                      for v, q in zip(self._vectors, self._coeffs)],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        basis = FrequencyBasis(tuple((e["name"], e["value"]) for e in d["basis"]),
                               d.get("independence_claimed", True))
        terms = [(FreqVector.from_strings(t["freq"]), complex(t["re"], t["im"])) for t in d["terms"]]
        return make_expsum(terms, basis, allow_empty=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def make_expsum(terms: Iterable, basis: FrequencyBasis, allow_empty=False) -> ExpSum:
    """Build an ExpSum from ``(FreqVector, coefficient)`` pairs.

    Duplicate frequencies are merged by adding coefficients and exact zeros
    are dropped.  An empty result raises :class:`EmptySum` unless
    ``allow_empty``.
    """
    merged: dict = {}
    for v, q in terms:
        if len(v.coeffs) != basis.dim:
            raise BasisMismatch(f"vector of length {len(v.coeffs)} over a basis of size {basis.dim}")
        merged[v] = merged.get(v, 0j) + complex(q)
    merged = {v: q for v, q in merged.items() if q != 0}
    if not merged and not allow_empty:
        raise EmptySum("no nonzero terms after merging")
    out = ExpSum(basis, merged)
    _warn_close_values(out)
    return out


def _warn_close_values(Q: ExpSum):
    vals = Q.mp_freqs
    for a, b, va, vb in zip(vals, vals[1:], Q.vectors, Q.vectors[1:]):
        if abs(b - a) < CLOSE_VALUE_WARNING:
            warnings.warn(f"distinct frequency vectors {va!r} and {vb!r} have values closer than 1e-40; "
                          "the declared basis may not be independent", RuntimeWarning, stacklevel=3)


def evaluate(Q: ExpSum, z) -> complex:
    """Q(z) with compensated summation and overflow-safe scaling.

    The dominant exponential is factored out before summing; if the result
    still does not fit in a float, :class:`OverflowSignal` carries log|Q|
    and arg Q.
    """
    if Q.is_zero():
        return 0j
    z = complex(z)
    expo_re = -2 * math.pi * Q.freqs * z.imag
    shift = float(expo_re.max())
    re_parts, im_parts = [], []
    for q, w, er in zip(Q.coeffs, Q.freqs, expo_re):
        t = complex(q) * cmath.exp(complex(er - shift, 2 * math.pi * w * z.real))
        re_parts.append(t.real)
        im_parts.append(t.imag)
    s = complex(math.fsum(re_parts), math.fsum(im_parts))
    if shift <= _LOG_FLOAT_MAX and abs(s) * math.exp(shift) < math.inf:
        return s * math.exp(shift)
    if s == 0:
        return 0j
    log_mag = math.log(abs(s)) + shift
    if log_mag > _LOG_FLOAT_MAX:
        raise OverflowSignal(log_mag, cmath.phase(s))
    return s * math.exp(shift)


def derivative(Q: ExpSum) -> ExpSum:
    """d/dz: q_w -> 2 pi i w q_w; the w = 0 term disappears."""
    twopi = 2 * MP.pi
    terms = {}
    for v, q, w in zip(Q.vectors, Q.coeffs, Q.mp_freqs):
        if not v.is_zero():
            terms[v] = complex(q) * 1j * float(twopi * w)
    return ExpSum(Q.basis, terms)


def multiply(Q: ExpSum, R: ExpSum) -> ExpSum:
    if Q.basis != R.basis:
        raise BasisMismatch("cannot multiply sums over different bases")
    merged: dict = {}
    for v, q in zip(Q.vectors, Q.coeffs):
        for u, r in zip(R.vectors, R.coeffs):
            s = v + u
            merged[s] = merged.get(s, 0j) + complex(q) * complex(r)
    return ExpSum(Q.basis, {v: q for v, q in merged.items() if q != 0})


def add(Q: ExpSum, R: ExpSum) -> ExpSum:
    if Q.basis != R.basis:
        raise BasisMismatch("cannot add sums over different bases")
    merged = Q.terms()
    for v, r in R.terms().items():
        merged[v] = merged.get(v, 0j) + r
    return ExpSum(Q.basis, {v: q for v, q in merged.items() if q != 0})


def scale(Q: ExpSum, c) -> ExpSum:
    return ExpSum(Q.basis, {v: complex(c) * q for v, q in Q.terms().items()})


def shift(Q: ExpSum, v: FreqVector) -> ExpSum:
    """Multiply by exp(2 pi i value(v) z)."""
    return ExpSum(Q.basis, {u + v: q for u, q in Q.terms().items()})


def power(Q: ExpSum, n: int) -> ExpSum:
    if n < 0:
        raise ValueError("negative powers are not exponential sums")
    out = ExpSum.constant(Q.basis, 1.0)
    for _ in range(n):
        out = multiply(out, Q)
    return out


@dataclass(frozen=True)
class SpectrumPoint:
    vector: FreqVector
    value: float
    mp_value: object = field(repr=False, compare=False, default=None)


def spectrum_extremes(Q: ExpSum):
    """``(omega_minus, omega_plus)`` as :class:`SpectrumPoint` pairs."""
    if Q.is_zero():
        raise EmptySum("spectrum of the zero sum is empty")
    lo = SpectrumPoint(Q.vectors[0], float(Q.mp_freqs[0]), Q.mp_freqs[0])
    hi = SpectrumPoint(Q.vectors[-1], float(Q.mp_freqs[-1]), Q.mp_freqs[-1])
    return lo, hi
