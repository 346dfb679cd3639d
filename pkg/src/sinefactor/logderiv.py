"""Half-plane Dirichlet expansions of Q'/Q and the linear-growth test.

In the upper half-plane ``Q'/Q = h0 + sum_{g > 0} h_g e^{2 pi i g z}`` and in
the lower half-plane the same with ``g < 0``.  The coefficients come from
matching terms in ``Q' = (Q'/Q) Q``: anchoring at the extreme frequency
``w0`` of Q (the minimum for the upper half-plane), every exponent of the
expansion lies in the additive semigroup generated by ``{w - w0}`` and

    h_g q_{w0} = 2 pi i g q_{w0+g} - sum_{0 < d < g} h_{g-d} q_{w0+d},

which is solved in increasing order of ``g``.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from .algebra import MP, ExpSum, FreqVector, FrequencyBasis, SpectrumPoint, mp_string, spectrum_extremes
from .errors import BadCutoff, BadFactor, CutoffExceeded, EmptySum, OverflowAbort
from .forms import SineProductForm

DROP_THRESHOLD = 1e-30
OVERFLOW_GUARD = 1e300


class Halfplane(str, Enum):
    UPPER = "upper"
    LOWER = "lower"


class Anchor(str, Enum):
    MIN = "min"
    MAX = "max"


@dataclass(frozen=True)
class Atom:
    vector: FreqVector
    value: float
    h: complex


@dataclass(frozen=True)
class HExpansion:
    """Truncated expansion of Q'/Q in one half-plane.

    ``atoms`` are sorted by increasing ``|value|``; upper-half-plane atoms
    lie in (0, cutoff], lower ones in [-cutoff, 0).
    """

    basis: FrequencyBasis
    halfplane: Halfplane
    h0: complex
    atoms: tuple
    cutoff: float

    def as_dict(self):
        return {a.vector: a.h for a in self.atoms}

    def values(self):
        return np.array([a.value for a in self.atoms])

    def coefficients(self):
        return np.array([a.h for a in self.atoms], dtype=complex)

    def total_mass(self):
        return float(np.sum(np.abs(self.coefficients()))) if self.atoms else 0.0

    def max_discrepancy(self, other: "HExpansion") -> float:
        """Largest |h - h'| over the union of both atom sets (missing atoms count as 0)."""
        a, b = self.as_dict(), other.as_dict()
        worst = abs(self.h0 - other.h0)
        for v in set(a) | set(b):
            worst = max(worst, abs(a.get(v, 0j) - b.get(v, 0j)))
        return worst

    def to_dict(self):
        return {
            "halfplane": self.halfplane.value,
            "cutoff": self.cutoff,
            "h0": {"re": self.h0.real, "im": self.h0.imag},
            "atoms": [{"gamma": a.vector.to_strings(),
                       "value": mp_string(self.basis.value(a.vector), 40),
                       "re": a.h.real, "im": a.h.imag} for a in self.atoms],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


# -- semigroup enumeration ------------------------------------------------

def _integerise(vectors):
    """Common denominator ``D`` and integer tuples ``D * v``."""
    den = 1
    for v in vectors:
        for c in v.coeffs:
            den = den * c.denominator // math.gcd(den, c.denominator)
    return den, [tuple(int(c * den) for c in v.coeffs) for v in vectors]


class _Lattice:
    """Linear integer codes ``sum t_i M^i`` for lattice points; injective on the enumerated box,
    and ``code(s - t) = code(s) - code(t)``."""

    def __init__(self, gens, cutoff, unit_values):
        self.dim = len(unit_values)
        gen_vals = [float(np.dot(g, unit_values)) for g in gens]
        steps = cutoff / min(gen_vals) + 1
        bound = int(steps * max(abs(c) for g in gens for c in g)) + 1
        self.M = 2 * bound + 1

    def encode(self, t):
        code = 0
        for c in reversed(t):
            code = code * self.M + c
        return code

    def decode(self, code):
        out = []
        half = self.M // 2
        for _ in range(self.dim):
            r = code % self.M
            if r > half:
                r -= self.M
            out.append(r)
            code = (code - r) // self.M
        return tuple(out)


def _enumerate(gens, unit_values, cutoff, exact_value):
    """Points of the semigroup generated by integer tuples ``gens`` with value in (0, cutoff].

    Returns ``(lattice, [(code, value), ...])`` in increasing value.  Values are
    accumulated in floats; ``exact_value`` (extended precision) settles the
    cutoff boundary.
    """
    unit = np.asarray(unit_values, dtype=float)
    gens = sorted(set(gens), key=lambda g: float(np.dot(g, unit)))
    lat = _Lattice(gens, cutoff, unit)
    slack = 1e-9 * max(1.0, cutoff)

    def inside(code, v):
        if v > cutoff + slack or v <= 0:
            return False
        if v < cutoff - slack:
            return True
        return exact_value(lat.decode(code)) <= cutoff

    gcodes = [(lat.encode(g), float(np.dot(g, unit))) for g in gens]
    heap = []
    seen = set()
    for c, v in gcodes:
        if inside(c, v):
            heapq.heappush(heap, (v, c))
            seen.add(c)
    out = []
    push, pop = heapq.heappush, heapq.heappop
    while heap:
        v, c = pop(heap)
        out.append((c, v))
        for gc, gv in gcodes:
            s = c + gc
            if s in seen:
                continue
            sv = v + gv
            if sv <= cutoff - slack or inside(s, sv):
                seen.add(s)
                push(heap, (sv, s))
    return lat, out


def difference_semigroup(spectrum: Sequence[FreqVector], anchor, cutoff, basis: FrequencyBasis):
    """Semigroup generated by the differences from the extreme frequency.

    With ``Anchor.MIN`` the generators are ``w - w_min`` and the result lists
    elements with value in (0, cutoff] in increasing order; with
    ``Anchor.MAX`` it is the mirror image, values in [-cutoff, 0) ordered by
    increasing magnitude.  Returns :class:`SpectrumPoint` items.
    """
    if not cutoff > 0:
        raise BadCutoff(f"cutoff must be positive, got {cutoff}")
    if not spectrum:
        raise EmptySum("empty spectrum")
    anchor = Anchor(anchor)
    sign = 1 if anchor is Anchor.MIN else -1
    vals = [basis.value(v) for v in spectrum]
    a = spectrum[int(np.argmin(vals) if sign > 0 else np.argmax(vals))]
    diffs = [(v - a) if sign > 0 else (a - v) for v in spectrum]
    diffs = [d for d in diffs if not d.is_zero()]
    if not diffs:
        return []
    den, gens = _integerise(diffs)
    unit = [float(b) / den for b in basis.mp_values]
    exact = lambda t: basis.value(FreqVector(tuple(Fraction(c, den) for c in t)))
    lat, elements = _enumerate(gens, unit, float(cutoff), exact)
    out = []
    for code, v in elements:
        vec = FreqVector(tuple(Fraction(sign * c, den) for c in lat.decode(code)))
        out.append(SpectrumPoint(vec, sign * v))
    return out


# -- expansions -----------------------------------------------------------

def h_expansion(Q: ExpSum, halfplane, cutoff, precision: Optional[int] = None,
                drop_threshold=DROP_THRESHOLD, overflow_guard=OVERFLOW_GUARD) -> HExpansion:
    """Expansion of Q'/Q in the given half-plane up to ``|gamma| <= cutoff``.

    ``precision`` (mantissa bits) switches the recursion to mpmath
    arithmetic; the default uses complex floats and aborts with
    :class:`OverflowAbort` if a coefficient exceeds ``overflow_guard``.
    """
    if Q.is_zero():
        raise EmptySum("cannot expand the log-derivative of the zero sum")
    if not cutoff > 0:
        raise BadCutoff(f"cutoff must be positive, got {cutoff}")
    halfplane = Halfplane(halfplane)
    sign = 1 if halfplane is Halfplane.UPPER else -1
    lo, hi = spectrum_extremes(Q)
    anchor = lo if sign > 0 else hi
    basis = Q.basis

    offsets = [(v - anchor.vector) if sign > 0 else (anchor.vector - v) for v in Q.vectors]
    den, ints = _integerise(offsets)
    unit = np.array([float(b) / den for b in basis.mp_values])
    exact = lambda t: basis.value(FreqVector(tuple(Fraction(c, den) for c in t)))
    zero = tuple([0] * basis.dim)
    coeff = {t: complex(q) for t, q in zip(ints, Q.coeffs)}
    q0 = coeff.pop(zero)
    h0 = 2j * float(MP.pi * anchor.mp_value)
    if not coeff:
        return HExpansion(basis, halfplane, h0, (), float(cutoff))

    lat, elements = _enumerate(list(coeff), unit, float(cutoff), exact)
    # (code, q_d, value of d) for every nonzero offset d
    terms = [(lat.encode(t), q, float(exact(t))) for t, q in coeff.items()]
    if precision is None:
        h = _recurse_float(elements, terms, q0, sign, overflow_guard)
    else:
        h = _recurse_mp(elements, terms, q0, sign, precision)
    if isinstance(h, tuple):
        code, mag = h
        bad = FreqVector(tuple(Fraction(sign * x, den) for x in lat.decode(code)))
        raise OverflowAbort(bad, mag)

    atoms = []
    for code, _ in elements:
        c = h[code]
        if abs(c) >= drop_threshold:
            t = lat.decode(code)
            atoms.append(Atom(FreqVector(tuple(Fraction(sign * x, den) for x in t)),
                              sign * float(np.dot(t, unit)), c))
    return HExpansion(basis, halfplane, h0, tuple(atoms), float(cutoff))


def _recurse_float(elements, terms, q0, sign, guard):
    twopi_i = 2j * math.pi * sign
    h = {}
    get = h.get
    inv_q0 = 1.0 / q0
    for code, _ in elements:
        acc = 0j
        for d, qd, dv in terms:
            if d == code:
                acc += twopi_i * dv * qd
            else:
                prev = get(code - d)
                if prev is not None:
                    acc -= prev * qd
        c = acc * inv_q0
        if not abs(c) <= guard:
            return code, abs(c)
        h[code] = c
    return h


def _recurse_mp(elements, terms, q0, sign, precision):
    ctx = mpmath.MPContext()
    ctx.prec = int(precision)
    pi2i = ctx.mpc(0, 2 * sign) * ctx.pi
    mterms = [(d, ctx.mpc(qd.real, qd.imag), ctx.mpf(dv)) for d, qd, dv in terms]
    mq0 = ctx.mpc(q0.real, q0.imag)
    h = {}
    for code, _ in elements:
        acc = ctx.mpc(0)
        for d, qd, dv in mterms:
            if d == code:
                acc += pi2i * dv * qd
            else:
                prev = h.get(code - d)
                if prev is not None:
                    acc -= prev * qd
        h[code] = acc / mq0
    return {c: complex(v) for c, v in h.items()}


def log_derivative_expansions(Q: ExpSum, cutoff, **kw):
    """``(upper, lower)`` expansions with a shared cutoff."""
    return h_expansion(Q, Halfplane.UPPER, cutoff, **kw), h_expansion(Q, Halfplane.LOWER, cutoff, **kw)


def sine_product_h_closed_form(form: SineProductForm, halfplane, cutoff,
                               drop_threshold=DROP_THRESHOLD) -> HExpansion:
    """Expansion of Q'/Q for a sine product, summed from cotangent series.

    Upper: ``alpha cot(alpha z + beta) = -i alpha - 2i alpha sum_n e^{2i beta n} e^{2i alpha n z}``,
    so each factor puts ``-2i k alpha e^{2i beta n}`` at ``gamma = n alpha / pi``.
    Lower: ``+i alpha + 2i alpha sum_n e^{-2i beta n} e^{-2i alpha n z}``.
    """
    if not cutoff > 0:
        raise BadCutoff(f"cutoff must be positive, got {cutoff}")
    halfplane = Halfplane(halfplane)
    sign = 1 if halfplane is Halfplane.UPPER else -1
    basis = form.basis
    h0 = 1j * form.a
    acc = {}
    for f in form.factors:
        c = basis.value(f.alpha_over_pi)
        if c <= 0:
            raise BadFactor(f"alpha must be positive, got {f.alpha_over_pi!r}")
        alpha = float(MP.pi * c)
        h0 += -sign * 1j * f.k * alpha
        n = 1
        while n * c <= cutoff:
            vec = f.alpha_over_pi.scale(sign * n)
            acc[vec] = acc.get(vec, 0j) + (-2j * sign) * f.k * alpha * complex(math.cos(2 * f.beta * n),
                                                                                 sign * math.sin(2 * f.beta * n))
            n += 1
    atoms = [Atom(v, float(basis.value(v)), h) for v, h in acc.items() if abs(h) >= drop_threshold]
    atoms.sort(key=lambda a: abs(a.value))
    return HExpansion(basis, halfplane, h0, tuple(atoms), float(cutoff))


# -- growth ---------------------------------------------------------------

class Verdict(str, Enum):
    LINEAR = "Linear"
    SUPERLINEAR = "Superlinear"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class GrowthReport:
    """``R(r) = sum_{|gamma| < r} |h_gamma|`` over both half-planes."""

    radii: tuple
    R_values: tuple
    slope_estimate: Optional[float]
    ratio_profile: tuple
    cutoff: float

    @property
    def flat(self):
        return self.slope_estimate is None

    def to_dict(self):
        return {"cutoff": self.cutoff, "slope_estimate": self.slope_estimate, "flat": self.flat,
                "rows": [{"r": r, "R": R, "R/r": q}
                         for r, R, q in zip(self.radii, self.R_values, self.ratio_profile)]}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "R", "R/r"])
        for r, R, q in zip(self.radii, self.R_values, self.ratio_profile):
            w.writerow([repr(r), repr(R), repr(q)])
        return buf.getvalue()


def default_radii(cutoff, decades=2.0, points=41):
    return list(np.geomspace(cutoff / 10 ** decades, cutoff, points))


def growth_profile(upper: HExpansion, lower: HExpansion, radii=None) -> GrowthReport:
    if upper.cutoff != lower.cutoff:
        raise CutoffExceeded("upper and lower expansions have different cutoffs")
    cutoff = upper.cutoff
    radii = default_radii(cutoff) if radii is None else [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    if radii[-1] > cutoff * (1 + 1e-12):
        raise CutoffExceeded(f"radius {radii[-1]} exceeds the expansion cutoff {cutoff}")
    mags = np.concatenate([np.abs(upper.coefficients()), np.abs(lower.coefficients())])
    where = np.abs(np.concatenate([upper.values(), lower.values()]))
    order = np.argsort(where)
    where, cum = where[order], np.concatenate([[0.0], np.cumsum(mags[order])])
    R = [float(cum[np.searchsorted(where, r, side="left")]) for r in radii]
    ratio = [Rv / r for Rv, r in zip(R, radii)]

    top = [(r, Rv) for r, Rv in zip(radii, R) if r >= radii[-1] / 10 * (1 - 1e-12) and Rv > 0]
    slope = None
    if len(top) >= 2:
        x = np.log([r for r, _ in top])
        y = np.log([Rv for _, Rv in top])
        slope = float(np.polyfit(x, y, 1)[0])
    return GrowthReport(tuple(radii), tuple(R), slope, tuple(ratio), cutoff)


@dataclass(frozen=True)
class MeyerResult:
    """Verdict plus the data it was based on; the rule is a heuristic."""

    verdict: Verdict
    report: GrowthReport
    reason: str
    heuristic: bool = True

    def to_dict(self):
        return {"verdict": self.verdict.value, "reason": self.reason, "heuristic": self.heuristic,
                "growth": self.report.to_dict()}


def meyer_verdict(report: GrowthReport, slope_tolerance=0.15, span_factor=5.0) -> MeyerResult:
    radii, ratio = report.radii, report.ratio_profile
    if len(radii) < 2 or math.log10(radii[-1] / radii[0]) < 2 - 1e-9:
        return MeyerResult(Verdict.INCONCLUSIVE, report, "radii span less than two decades")
    if report.flat:
        return MeyerResult(Verdict.LINEAR, report, "R(r) vanishes on the top decade (flat)")
    slope = report.slope_estimate
    top = [q for r, q in zip(radii, ratio) if r >= radii[-1] / 10 * (1 - 1e-12)]
    positive = [q for q in ratio if q > 0]
    top_spread = max(top) / min(top) if min(top) > 0 else math.inf
    increase = ratio[-1] / positive[0] if positive else 0.0
    if slope <= 1 + slope_tolerance and top_spread <= 2:
        return MeyerResult(Verdict.LINEAR, report,
                           f"slope {slope:.4g} <= {1 + slope_tolerance:g}, top-decade R/r spread {top_spread:.3g}")
    if slope >= 1 + slope_tolerance and increase >= span_factor:
        return MeyerResult(Verdict.SUPERLINEAR, report,
                           f"slope {slope:.4g} >= {1 + slope_tolerance:g}, R/r grew by {increase:.3g}")
    return MeyerResult(Verdict.INCONCLUSIVE, report,
                       f"slope {slope:.4g}, top-decade spread {top_spread:.3g}, R/r increase {increase:.3g}")
