"""Recover ``C e^{iaz} prod sin^k(alpha z + beta)`` from an exponential sum.

Peeling works on the upper half-plane expansion of Q'/Q: the smallest
remaining atom ``h_g`` of a sine product must come from a factor with
``alpha = pi g``, whose full cotangent series is then subtracted.  The
zero-set decomposition into arithmetic progressions is an independent
cross-check.
"""

from __future__ import annotations

import cmath
import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .algebra import MP, ExpSum, FreqVector, evaluate
from .errors import (BadCutoff, InconsistentPrefactor, InsufficientSamples, NoProgressionStructure,
                     NotASineProduct, RequiresCertification)
from .forms import SineFactor, SineProductForm
from .logderiv import Atom, Halfplane, HExpansion, h_expansion
from .rootfinder import ZeroSet

IM_A_TOL = 1e-8


# -- peeling ----------------------------------------------------------------

def _subtract_factor(acc, basis, vec, beta, k, cutoff):
    c = basis.value(vec)
    alpha = float(MP.pi * c)
    n = 1
    while n * c <= cutoff:
        v = vec.scale(n)
        acc[v] = acc.get(v, 0j) + 2j * k * alpha * cmath.exp(2j * beta * n)
        n += 1
    return alpha


def _residual(upper, acc, h0):
    atoms = [Atom(v, float(upper.basis.value(v)), h) for v, h in acc.items() if h != 0]
    atoms.sort(key=lambda a: a.value)
    return HExpansion(upper.basis, upper.halfplane, h0, tuple(atoms), upper.cutoff)


def peel_sine_factors(upper: HExpansion, tol=1e-6, max_factors=None):
    """Greedy cotangent peeling; returns ``(factors, residual)``.

    Raises :class:`NotASineProduct` when the smallest remaining atom does not
    carry an integer multiplicity or atoms above ``tol`` survive
    ``max_factors`` steps.
    """
    if Halfplane(upper.halfplane) is not Halfplane.UPPER:
        raise ValueError("peeling needs the upper half-plane expansion")
    basis = upper.basis
    acc = upper.as_dict()
    h0 = upper.h0
    factors = []
    limit = max_factors if max_factors is not None else len(upper.atoms) + 1
    while True:
        live = [(basis.float_value(v), v, h) for v, h in acc.items() if abs(h) > tol]
        if not live:
            break
        if len(factors) >= limit:
            res = _residual(upper, acc, h0)
            raise NotASineProduct(f"atoms above {tol} remain after {limit} factors", factors, res)
        g, vec, h = min(live, key=lambda t: t[0])
        if 3 * g > upper.cutoff and not factors:
            raise BadCutoff(f"cutoff {upper.cutoff} holds fewer than 3 atoms of the progression at {g:.6g}")
        alpha = float(MP.pi * basis.value(vec))
        kf = abs(h) / (2 * alpha)
        k = round(kf)
        if k < 1 or abs(kf - k) > tol:
            res = _residual(upper, acc, h0)
            raise NotASineProduct(f"atom at gamma={g:.12g} has |h|/(2 alpha) = {kf:.9g}, not an integer",
                                  factors, res)
        beta = 0.5 * cmath.phase(h / (-2j * k * alpha)) % math.pi
        _subtract_factor(acc, basis, vec, beta, k, upper.cutoff)
        h0 += 1j * k * alpha
        factors.append(SineFactor(vec, beta, k))
    return factors, _residual(upper, acc, h0)


def recover_scale(Q: ExpSum, factors, upper: HExpansion = None):
    """``(C, a)`` given the peeled factors.

    ``a = h0+/i + sum k alpha`` must be real; ``upper`` defaults to the
    exact ``h0+ = 2 pi i omega-`` of Q.
    """
    basis = Q.basis
    h0 = upper.h0 if upper is not None else 2j * math.pi * float(Q.mp_freqs[0])
    a = h0 / 1j + sum(f.k * f.alpha(basis) for f in factors)
    if abs(a.imag) > IM_A_TOL:
        raise InconsistentPrefactor(f"prefactor exponent has imaginary part {a.imag:.3g}")
    a = a.real
    z0 = 1j
    denom = cmath.exp(1j * a * z0)
    for f in factors:
        denom *= cmath.sin(f.alpha(basis) * z0 + f.beta) ** f.k
    return evaluate(Q, z0) / denom, a


def exact_shift(Q: ExpSum, factors) -> FreqVector:
    """Exact vector of ``a / 2pi``: ``omega- + sum k alpha / 2pi``."""
    v = Q.vectors[0]
    for f in factors:
        v = v + f.alpha_over_pi.scale(Fraction(f.k, 2))
    return v


def factorize(Q: ExpSum, cutoff=50.0, tol=1e-6, max_factors=None, precision=None) -> SineProductForm:
    """Peel, recover ``(C, a)`` and return the canonical form."""
    upper = h_expansion(Q, Halfplane.UPPER, cutoff, precision=precision)
    factors, _ = peel_sine_factors(upper, tol, max_factors)
    C, a = recover_scale(Q, factors, upper)
    shift = exact_shift(Q, factors)
    form = SineProductForm(Q.basis, C, 0.0, tuple(factors), shift)
    if shift.is_zero():
        form = replace(form, a=0.0)
    return form.canonical()


# -- verification -------------------------------------------------------------

@dataclass(frozen=True)
class VerifyReport:
    max_residual: float
    used: int
    skipped: int

    def to_dict(self):
        return {"max_residual": self.max_residual, "samples_used": self.used, "samples_skipped": self.skipped}


def verify_form(Q: ExpSum, form: SineProductForm, samples=64, span=(-10.0, 10.0), min_distance=0.1) -> VerifyReport:
    """``max |Q / form - 1|`` on the lines Im z = -1, 0, 1; real points near zeros are skipped."""
    per = [samples - 2 * (samples // 3), samples // 3, samples // 3]
    pts = []
    for y, n in zip((0.0, 1.0, -1.0), per):
        xs = np.linspace(span[0], span[1], n + 2)[1:-1] if n else np.array([])
        pts.extend(xs + 1j * y)
    pts = np.array(pts, dtype=complex)
    zeros = np.array([x for x, _ in form.zeros_in(span[0] - 1, span[1] + 1)])
    keep = np.ones(len(pts), dtype=bool)
    if len(zeros):
        on_axis = pts.imag == 0
        near = np.min(np.abs(pts.real[:, None] - zeros[None, :]), axis=1) < min_distance
        keep &= ~(on_axis & near)
    used = int(keep.sum())
    if used < samples / 2:
        raise InsufficientSamples(f"only {used} of {samples} sample points are usable")
    z = pts[keep]
    r = Q.evaluate_array(z) / form.evaluate(z)
    return VerifyReport(float(np.max(np.abs(r - 1))), used, samples - used)


# -- arithmetic progressions --------------------------------------------------

@dataclass(frozen=True)
class Progression:
    period: float
    offset: float
    multiplicity: int
    members: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ProgressionSet:
    progressions: tuple
    exceptional_plus: tuple = ()
    exceptional_minus: tuple = ()
    window: tuple = ()

    def to_dict(self):
        return {"window": list(self.window),
                "progressions": [{"period": p.period, "offset": p.offset, "multiplicity": p.multiplicity,
                                  "members": p.members} for p in self.progressions],
                "exceptional_plus": list(self.exceptional_plus),
                "exceptional_minus": list(self.exceptional_minus)}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def multiset(self, lo, hi):
        """Zeros implied on [lo, hi] as sorted ``(location, multiplicity)`` pairs."""
        acc = Counter()
        for p in self.progressions:
            for n in range(math.ceil((lo - p.offset) / p.period), math.floor((hi - p.offset) / p.period) + 1):
                acc[round(p.offset + n * p.period, 9)] += p.multiplicity
        for x in self.exceptional_plus:
            if lo <= x <= hi:
                acc[round(x, 9)] += 1
        for x in self.exceptional_minus:
            if lo <= x <= hi:
                acc[round(x, 9)] -= 1
        return sorted((x, m) for x, m in acc.items() if m)


NEIGHBOURS = 12


def _candidate_period(x, tol):
    """Most frequent gap among near neighbours, its seed pairs, and its support."""
    gaps, pairs = [], []
    for d in range(1, min(NEIGHBOURS, len(x) - 1) + 1):
        gaps.append(x[d:] - x[:-d])
        pairs.append(np.stack([np.arange(len(x) - d), np.arange(d, len(x))], axis=1))
    gaps = np.concatenate(gaps)
    pairs = np.concatenate(pairs)
    keys = np.floor(gaps / (tol * max(1.0, float(gaps.max())))).astype(np.int64)
    counts = Counter(keys.tolist())
    # merge adjacent bins so a gap on a bin edge is not split
    score = {k: c + counts.get(k - 1, 0) + counts.get(k + 1, 0) for k, c in counts.items()}
    best = max(score.items(), key=lambda kv: (kv[1], -kv[0]))[0]
    sel = np.abs(keys - best) <= 1
    return float(np.median(gaps[sel])), pairs[sel], best


def _fit(x, n):
    A = np.stack([np.ones_like(n, dtype=float), n.astype(float)], axis=1)
    (b, p), *_ = np.linalg.lstsq(A, x, rcond=None)
    return b, p


def _grow(x, seed, p, tol):
    """Indices of ``x`` on the progression through ``x[seed]`` with period near ``p``."""
    b = x[seed]
    reach = 4
    span = x[-1] - x[0]
    while True:
        n = np.round((x - b) / p)
        ok = (np.abs(n) <= reach) & (np.abs(x - (b + n * p)) <= tol)
        idx = np.flatnonzero(ok)
        if len(idx) >= 2:
            b, p = _fit(x[idx], n[idx])
        if reach * p > span:
            return idx, b, p
        reach *= 2


MAX_SUBDIVISION = 6


def _expected(b, p, lo, hi):
    return math.floor((hi - b) / p) - math.ceil((lo - b) / p) + 1


def _finest(x, best, tol, lo, hi, min_members, max_holes=0.1):
    """Replace period p by the smallest p/k whose progression is essentially complete.

    The most frequent gap can be a multiple of the true period when another
    progression interleaves with it.
    """
    idx, b, p = best
    seed = int(idx[len(idx) // 2])
    for k in range(MAX_SUBDIVISION, 1, -1):
        sub = _grow(x, seed, p / k, tol)
        n = len(sub[0])
        if n >= min_members and n > len(idx) and n >= (1 - max_holes) * _expected(sub[1], sub[2], lo, hi):
            return sub
    return best


def decompose_zero_set(zeros: ZeroSet, gap_tol=1e-6, allow_exceptional=False, min_members=3) -> ProgressionSet:
    """Split a zero multiset into arithmetic progressions plus finite exceptional sets.

    Each pass picks the most frequent near-neighbour gap, the modal residue
    class for it, and extracts the members lying within ``gap_tol * max(1, p)``
    of the fitted progression; the progression's multiplicity is the minimum
    multiplicity of its members.  Predicted points with no zero are listed in
    ``exceptional_minus``.  With ``allow_exceptional=False`` any exceptional
    point raises :class:`NoProgressionStructure`.
    """
    if not zeros.certified:
        raise RequiresCertification("decomposition needs a certified ZeroSet")
    if zeros.total() < 20:
        raise InsufficientSamples(f"need at least 20 zeros, got {zeros.total()}")
    lo, hi = zeros.window
    x_all = zeros.locations
    rem = zeros.multiplicities.copy()
    found, minus = [], []
    while True:
        live = np.flatnonzero(rem > 0)
        if len(live) < min_members:
            break
        x = x_all[live]
        p0, seeds, _ = _candidate_period(x, gap_tol)
        tol = gap_tol * max(1.0, p0)
        best = None
        # modal residue class among the seeds
        res = np.mod(x[seeds[:, 0]], p0)
        keys = np.floor(res / tol).astype(np.int64)
        wrap = int(math.floor(p0 / tol))
        counts = Counter(np.mod(keys, wrap).tolist())
        score = {k: c + counts.get((k - 1) % wrap, 0) + counts.get((k + 1) % wrap, 0) for k, c in counts.items()}
        order = sorted(score, key=lambda k: -score[k])
        for key in order[:3]:
            near = np.flatnonzero(np.abs(((np.mod(keys, wrap) - key + wrap // 2) % wrap) - wrap // 2) <= 1)
            i, j = seeds[near[len(near) // 2]]
            idx, b, p = _grow(x, int(i), float(x[j] - x[i]), tol)
            if len(idx) >= min_members and (best is None or len(idx) > len(best[0])):
                best = (idx, b, p)
        if best is None:
            break
        idx, b, p = _finest(x, best, tol, lo, hi, min_members)
        tol = gap_tol * max(1.0, p)
        m = int(rem[live[idx]].min())
        rem[live[idx]] -= m
        offset = float(b % p)
        if p - offset <= tol:
            offset = 0.0
        found.append(Progression(float(p), offset, m, len(idx)))
        have = set(np.round((x[idx] - offset) / p).astype(int).tolist())
        for n in range(math.ceil((lo - offset) / p), math.floor((hi - offset) / p) + 1):
            if n not in have:
                minus.extend([offset + n * p] * m)

    plus = []
    for i in np.flatnonzero(rem > 0):
        plus.extend([float(x_all[i])] * int(rem[i]))
    found = _merge(found)
    out = ProgressionSet(tuple(found), tuple(plus), tuple(sorted(minus)), (lo, hi))
    if len(plus) + len(minus) > 0.2 * zeros.total() or not found:
        raise NoProgressionStructure(f"{len(plus)} unexplained zeros and {len(minus)} missing points "
                                     f"out of {zeros.total()}")
    if (plus or minus) and not allow_exceptional:
        err = NoProgressionStructure(f"exceptional points present: {len(plus)} extra, {len(minus)} missing")
        err.partial = out
        raise err
    return out


def _merge(progs, tol=1e-9):
    out = []
    for p in sorted(progs, key=lambda q: (q.period, q.offset)):
        if out and abs(out[-1].period - p.period) <= tol * p.period and abs(out[-1].offset - p.offset) <= tol * p.period:
            q = out[-1]
            out[-1] = Progression(q.period, q.offset, q.multiplicity + p.multiplicity, max(q.members, p.members))
        else:
            out.append(p)
    return out


@dataclass(frozen=True)
class ConsistencyReport:
    matched: tuple
    unmatched_factors: tuple
    unmatched_progressions: tuple

    @property
    def consistent(self):
        return not self.unmatched_factors and not self.unmatched_progressions

    def to_dict(self):
        return {"consistent": self.consistent,
                "matched": [{"alpha": a, "beta": b, "k": k, "period": p, "offset": o}
                            for (a, b, k), (p, o) in self.matched],
                "unmatched_factors": [{"alpha": a, "beta": b, "k": k} for a, b, k in self.unmatched_factors],
                "unmatched_progressions": [{"period": p, "offset": o, "multiplicity": m}
                                           for p, o, m in self.unmatched_progressions]}


def consistency_check(form: SineProductForm, progressions: ProgressionSet, tol=1e-6) -> ConsistencyReport:
    """Pair each factor with a progression of period ``pi / alpha`` and equal multiplicity."""
    pool = list(progressions.progressions)
    matched, lost = [], []
    for f in form.factors:
        alpha = f.alpha(form.basis)
        period = math.pi / alpha
        offset = (-f.beta / alpha) % period
        cands = [q for q in pool if abs(q.period - period) < tol and q.multiplicity == f.k]
        if not cands:
            lost.append((alpha, f.beta, f.k))
            continue

        def dist(q):
            d = abs(q.offset - offset) % period
            return min(d, period - d)

        q = min(cands, key=dist)
        pool.remove(q)
        matched.append(((alpha, f.beta, f.k), (q.period, q.offset)))
    return ConsistencyReport(tuple(matched), tuple(lost),
                             tuple((q.period, q.offset, q.multiplicity) for q in pool))


__all__ = ["SineProductForm", "SineFactor", "peel_sine_factors", "recover_scale", "exact_shift", "factorize",
           "verify_form", "VerifyReport", "Progression", "ProgressionSet", "decompose_zero_set",
           "consistency_check", "ConsistencyReport"]
