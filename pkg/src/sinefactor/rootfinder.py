"""Argument-principle counting and location of real zeros.

Zeros are counted in rectangles ``[x0, x1] x [-eta, eta]`` by integrating
``Q'/Q`` along the boundary with an adaptive Gauss-Kronrod (7/15) rule that
runs on many segments at once.  A window is cut into short panels that share
their vertical edges, so the panel counts add up exactly.  Panels holding a
single zero are solved by Newton's method; the rest are bisected until the
zeros separate or the box is narrower than ``cluster_width``, in which case
the box's zeros are read off from contour moments.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import ExpSum, derivative, spectrum_extremes
from .errors import ContourNearZero, EmptySum, QuadratureFailure, UnresolvedCluster

# Gauss-Kronrod 7/15 nodes on [-1, 1] (nonnegative half, Kronrod order).
_XK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                0.207784955007898467600689403773245, 0.000000000000000000000000000000000])
_WK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
WK = np.concatenate([_WK[:-1], _WK[::-1]])
WG = np.zeros(15)
WG[[1, 3, 5, 13, 11, 9]] = np.concatenate([_WG[:3], _WG[:3]])
WG[7] = _WG[3]

PROBE_FLOOR = 1e-12
WINDING_TOL = 1e-6
CLUSTER_WIDTH = 1e-3
NEWTON_RESIDUAL = 1e-13
REAL_TOL = 1e-7
ETA_RETRIES = 5
NOISE_FACTOR = 1e-14


def _integrate(Q: ExpSum, a, b, tol, moment=0, center=0j, max_rounds=64, floor=PROBE_FLOOR):
    """Integrals of ``(z - center)^moment Q'(z)/Q(z)`` over segments ``a[i] -> b[i]``.

    Returns ``(values, min_rel, max_rel)`` where ``min_rel/max_rel`` bound
    ``|Q|`` relative to its term scale over every quadrature node of each
    segment.  ``tol`` is an absolute error target per unit length.
    """
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    n = len(a)
    out = np.zeros(n, dtype=complex)
    lo_rel = np.full(n, np.inf)
    hi_rel = np.zeros(n)
    owner = np.arange(n)
    sa, sb = a, b
    min_len = 1e-14 * max(1.0, float(np.max(np.abs(a))) if n else 1.0)
    for _ in range(max_rounds):
        if not len(sa):
            return out, lo_rel, hi_rel
        mid = (sa + sb) / 2
        half = (sb - sa) / 2
        z = mid[:, None] + half[:, None] * NODES[None, :]
        f, rel = Q.log_derivative_array(z)
        if moment:
            f = f * (z - center) ** moment
        K = (f @ WK) * half
        G = (f @ WG) * half
        err = np.abs(K - G)
        np.minimum.at(lo_rel, owner, rel.min(axis=1))
        np.maximum.at(hi_rel, owner, rel.max(axis=1))
        length = np.abs(sb - sa)
        # rounding in Q leaves relative noise ~ eps / rel in Q'/Q; no refinement can beat it
        noise = NOISE_FACTOR * length * np.max(np.abs(f) / np.maximum(rel, 1e-300), axis=1)
        ok = (err <= tol * np.maximum(length, 1e-300)) | (err < 1e-15) | (err <= noise) | (length < min_len)
        np.add.at(out, owner[ok], K[ok])
        bad = ~ok
        # a segment that sits on a zero never converges; stop early so the caller sees it
        if np.any(lo_rel[owner[bad]] < floor * hi_rel[owner[bad]]):
            hopeless = bad & (lo_rel[owner] < floor * hi_rel[owner])
            np.add.at(out, owner[hopeless], K[hopeless])
            bad &= ~hopeless
        m = mid[bad]
        sa = np.concatenate([sa[bad], m])
        sb = np.concatenate([m, sb[bad]])
        owner = np.concatenate([owner[bad], owner[bad]])
    raise QuadratureFailure(f"adaptive quadrature did not converge on {len(sa)} segments")


def _edge_integrals(Q, a, b, tol, moment=0, center=0j, max_piece=1.0):
    """Integrate over edges ``a[i] -> b[i]``, each pre-split into pieces no longer than ``max_piece``."""
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    k = np.maximum(1, np.ceil(np.abs(b - a) / max_piece).astype(int))
    owner = np.repeat(np.arange(len(a)), k)
    first = np.repeat(np.cumsum(k) - k, k)
    j = np.arange(len(owner)) - first
    step = ((b - a) / k)[owner]
    starts = a[owner] + j * step
    vals, lo, hi = _integrate(Q, starts, starts + step, tol, moment, center)
    total = np.zeros(len(a), dtype=complex)
    np.add.at(total, owner, vals)
    lo_e = np.full(len(a), np.inf)
    hi_e = np.zeros(len(a))
    np.minimum.at(lo_e, owner, lo)
    np.maximum.at(hi_e, owner, hi)
    return total, lo_e, hi_e


def _check_floor(a, b, lo, hi, floor):
    scale = float(np.max(hi)) if len(hi) else 1.0
    bad = np.flatnonzero(lo < floor * scale)
    if len(bad):
        i = bad[0]
        exc = ContourNearZero((complex(a[i]), complex(b[i])), float(lo[i] / scale))
        exc.all_edges = [(complex(a[i]), complex(b[i])) for i in bad]
        raise exc


def count_zeros_rect(Q: ExpSum, rect, tol=WINDING_TOL, floor=PROBE_FLOOR) -> int:
    """Number of zeros (with multiplicity) inside ``rect = (x0, x1, y0, y1)``.

    The winding number ``(1/2 pi i) \\oint Q'/Q dz`` is computed edge by edge
    and must land within 0.25 of an integer; otherwise the tolerance is
    tightened, and :class:`QuadratureFailure` is raised if that does not help.
    """
    if Q.is_zero():
        raise EmptySum("cannot count zeros of the zero sum")
    x0, x1, y0, y1 = map(float, rect)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("degenerate rectangle")
    c = np.array([complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)])
    a, b = c, np.roll(c, -1)
    perimeter = 2 * ((x1 - x0) + (y1 - y0))
    t = tol
    for _ in range(4):
        vals, lo, hi = _edge_integrals(Q, a, b, 2 * math.pi * t / perimeter)
        _check_floor(a, b, lo, hi, floor)
        w = vals.sum() / (2j * math.pi)
        k = round(w.real)
        if abs(w - k) < 0.25:
            return int(k)
        t /= 100
    raise QuadratureFailure(f"winding number {w} is not near an integer")


def _count_panels(Q: ExpSum, xs, eta, tol=WINDING_TOL, floor=PROBE_FLOOR):
    """Counts for consecutive boxes ``[xs[k], xs[k+1]] x [-eta, eta]``, sharing edges."""
    xs = np.asarray(xs, dtype=float)
    n = len(xs) - 1
    a = np.concatenate([xs[:-1] - 1j * eta, xs[:-1] + 1j * eta, xs - 1j * eta])
    b = np.concatenate([xs[1:] - 1j * eta, xs[1:] + 1j * eta, xs + 1j * eta])
    per_len = 2 * math.pi * tol / (2 * (float(xs[-1] - xs[0]) / max(n, 1) + 2 * eta))
    vals, lo, hi = _edge_integrals(Q, a, b, per_len, max_piece=max(0.5, eta))
    _check_floor(a, b, lo, hi, floor)
    B, T, V = vals[:n], vals[n:2 * n], vals[2 * n:]
    w = (B + V[1:] - T - V[:-1]) / (2j * math.pi)
    k = np.rint(w.real)
    if np.any(np.abs(w - k) >= 0.25):
        if tol > 1e-12:
            return _count_panels(Q, xs, eta, tol / 100, floor)
        raise QuadratureFailure("panel winding numbers are not near integers")
    return k.astype(int)


def _count_split(Q: ExpSum, lo, mid, hi, eta, tol=WINDING_TOL, floor=PROBE_FLOOR):
    """Counts of the left and right halves of many independent boxes at once.

    Edges touching a zero are reported per box (``None`` count) instead of raising.
    """
    lo, mid, hi = (np.asarray(v, dtype=float) for v in (lo, mid, hi))
    n = len(lo)
    xs = np.stack([lo, mid, hi], axis=1)
    a = np.concatenate([(xs[:, :2] - 1j * eta).ravel(), (xs[:, :2] + 1j * eta).ravel(), (xs - 1j * eta).ravel()])
    b = np.concatenate([(xs[:, 1:] - 1j * eta).ravel(), (xs[:, 1:] + 1j * eta).ravel(), (xs + 1j * eta).ravel()])
    width = float(np.max(hi - lo)) if n else 1.0
    per_len = 2 * math.pi * tol / (2 * (width + 2 * eta))
    vals, lo_rel, hi_rel = _edge_integrals(Q, a, b, per_len, max_piece=max(0.5, eta))
    B = vals[:2 * n].reshape(n, 2)
    T = vals[2 * n:4 * n].reshape(n, 2)
    V = vals[4 * n:].reshape(n, 3)
    w = (B + V[:, 1:] - T - V[:, :-1]) / (2j * math.pi)
    k = np.rint(w.real)
    scale = float(np.max(hi_rel)) if len(hi_rel) else 1.0
    touch = lo_rel < floor * scale
    bad = (touch[:2 * n].reshape(n, 2).any(axis=1) | touch[2 * n:4 * n].reshape(n, 2).any(axis=1)
           | touch[4 * n:].reshape(n, 3).any(axis=1) | np.any(np.abs(w - k) >= 0.25, axis=1))
    return k.astype(int), bad


# -- zero location ------------------------------------------------------------

@dataclass(frozen=True)
class ZeroSet:
    """Real zeros with multiplicities found in ``window`` (contour half-height ``eta``)."""

    window: tuple
    eta: float
    zeros: tuple
    certified: bool = False
    nonreal: tuple = field(default=(), compare=False)

    @property
    def locations(self):
        return np.array([x for x, _ in self.zeros], dtype=float)

    @property
    def multiplicities(self):
        return np.array([m for _, m in self.zeros], dtype=int)

    def total(self) -> int:
        return int(sum(m for _, m in self.zeros))

    def restrict(self, lo, hi) -> "ZeroSet":
        return ZeroSet((lo, hi), self.eta, tuple((x, m) for x, m in self.zeros if lo <= x <= hi),
                       self.certified)

    def unit_strip_counts(self):
        """Counts on consecutive half-open unit strips starting at the window's left end."""
        lo, hi = self.window
        n = int(math.floor(hi - lo))
        counts = np.zeros(n, dtype=int)
        for x, m in self.zeros:
            j = int(math.floor(x - lo))
            if 0 <= j < n:
                counts[j] += m
        return counts

    def to_dict(self):
        return {"window": list(self.window), "eta": self.eta, "certified": self.certified,
                "zeros": [{"location": x, "multiplicity": m} for x, m in self.zeros]}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["location", "multiplicity"])
        for x, m in self.zeros:
            w.writerow([repr(x), m])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["window"]), float(d["eta"]),
                   tuple((float(z["location"]), int(z["multiplicity"])) for z in d["zeros"]),
                   bool(d.get("certified", False)))


def _newton_distance(Q: ExpSum, x):
    """|Q/Q'| on the real axis: a cheap estimate of the distance to the nearest zero."""
    x = np.asarray(x, dtype=complex)
    return np.abs(Q.evaluate_array(x)) / np.maximum(np.abs(Q.derivative_array(x)), 1e-300)


def _residual_floor(Q: ExpSum, z, residual):
    """``residual * local scale``, widened by the rounding in the phases ``2 pi w Re z``."""
    scale = np.sum(np.abs(Q.coeffs)[None, :] * np.exp(-2 * np.pi * np.outer(z.imag, Q.freqs)), axis=1)
    phase = 1.0 + 2 * np.pi * float(np.max(np.abs(Q.freqs))) * np.abs(z.real)
    return residual * scale * phase


def _newton(Q: ExpSum, z, lo, hi, eta, residual=NEWTON_RESIDUAL, iters=80):
    """Batched Newton from starts ``z``; returns (roots, converged-inside-box mask).

    A root is accepted when it lies in its box and either ``|Q|`` is below the
    residual floor or the Newton step has shrunk to rounding level.
    """
    z = np.array(z, dtype=complex)
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    cap = (hi - lo) / 2
    done = np.zeros(len(z), dtype=bool)
    settled = np.zeros(len(z), dtype=bool)
    for _ in range(iters):
        act = np.flatnonzero(~done)
        if not len(act):
            break
        za = z[act]
        f = Q.evaluate_array(za)
        df = Q.derivative_array(za)
        step = f / np.where(df == 0, 1e-300, df)
        big = np.abs(step) > cap[act]
        step[big] *= cap[act][big] / np.abs(step[big])
        z[act] = za - step
        tiny = np.abs(step) <= 4e-16 * np.maximum(1.0, np.abs(za))
        small_f = np.abs(Q.evaluate_array(z[act])) <= _residual_floor(Q, z[act], residual) * 1e-2
        settled[act[tiny]] = True
        done[act[tiny | small_f]] = True
    inside = (z.real >= lo) & (z.real <= hi) & (np.abs(z.imag) <= eta)
    small = np.abs(Q.evaluate_array(z)) <= _residual_floor(Q, z, residual)
    return z, inside & (small | settled)


def _moment_roots(Q, a, b, eta, m, tol):
    """Zeros in a box from the power sums ``(1/2 pi i) \\oint (z-c)^k Q'/Q``, k = 1..m."""
    c = complex((a + b) / 2, 0.0)
    corners = np.array([complex(a, -eta), complex(b, -eta), complex(b, eta), complex(a, eta)])
    p = []
    for k in range(1, m + 1):
        vals, _, _ = _edge_integrals(Q, corners, np.roll(corners, -1), tol * 1e-4, moment=k, center=c,
                                     max_piece=0.25)
        p.append(vals.sum() / (2j * math.pi))
    # Newton's identities: power sums -> elementary symmetric polynomials
    e = [1.0 + 0j]
    for k in range(1, m + 1):
        s = sum((-1) ** (i - 1) * e[k - i] * p[i - 1] for i in range(1, k + 1))
        e.append(s / k)
    poly = [(-1) ** k * e[k] for k in range(m + 1)]
    return c + np.roots(poly) if m > 0 else np.array([]), c + p[0] / m


class _Locator:
    """Bisection of boxes, one level at a time so each level is a single batched quadrature."""

    def __init__(self, Q, eta, cluster_width, residual, tol):
        self.Q = Q
        self.eta = eta
        self.cluster_width = cluster_width
        self.residual = residual
        self.tol = tol
        self.found = []      # (z, multiplicity)
        self._derivs = {}

    def derivative(self, k):
        if k not in self._derivs:
            D = self.Q
            for _ in range(k):
                D = derivative(D)
            self._derivs[k] = D
        return self._derivs[k]

    def run(self, boxes, newton_first=True):
        """``boxes`` is a list of ``(lo, hi, count)``."""
        boxes = [bx for bx in boxes if bx[2] > 0]
        depth = 0
        while boxes:
            depth += 1
            if newton_first:
                boxes = self._newton_singles(boxes)
            newton_first = True
            split = []
            for a, b, c in boxes:
                if b - a < self.cluster_width and c > 1:
                    self.cluster(a, b, c)
                elif b - a < 1e-13 * max(1.0, abs(a)) or depth > 200:
                    raise UnresolvedCluster((a, b), c)
                else:
                    split.append((a, b, c))
            boxes = self._split(split)

    def _newton_singles(self, boxes):
        single = [bx for bx in boxes if bx[2] == 1]
        rest = [bx for bx in boxes if bx[2] != 1]
        if not single:
            return rest
        a = np.array([bx[0] for bx in single])
        b = np.array([bx[1] for bx in single])
        z, ok = _newton(self.Q, (a + b) / 2 + 0j, a, b, self.eta, self.residual)
        self.found.extend((zz, 1) for zz in z[ok])
        return rest + [bx for bx, good in zip(single, ok) if not good]

    def _split(self, boxes):
        if not boxes:
            return []
        lo = np.array([bx[0] for bx in boxes])
        hi = np.array([bx[1] for bx in boxes])
        cnt = np.array([bx[2] for bx in boxes])
        fracs = np.array([0.5, 0.45, 0.55, 0.4, 0.6, 0.35, 0.65])
        cands = lo[:, None] + (hi - lo)[:, None] * fracs[None, :]
        dist = _newton_distance(self.Q, cands.ravel()).reshape(cands.shape)
        dist[:, 0] = np.where(dist[:, 0] > 0.05 * (hi - lo), np.inf, dist[:, 0])
        order = np.argsort(-dist, axis=1, kind="stable")
        out = []
        todo = np.arange(len(boxes))
        for attempt in range(len(fracs)):
            if not len(todo):
                break
            mid = cands[todo, order[todo, attempt]]
            k, bad = _count_split(self.Q, lo[todo], mid, hi[todo], self.eta, self.tol)
            bad |= k.sum(axis=1) != cnt[todo]
            for i, m, (l, r) in zip(todo[~bad], mid[~bad], k[~bad]):
                out.append((lo[i], m, int(l)))
                out.append((m, hi[i], int(r)))
            todo = todo[bad]
        if len(todo):
            i = todo[0]
            raise UnresolvedCluster((float(lo[i]), float(hi[i])), int(cnt[i]))
        return [bx for bx in out if bx[2] > 0]

    def cluster(self, a, b, count):
        roots, centroid = _moment_roots(self.Q, a, b, self.eta, count, self.tol)
        spread = float(np.max(np.abs(roots - centroid))) if len(roots) else 0.0
        if spread < self.cluster_width:
            z = centroid
            D = self.derivative(count - 1)
            zz, ok = _newton(D, [z], [a - self.cluster_width], [b + self.cluster_width], self.eta, self.residual)
            if ok[0] and abs(zz[0] - z) < self.cluster_width:
                z = zz[0]
            self.found.append((z, count))
            return
        for r in roots:
            zz, ok = _newton(self.Q, [r], [a], [b], self.eta, self.residual)
            self.found.append((zz[0] if ok[0] else r, 1))


def _nudge_end(Q, x, outward, width):
    """Move a window end off any nearby zero so the vertical edge stays clear."""
    for _ in range(20):
        if _newton_distance(Q, [x])[0] > 0.25 * width:
            return x
        x += outward * 0.25 * width
    return x


def _panel_edges(Q, lo, hi, width):
    n = max(1, int(math.ceil((hi - lo) / width)))
    xs = np.linspace(lo, hi, n + 1)
    w = (hi - lo) / n
    if n > 1:
        inner = xs[1:-1]
        d = _newton_distance(Q, inner)
        near = d < 0.1 * w
        if near.any():
            alt = np.stack([inner[near] - 0.3 * w, inner[near] + 0.3 * w])
            da = np.stack([_newton_distance(Q, alt[0]), _newton_distance(Q, alt[1])])
            inner[near] = np.where(da[0] > da[1], alt[0], alt[1])
            xs[1:-1] = inner
    return xs


def _robust_counts(Q, xs, eta, tol, width, retries=ETA_RETRIES):
    """Panel counts, moving any vertical edge or the contour height that touches a zero."""
    xs = np.array(xs, dtype=float)
    e = eta
    for attempt in range(2 * retries + 1):
        try:
            return _count_panels(Q, xs, e, tol), xs, e
        except ContourNearZero as exc:
            last = exc
            horizontal = False
            for a, b in exc.all_edges:
                if a.real != b.real:
                    horizontal = True
                    continue
                k = int(np.argmin(np.abs(xs - a.real)))
                if k == 0:
                    xs[0] -= 0.05 * width
                elif k == len(xs) - 1:
                    xs[-1] += 0.05 * width
                elif attempt % 2:
                    xs[k] += 0.3 * (xs[k + 1] - xs[k])
                else:
                    xs[k] -= 0.3 * (xs[k] - xs[k - 1])
            if horizontal:
                n = attempt // 2 + 1
                e = eta * (1 + 0.1 * ((n + 1) // 2) * (-1) ** n)
    raise last


def _density(Q: ExpSum) -> float:
    lo, hi = spectrum_extremes(Q)
    return hi.value - lo.value


def locate_real_zeros(Q: ExpSum, interval, eta=1.0, cluster_width=CLUSTER_WIDTH,
                      residual=NEWTON_RESIDUAL, tol=WINDING_TOL, real_tol=REAL_TOL) -> ZeroSet:
    """Zeros of Q on the real segment ``interval`` with multiplicities.

    The window ends are nudged outward if they sit on a zero; the returned
    ZeroSet carries the window actually used.  Zeros found off the real axis
    (|Im z| > real_tol) are listed in ``nonreal`` and not in ``zeros``.
    """
    if Q.is_zero():
        raise EmptySum("cannot locate zeros of the zero sum")
    lo, hi = map(float, interval)
    if not hi > lo:
        raise ValueError("empty interval")
    density = _density(Q)
    width = min(0.5, 0.5 / density) if density > 0 else 1.0
    lo = _nudge_end(Q, lo, -1, min(width, cluster_width * 4))
    hi = _nudge_end(Q, hi, +1, min(width, cluster_width * 4))
    xs = _panel_edges(Q, lo, hi, width)

    counts, xs, eta_used = _robust_counts(Q, xs, eta, tol, width)

    loc = _Locator(Q, eta_used, cluster_width, residual, tol)
    loc.run([(float(xs[k]), float(xs[k + 1]), int(c)) for k, c in enumerate(counts)])

    real, nonreal = [], []
    for z, m in sorted(loc.found, key=lambda t: t[0].real):
        (real if abs(z.imag) <= real_tol else nonreal).append((float(z.real) if abs(z.imag) <= real_tol else z, m))
    return ZeroSet((float(xs[0]), float(xs[-1])), eta_used, tuple(real), False, tuple(nonreal))


@dataclass(frozen=True)
class CertificationReport:
    certified: bool
    rect_count: int
    real_count: int
    unit_strip_max: int
    zeros: ZeroSet = field(repr=False)

    def to_dict(self):
        return {"certified": self.certified, "rect_count": self.rect_count, "real_count": self.real_count,
                "unit_strip_max": self.unit_strip_max, "window": list(self.zeros.window), "eta": self.zeros.eta}


def certify_real_rooted(Q: ExpSum, interval, eta=1.0, **kw) -> CertificationReport:
    """Compare one argument-principle count over the whole strip with the located real zeros."""
    zs = locate_real_zeros(Q, interval, eta, **kw)
    lo, hi = zs.window
    rect = count_zeros_rect(Q, (lo, hi, -zs.eta, zs.eta))
    real = zs.total()
    certified = rect == real
    zs = ZeroSet(zs.window, zs.eta, zs.zeros, certified, zs.nonreal)
    strips = zs.unit_strip_counts()
    return CertificationReport(certified, rect, real, int(strips.max()) if len(strips) else 0, zs)
