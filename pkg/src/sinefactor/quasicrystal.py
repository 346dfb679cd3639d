"""Fourier atoms of the zero-counting measure and an empirical cross-check.

With the convention ``phi^(x) = int phi(t) e^{-2 pi i x t} dt`` the Fourier
transform of ``sum_lambda a(lambda) delta_lambda`` for a real-rooted Q is
atomic: mass ``i h_g / 2pi`` at every upper atom ``g > 0``, ``-i h_g / 2pi``
at every lower atom ``g < 0`` and ``i (h0+ - h0-) / 2pi`` at the origin.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .algebra import ExpSum, FreqVector, FrequencyBasis, mp_string
from .errors import CutoffMismatch, RequiresCertification
from .logderiv import Halfplane, HExpansion, log_derivative_expansions
from .rootfinder import ZeroSet, certify_real_rooted


@dataclass(frozen=True)
class MeasureAtom:
    vector: FreqVector
    value: float
    mass: complex


@dataclass(frozen=True)
class AtomicMeasure:
    """Truncated atomic measure; ``atoms`` sorted by value, origin included when nonzero."""

    basis: FrequencyBasis
    atoms: tuple
    cutoff: float

    def as_dict(self):
        return {a.vector: a.mass for a in self.atoms}

    def mass(self, vector: FreqVector) -> complex:
        return self.as_dict().get(vector, 0j)

    def mass_at_zero(self) -> complex:
        return self.mass(self.basis.zero())

    def values(self):
        return np.array([a.value for a in self.atoms])

    def masses(self):
        return np.array([a.mass for a in self.atoms], dtype=complex)

    def hermitian_defect(self) -> float:
        """``max |mass(-g) - conj(mass(g))|`` over the atom set."""
        d = self.as_dict()
        worst = 0.0
        for v, m in d.items():
            worst = max(worst, abs(d.get(-v, 0j) - m.conjugate()))
        return worst

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        if self.cutoff != other.cutoff:
            raise CutoffMismatch(f"cutoffs differ: {self.cutoff} vs {other.cutoff}")
        acc = self.as_dict()
        for a in other.atoms:
            acc[a.vector] = acc.get(a.vector, 0j) + a.mass
        return _measure(self.basis, acc, self.cutoff)

    def to_dict(self):
        return {"cutoff": self.cutoff,
                "atoms": [{"gamma": a.vector.to_strings(),
                           "value": mp_string(self.basis.value(a.vector), 40),
                           "re": a.mass.real, "im": a.mass.imag} for a in self.atoms]}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def plot_data(self) -> str:
        """CSV of ``(gamma, |mass|)`` pairs."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gamma", "abs_mass"])
        for a in self.atoms:
            w.writerow([repr(a.value), repr(abs(a.mass))])
        return buf.getvalue()


def _measure(basis, acc, cutoff):
    atoms = [MeasureAtom(v, basis.float_value(v), m) for v, m in acc.items() if m != 0]
    atoms.sort(key=lambda a: a.value)
    return AtomicMeasure(basis, tuple(atoms), float(cutoff))


def fourier_atoms(upper: HExpansion, lower: HExpansion) -> AtomicMeasure:
    if Halfplane(upper.halfplane) is not Halfplane.UPPER or Halfplane(lower.halfplane) is not Halfplane.LOWER:
        raise ValueError("expected (upper, lower) expansions")
    if upper.cutoff != lower.cutoff:
        raise CutoffMismatch(f"cutoffs differ: {upper.cutoff} vs {lower.cutoff}")
    acc = {}
    for a in upper.atoms:
        acc[a.vector] = 1j * a.h / (2 * math.pi)
    for a in lower.atoms:
        acc[a.vector] = -1j * a.h / (2 * math.pi)
    zero = 1j * (upper.h0 - lower.h0) / (2 * math.pi)
    if zero != 0:
        acc[upper.basis.zero()] = zero
    return _measure(upper.basis, acc, upper.cutoff)


# -- empirical route --------------------------------------------------------

class Weight(str, Enum):
    FEJER = "Fejer"
    GAUSSIAN = "Gaussian"


_GAUSS_WIDTH = 8.0


def _weight(kind: Weight, t):
    t = np.abs(t)
    if kind is Weight.FEJER:
        w = 1.0 - t
    else:
        w = np.exp(-_GAUSS_WIDTH * t * t)
    return np.where(t <= 1.0, w, 0.0)


def _weight_integral(kind: Weight) -> float:
    if kind is Weight.FEJER:
        return 1.0
    return math.sqrt(math.pi / _GAUSS_WIDTH) * math.erf(math.sqrt(_GAUSS_WIDTH))


def empirical_atoms(zeros: ZeroSet, gammas, L=None, weight=Weight.FEJER):
    """Windowed estimates ``(1 / (L int w)) sum a(l) w(l/L) e^{-2 pi i g l}`` for each ``g``.

    ``L`` defaults to the largest half-width centred at 0 inside the window.
    """
    if not zeros.certified:
        raise RequiresCertification("empirical atoms need a certified ZeroSet")
    weight = Weight(weight)
    if L is None:
        L = min(-zeros.window[0], zeros.window[1])
    if not L > 0:
        raise ValueError("L must be positive")
    x = zeros.locations
    wa = zeros.multiplicities * _weight(weight, x / L)
    g = np.atleast_1d(np.asarray(gammas, dtype=float))
    phase = np.exp(-2j * np.pi * np.outer(g, x))
    return phase @ wa / (L * _weight_integral(weight))


def empirical_atom(zeros: ZeroSet, gamma, L=None, weight=Weight.FEJER) -> complex:
    return complex(empirical_atoms(zeros, [gamma], L, weight)[0])


def zero_density(zeros: ZeroSet) -> float:
    lo, hi = zeros.window
    return zeros.total() / (hi - lo)


# -- comparison -------------------------------------------------------------

@dataclass(frozen=True)
class DiffractionEntry:
    vector: FreqVector
    gamma: float
    formula_mass: complex
    empirical_mass: complex

    @property
    def abs_error(self) -> float:
        return abs(self.formula_mass - self.empirical_mass)


@dataclass(frozen=True)
class DiffractionReport:
    entries: tuple
    window_L: float
    weight_name: str
    cutoff: float

    @property
    def max_error(self) -> float:
        return max((e.abs_error for e in self.entries), default=0.0)

    def to_dict(self):
        return {"window_L": self.window_L, "weight": self.weight_name, "cutoff": self.cutoff,
                "max_abs_error": self.max_error,
                "entries": [{"gamma": e.gamma, "gamma_vector": e.vector.to_strings(),
                             "formula": {"re": e.formula_mass.real, "im": e.formula_mass.imag},
                             "empirical": {"re": e.empirical_mass.real, "im": e.empirical_mass.imag},
                             "abs_error": e.abs_error} for e in self.entries]}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gamma", "formula_re", "formula_im", "empirical_re", "empirical_im", "abs_error"])
        for e in self.entries:
            w.writerow([repr(e.gamma), repr(e.formula_mass.real), repr(e.formula_mass.imag),
                        repr(e.empirical_mass.real), repr(e.empirical_mass.imag), repr(e.abs_error)])
        return buf.getvalue()

    def plot_data(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gamma", "abs_formula", "abs_empirical"])
        for e in self.entries:
            w.writerow([repr(e.gamma), repr(abs(e.formula_mass)), repr(abs(e.empirical_mass))])
        return buf.getvalue()


def top_atoms(measure: AtomicMeasure, top_k: int):
    """The ``top_k`` heaviest nonzero-frequency atoms (ties to smaller |gamma|) plus the origin."""
    rest = [a for a in measure.atoms if not a.vector.is_zero()]
    rest.sort(key=lambda a: (-round(abs(a.mass), 9), abs(a.value), a.value))
    chosen = rest[:top_k]
    origin = [a for a in measure.atoms if a.vector.is_zero()]
    return sorted(origin + chosen, key=lambda a: a.value)


def compare_diffraction(Q: ExpSum, L, top_k=10, cutoff=50.0, weight=Weight.FEJER, eta=1.0,
                        zeros: ZeroSet = None) -> DiffractionReport:
    """Tabulate formula-side atoms against windowed sums over the zeros in [-L, L].

    Pass ``zeros`` to reuse a certified ZeroSet covering [-L, L].
    """
    weight = Weight(weight)
    measure = fourier_atoms(*log_derivative_expansions(Q, cutoff))
    chosen = top_atoms(measure, top_k)
    if not chosen:
        return DiffractionReport((), float(L), weight.value, float(cutoff))
    if zeros is None:
        report = certify_real_rooted(Q, (-L, L), eta)
        zeros = report.zeros
    if not zeros.certified:
        raise RequiresCertification("zeros on the comparison window are not certified real")
    emp = empirical_atoms(zeros, [a.value for a in chosen], L, weight)
    entries = tuple(DiffractionEntry(a.vector, a.value, a.mass, complex(m)) for a, m in zip(chosen, emp))
    return DiffractionReport(entries, float(L), weight.value, float(cutoff))
