"""The sine-product representation ``C e^{iaz} prod sin^k(alpha z + beta)``."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import MP, FreqVector, FrequencyBasis, mp_string
from .errors import BadFactor


@dataclass(frozen=True)
class SineFactor:
    """One factor ``sin^k(alpha z + beta)``.

    ``alpha_over_pi`` is the exact basis vector of ``alpha / pi``; the zeros
    of the factor form the progression with period ``1 / value(alpha_over_pi)``.
    """

    alpha_over_pi: FreqVector
    beta: float
    k: int = 1

    def alpha(self, basis: FrequencyBasis) -> float:
        return float(MP.pi * basis.value(self.alpha_over_pi))

    def period(self, basis: FrequencyBasis) -> float:
        return float(1 / basis.value(self.alpha_over_pi))


@dataclass(frozen=True)
class SineProductForm:
    """``C * exp(i a z) * prod_j sin^{k_j}(alpha_j z + beta_j)``.

    ``shift``, when given, is the exact vector of ``a / (2 pi)``; it is
    needed to expand the form into an :class:`~sinefactor.algebra.ExpSum`.
    """

    basis: FrequencyBasis
    C: complex = 1.0
    a: float = 0.0
    factors: tuple = ()
    shift: Optional[FreqVector] = None

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "C", complex(self.C))
        if self.shift is not None:
            exact = float(2 * MP.pi * self.basis.value(self.shift))
            if self.a == 0.0 and exact != 0.0:
                object.__setattr__(self, "a", exact)
            elif abs(exact - self.a) > 1e-9 * max(1.0, abs(exact)):
                raise BadFactor(f"a = {self.a} disagrees with its exact shift vector ({exact})")
        for f in self.factors:
            if self.basis.value(f.alpha_over_pi) <= 0:
                raise BadFactor(f"alpha must be positive, got {f.alpha_over_pi!r}")
            if f.k < 1:
                raise BadFactor("factor multiplicity must be a positive integer")

    @property
    def degree(self):
        return sum(f.k for f in self.factors)

    def alphas(self):
        return [f.alpha(self.basis) for f in self.factors]

    def canonical(self) -> "SineProductForm":
        """Reduce each beta to [0, pi) (flipping the sign of C as needed), merge
        equal factors, and sort by (alpha, beta)."""
        C = self.C
        merged = {}
        for f in self.factors:
            turns = math.floor(f.beta / math.pi)
            beta = f.beta - turns * math.pi
            if beta >= math.pi:
                beta -= math.pi
                turns += 1
            if (turns * f.k) % 2:
                C = -C
            key = (f.alpha_over_pi, beta)
            merged[key] = merged.get(key, 0) + f.k
        factors = [SineFactor(v, b, k) for (v, b), k in merged.items()]
        factors.sort(key=lambda f: (float(self.basis.value(f.alpha_over_pi)), f.beta))
        return SineProductForm(self.basis, C, self.a, tuple(factors), self.shift)

    def evaluate(self, z):
        z = np.asarray(z, dtype=complex)
        out = self.C * np.exp(1j * self.a * z)
        for f in self.factors:
            out = out * np.sin(f.alpha(self.basis) * z + f.beta) ** f.k
        return out

    def zeros_in(self, lo, hi):
        """Sorted ``(location, multiplicity)`` pairs of the form's zeros in [lo, hi]."""
        acc = {}
        for f in self.factors:
            p = f.period(self.basis)
            off = -f.beta / f.alpha(self.basis)
            for n in range(math.ceil((lo - off) / p), math.floor((hi - off) / p) + 1):
                x = off + n * p
                key = round(x, 9)
                acc[key] = acc.get(key, 0) + f.k
        return sorted(acc.items())

    def render(self) -> str:
        parts = [f"({self.C.real:.12g}{self.C.imag:+.12g}i)"]
        if self.a:
            parts.append(f"e^(i*{self.a:.12g}*z)")
        for f in self.factors:
            s = f"sin({f.alpha(self.basis):.12g}*z{f.beta:+.12g})"
            parts.append(s if f.k == 1 else s + f"^{f.k}")
        return " · ".join(parts)

    def to_dict(self):
        return {
            "basis": self.basis.to_list(),
            "C": {"re": self.C.real, "im": self.C.imag},
            "a": self.a,
            "shift": None if self.shift is None else self.shift.to_strings(),
            "factors": [{"alpha_over_pi": f.alpha_over_pi.to_strings(),
                         "alpha": f.alpha(self.basis),
                         "beta": f.beta, "k": f.k} for f in self.factors],
            "rendered": self.render(),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        basis = FrequencyBasis(tuple((e["name"], e["value"]) for e in d["basis"]))
        factors = tuple(SineFactor(FreqVector.from_strings(f["alpha_over_pi"]), float(f["beta"]), int(f["k"]))
                        for f in d["factors"])
        shift = FreqVector.from_strings(d["shift"]) if d.get("shift") else None
        return cls(basis, complex(d["C"]["re"], d["C"]["im"]), float(d["a"]), factors, shift)
