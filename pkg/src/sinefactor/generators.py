"""Test-family constructors.

Sine products expand into exponential sums via ``sin w = (e^{iw} - e^{-iw}) / 2i``.
Secular functions ``det(I - e^{ixL} U)`` with ``U`` unitary and ``L`` a
positive diagonal are real-rooted but, for incommensurable lengths, are not
sine products; they are the negative examples.
"""

from __future__ import annotations

import cmath
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import MP, ExpSum, FreqVector, FrequencyBasis, make_expsum, mp_string, multiply, power, shift
from .errors import BasisMismatch, NotRealRooted
from .forms import SineFactor, SineProductForm


def sine_expsum(basis: FrequencyBasis, alpha_over_pi: FreqVector, beta=0.0) -> ExpSum:
    """``sin(alpha z + beta)`` with ``alpha = pi * value(alpha_over_pi)``."""
    half = alpha_over_pi.scale(Fraction(1, 2))
    e = cmath.exp(1j * beta)
    return make_expsum([(half, e / 2j), (-half, -1 / (e * 2j))], basis)


def cosine_expsum(basis: FrequencyBasis, alpha_over_pi: FreqVector, beta=0.0) -> ExpSum:
    half = alpha_over_pi.scale(Fraction(1, 2))
    e = cmath.exp(1j * beta)
    return make_expsum([(half, e / 2), (-half, 1 / (e * 2))], basis)


def _find_shift(basis: FrequencyBasis, a: float, max_den=1000):
    """Exact vector for a / (2 pi) as a small rational multiple of one basis entry."""
    target = MP.mpf(a) / (2 * MP.pi)
    for i, b in enumerate(basis.mp_values):
        r = Fraction(float(target / b)).limit_denominator(max_den)
        if abs(r.numerator / r.denominator * b - target) <= MP.mpf("1e-13") * max(1, abs(target)):
            coeffs = [Fraction(0)] * basis.dim
            coeffs[i] = r
            return FreqVector(tuple(coeffs))
    raise BasisMismatch(f"a/(2 pi) = {float(target):.12g} is not a rational multiple of a basis entry")


def build_sine_product(form: SineProductForm) -> ExpSum:
    basis = form.basis
    Q = ExpSum.constant(basis, form.C)
    for f in form.factors:
        Q = multiply(Q, power(sine_expsum(basis, f.alpha_over_pi, f.beta), f.k))
    if form.shift is not None:
        Q = shift(Q, form.shift)
    elif form.a != 0.0:
        Q = shift(Q, _find_shift(basis, form.a))
    return Q


# -- secular functions ----------------------------------------------------

def random_unitary(n: int, seed: int) -> np.ndarray:
    """Modified Gram-Schmidt on a seeded complex Gaussian matrix."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    U = np.zeros((n, n), dtype=complex)
    for j in range(n):
        v = A[:, j].copy()
        for i in range(j):
            v -= np.vdot(U[:, i], v) * U[:, i]
        # second pass keeps the columns orthonormal to ~1e-15
        for i in range(j):
            v -= np.vdot(U[:, i], v) * U[:, i]
        U[:, j] = v / np.linalg.norm(v)
    return U


@dataclass(frozen=True)
class SecularSpec:
    """Input to :func:`secular_expsum`: edge lengths and a scattering matrix."""

    n: int
    lengths: tuple
    unitary: np.ndarray = field(compare=False)
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.n <= 6:
            raise ValueError("matrix size must be between 1 and 6")
        lengths = tuple(str(s) for s in self.lengths)
        if len(lengths) != self.n or any(MP.mpf(s) <= 0 for s in lengths):
            raise ValueError("need n positive lengths")
        object.__setattr__(self, "lengths", lengths)
        U = np.asarray(self.unitary, dtype=complex)
        if U.shape != (self.n, self.n):
            raise ValueError("unitary has the wrong shape")
        object.__setattr__(self, "unitary", U)

    @classmethod
    def random(cls, lengths, seed=0):
        lengths = [mp_string(l) for l in lengths]
        return cls(len(lengths), tuple(lengths), random_unitary(len(lengths), seed), seed)

    def unitarity_defect(self) -> float:
        U = self.unitary
        return float(np.max(np.abs(U.conj().T @ U - np.eye(self.n))))

    def basis(self) -> FrequencyBasis:
        return FrequencyBasis.from_values({f"l{j + 1}": MP.mpf(s) / (2 * MP.pi) for j, s in enumerate(self.lengths)})

    def to_dict(self):
        return {"n": self.n, "lengths": list(self.lengths), "seed": self.seed,
                "unitary": [[[float(x.real), float(x.imag)] for x in row] for row in self.unitary]}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        U = np.array([[complex(re, im) for re, im in row] for row in d["unitary"]])
        return cls(int(d["n"]), tuple(d["lengths"]), U, int(d.get("seed", 0)))


def secular_terms(spec: SecularSpec) -> ExpSum:
    """``det(I - e^{ixL} U) = sum_T (-1)^{|T|} det U[T,T] e^{ix sum_T l_j}``, uncertified."""
    basis = spec.basis()
    terms = []
    for size in range(spec.n + 1):
        for T in itertools.combinations(range(spec.n), size):
            minor = np.linalg.det(spec.unitary[np.ix_(T, T)]) if T else 1.0
            coeffs = [Fraction(1 if j in T else 0) for j in range(spec.n)]
            terms.append((FreqVector(tuple(coeffs)), (-1) ** size * minor))
    return make_expsum(terms, basis)


def secular_expsum(spec: SecularSpec, probe_window=(-20.0, 20.0), eta=1.0) -> ExpSum:
    """The secular function as an ExpSum, certified real-rooted on ``probe_window``."""
    from .rootfinder import certify_real_rooted

    Q = secular_terms(spec)
    report = certify_real_rooted(Q, probe_window, eta)
    if not report.certified:
        raise NotRealRooted(f"secular function has {report.rect_count} zeros in the probe strip "
                            f"but only {report.real_count} on the real axis")
    return Q
