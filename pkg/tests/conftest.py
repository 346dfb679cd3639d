import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from sinefactor.algebra import MP, FrequencyBasis
from sinefactor.forms import SineFactor, SineProductForm



def _basis(**values):
    return FrequencyBasis.from_values(values)


@pytest.fixture
def unit_basis():
    return FrequencyBasis.unit()


@pytest.fixture
def basis2():
    return _basis(one=1, sqrt2=MP.sqrt(2))


@pytest.fixture
def basis3():
    return _basis(one=1, sqrt2=MP.sqrt(2), sqrt3=MP.sqrt(3))


# alpha / pi choices: rational multiples of 1 and of sqrt2, so ratios are mixed
ALPHA_CHOICES = [("one", Fraction(1)), ("one", Fraction(1, 2)), ("one", Fraction(3, 2)), ("one", Fraction(2)),
                 ("sqrt2", Fraction(1)), ("sqrt2", Fraction(1, 2)), ("sqrt2", Fraction(3, 4))]
SHIFT_CHOICES = [Fraction(0), Fraction(1, 4), Fraction(-1, 3), Fraction(1, 6)]


def _min_gap(form, lo, hi):
    xs = np.array([x for x, _ in form.zeros_in(lo, hi)])
    return float(np.min(np.diff(xs))) if len(xs) > 1 else math.inf


def random_form(rng, basis, max_factors=3, max_k=2, separation=5e-3, window=(-60.0, 60.0)):
    """Random canonical sine product with distinct alphas.

    Forms whose zeros from different factors come closer than ``separation``
    without coinciding are redrawn: the root finder reports such pairs as one
    cluster.
    """
    while True:
        J = int(rng.integers(1, max_factors + 1))
        picks = rng.choice(len(ALPHA_CHOICES), size=J, replace=False)
        factors = tuple(SineFactor(basis.vector(**{ALPHA_CHOICES[p][0]: ALPHA_CHOICES[p][1]}),
                                   float(rng.uniform(0, math.pi)), int(rng.integers(1, max_k + 1)))
                        for p in picks)
        C = complex(rng.uniform(0.5, 2.0) * np.exp(1j * rng.uniform(-math.pi, math.pi)))
        shift = basis.vector(one=SHIFT_CHOICES[int(rng.integers(len(SHIFT_CHOICES)))])
        form = SineProductForm(basis, C, 0.0, factors, shift).canonical()
        if shift.is_zero():
            form = SineProductForm(basis, form.C, 0.0, form.factors, None)
        if _min_gap(form, *window) > separation:
            return form


def zero_window(form, half_count=15.0):
    """Symmetric window holding about ``2 * half_count`` zeros, at least [-15, 15]."""
    density = sum(f.k * float(form.basis.value(f.alpha_over_pi)) for f in form.factors)
    H = max(15.0, half_count / density) if density > 0 else 15.0
    return (-H, H)


ACCEPTANCE_LINES = []


def acceptance_line(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
