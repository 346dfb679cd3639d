import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sinefactor.algebra import MP, FrequencyBasis, make_expsum, multiply, spectrum_extremes
from sinefactor.errors import CutoffMismatch, RequiresCertification
from sinefactor.generators import build_sine_product, sine_expsum
from sinefactor.logderiv import Halfplane, h_expansion, log_derivative_expansions
from sinefactor.quasicrystal import (Weight, compare_diffraction, empirical_atom, empirical_atoms, fourier_atoms,
                                     top_atoms, zero_density)
from sinefactor.rootfinder import ZeroSet, certify_real_rooted

from conftest import random_form

BASIS2 = FrequencyBasis.from_values({"one": 1, "sqrt2": MP.sqrt(2)})


def sin_pi(basis, beta=0.0):
    return sine_expsum(basis, basis.vector(one=1), beta)


def integers(lo, hi, certified=True):
    return ZeroSet((float(lo), float(hi)), 1.0, tuple((float(n), 1) for n in range(lo, hi + 1)), certified)


# -- formula side ---------------------------------------------------------------

def test_poisson(unit_basis):
    m = fourier_atoms(*log_derivative_expansions(sin_pi(unit_basis), 50))
    assert [round(v) for v in m.values()] == list(range(-50, 51))
    assert np.max(np.abs(m.masses() - 1)) < 1e-9
    assert m.mass_at_zero() == pytest.approx(1, abs=1e-12)


def test_single_exponential_has_empty_measure(basis2):
    Q = make_expsum([(basis2.vector(sqrt2=1), 3.0)], basis2)
    m = fourier_atoms(*log_derivative_expansions(Q, 20))
    assert m.atoms == ()
    assert m.mass_at_zero() == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mass_at_zero_is_spectral_width(seed):
    Q = build_sine_product(random_form(np.random.default_rng(seed), BASIS2))
    lo, hi = spectrum_extremes(Q)
    m = fourier_atoms(*log_derivative_expansions(Q, 5))
    assert abs(m.mass_at_zero() - float(BASIS2.value(hi.vector) - BASIS2.value(lo.vector))) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hermitian(seed):
    Q = build_sine_product(random_form(np.random.default_rng(seed), BASIS2))
    assert fourier_atoms(*log_derivative_expansions(Q, 12)).hermitian_defect() < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_additivity(s1, s2):
    P = build_sine_product(random_form(np.random.default_rng(s1), BASIS2, max_factors=2))
    R = build_sine_product(random_form(np.random.default_rng(s2), BASIS2, max_factors=2))
    whole = fourier_atoms(*log_derivative_expansions(multiply(P, R), 8)).as_dict()
    parts = (fourier_atoms(*log_derivative_expansions(P, 8)) + fourier_atoms(*log_derivative_expansions(R, 8)))
    summed = parts.as_dict()
    for v in set(whole) | set(summed):
        assert abs(whole.get(v, 0j) - summed.get(v, 0j)) < 1e-9


def test_cutoff_mismatch(unit_basis):
    Q = sin_pi(unit_basis)
    with pytest.raises(CutoffMismatch):
        fourier_atoms(h_expansion(Q, Halfplane.UPPER, 5), h_expansion(Q, Halfplane.LOWER, 6))
    with pytest.raises(ValueError):
        fourier_atoms(h_expansion(Q, Halfplane.LOWER, 5), h_expansion(Q, Halfplane.UPPER, 5))
    a = fourier_atoms(*log_derivative_expansions(Q, 5))
    b = fourier_atoms(*log_derivative_expansions(Q, 6))
    with pytest.raises(CutoffMismatch):
        a + b


def test_measure_exports(unit_basis):
    m = fourier_atoms(*log_derivative_expansions(sin_pi(unit_basis), 3))
    d = json.loads(m.to_json())
    assert len(d["atoms"]) == 7
    rows = list(csv.reader(io.StringIO(m.plot_data())))
    assert rows[0] == ["gamma", "abs_mass"]
    assert float(rows[4][0]) == 0.0 and float(rows[4][1]) == pytest.approx(1.0)


def test_top_atoms_orders_ties_by_gamma(unit_basis):
    m = fourier_atoms(*log_derivative_expansions(sin_pi(unit_basis), 20))
    chosen = top_atoms(m, 4)
    assert sorted(round(a.value) for a in chosen) == [-2, -1, 0, 1, 2]


# -- empirical side ---------------------------------------------------------------

@pytest.mark.parametrize("weight", list(Weight))
def test_empirical_on_integers(weight):
    zs = integers(-1000, 1000)
    assert abs(empirical_atom(zs, 0.0, 1000, weight) - 1) < 1e-2
    assert abs(empirical_atom(zs, 1.0, 1000, weight) - 1) < 1e-2
    assert abs(empirical_atom(zs, 0.5, 1000, weight)) < 1e-2


def test_empirical_defaults_and_vectorisation():
    zs = integers(-200, 200)
    vec = empirical_atoms(zs, [0.0, 0.5, 1.0])
    assert vec.shape == (3,)
    assert vec[0] == pytest.approx(empirical_atom(zs, 0.0, 200.0))


def test_empirical_requires_certification():
    with pytest.raises(RequiresCertification):
        empirical_atom(integers(-10, 10, certified=False), 0.0)
    with pytest.raises(ValueError):
        empirical_atom(integers(-10, 10), 0.0, L=0)


def test_zero_density():
    assert zero_density(integers(-100, 99)) == pytest.approx(200 / 199)


# -- comparison ---------------------------------------------------------------

def test_compare_sin(unit_basis):
    rep = compare_diffraction(sin_pi(unit_basis), 1000, 10)
    assert len(rep.entries) == 11
    assert rep.max_error < 5e-3
    assert rep.weight_name == "Fejer"
    for e in rep.entries:
        assert e.abs_error == abs(e.formula_mass - e.empirical_mass)


def test_compare_two_progressions(basis2):
    Q = multiply(sin_pi(basis2), sine_expsum(basis2, basis2.vector(sqrt2=1)))
    rep = compare_diffraction(Q, 500, 10)
    assert rep.max_error < 1e-2
    # atoms on sqrt2 Z carry mass sqrt2 and outrank the unit atoms on Z
    heavy = [e for e in rep.entries if e.gamma != 0]
    assert all(abs(e.formula_mass - math.sqrt(2)) < 1e-9 for e in heavy)
    assert all(abs(e.gamma / math.sqrt(2) - round(e.gamma / math.sqrt(2))) < 1e-12 for e in heavy)
    origin = [e for e in rep.entries if e.gamma == 0]
    assert origin and abs(origin[0].formula_mass - (1 + math.sqrt(2))) < 1e-12


def test_compare_single_exponential(basis2):
    Q = make_expsum([(basis2.vector(one=1), 1.0)], basis2)
    rep = compare_diffraction(Q, 100)
    assert rep.entries == () and rep.max_error == 0.0


def test_compare_reuses_zero_set(unit_basis):
    Q = sin_pi(unit_basis, 0.4)
    zs = certify_real_rooted(Q, (-300, 300)).zeros
    a = compare_diffraction(Q, 300, 5, zeros=zs)
    b = compare_diffraction(Q, 300, 5)
    assert a.to_dict() == b.to_dict()
    with pytest.raises(RequiresCertification):
        compare_diffraction(Q, 300, 5, zeros=ZeroSet(zs.window, zs.eta, zs.zeros, False))


def test_report_exports(unit_basis):
    rep = compare_diffraction(sin_pi(unit_basis), 100, 3, weight=Weight.GAUSSIAN)
    d = json.loads(rep.to_json())
    assert d["weight"] == "Gaussian" and len(d["entries"]) == 4
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0][-1] == "abs_error" and len(rows) == 5
    assert rep.plot_data().splitlines()[0] == "gamma,abs_formula,abs_empirical"


def test_convergence_when_window_doubles(basis2):
    Q = multiply(sin_pi(basis2), sine_expsum(basis2, basis2.vector(sqrt2=1)))
    zs = certify_real_rooted(Q, (-800, 800)).zeros
    errs = [compare_diffraction(Q, L, 10, zeros=zs).max_error for L in (200, 400, 800)]
    assert errs[1] < errs[0] and errs[2] < errs[1]


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_empirical_density_matches_atom_at_zero(seed):
    Q = build_sine_product(random_form(np.random.default_rng(seed), BASIS2))
    L = 50.0
    rep = certify_real_rooted(Q, (-L, L))
    assert rep.certified
    zs = rep.zeros.restrict(-L, L)
    m = fourier_atoms(*log_derivative_expansions(Q, 5))
    assert abs(zs.total() / (2 * L) - m.mass_at_zero().real) <= 2 / L
