import cmath
import json
import math
import warnings
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sinefactor.algebra import (MP, ExpSum, FreqVector, FrequencyBasis, add, derivative, evaluate, make_expsum,
                                multiply, power, scale, shift, spectrum_extremes)
from sinefactor.errors import BasisMismatch, EmptySum, OverflowSignal
from sinefactor.generators import sine_expsum


def sin_pi(basis):
    return make_expsum([(basis.vector(one=Fraction(1, 2)), 1 / 2j), (basis.vector(one=Fraction(-1, 2)), -1 / 2j)],
                       basis)


# -- basis and vectors --------------------------------------------------------

def test_basis_rejects_bad_entries():
    with pytest.raises(ValueError):
        FrequencyBasis((("a", "1"), ("a", "2")))
    with pytest.raises(ValueError):
        FrequencyBasis((("a", "-1"),))
    with pytest.raises(ValueError):
        FrequencyBasis((("a", "1"), ("b", "1.0")))
    with pytest.raises(ValueError):
        FrequencyBasis((("2x", "1"),))


def test_vector_value_uses_extended_precision(basis2):
    v = basis2.vector(one=Fraction(1, 3), sqrt2=-2)
    with mpmath.workdps(80):
        expected = mpmath.mpf(1) / 3 - 2 * mpmath.sqrt(2)
        assert abs(basis2.value(v) - expected) < mpmath.mpf("1e-60")


def test_vector_unknown_name(basis2):
    with pytest.raises(BasisMismatch):
        basis2.vector(sqrt5=1)


def test_vector_arithmetic(basis2):
    a = basis2.vector(one=1, sqrt2=Fraction(1, 2))
    b = basis2.vector(one=Fraction(-1, 3))
    assert (a + b) - b == a
    assert (-a + a).is_zero()
    assert a.scale(2) == basis2.vector(one=2, sqrt2=1)
    assert FreqVector.from_strings(a.to_strings()) == a


# -- make_expsum ------------------------------------------------------------

def test_sine_has_two_terms(unit_basis):
    Q = sin_pi(unit_basis)
    assert len(Q) == 2
    assert Q.coefficient(unit_basis.vector(one=Fraction(1, 2))) == pytest.approx(-0.5j)


def test_cancellation_is_empty(unit_basis):
    v = unit_basis.vector(one=Fraction(1, 2))
    with pytest.raises(EmptySum):
        make_expsum([(v, 1), (v, -1)], unit_basis)


def test_duplicates_merge(unit_basis):
    v = unit_basis.vector(one=Fraction(1, 2))
    Q = make_expsum([(v, 1), (v, 2)], unit_basis)
    assert Q.terms() == {v: 3 + 0j}


def test_length_mismatch(basis2):
    with pytest.raises(BasisMismatch):
        make_expsum([(FreqVector((1,)), 1.0)], basis2)


def test_close_values_warn():
    basis = FrequencyBasis((("a", "1"), ("b", "1." + "0" * 50 + "1")), independence_claimed=True)
    with pytest.warns(RuntimeWarning):
        make_expsum([(basis.vector(a=1), 1), (basis.vector(b=1), 1)], basis)


def test_terms_sorted_and_nonzero(basis2):
    Q = make_expsum([(basis2.vector(sqrt2=1), 1), (basis2.vector(one=-1), 2), (basis2.vector(one=1), 0)], basis2)
    assert list(Q.freqs) == sorted(Q.freqs)
    assert np.all(Q.coeffs != 0)
    assert len(Q) == 2


# -- evaluation -------------------------------------------------------------

def test_evaluate_exact_points(unit_basis):
    Q = sin_pi(unit_basis)
    assert evaluate(Q, 0.5) == pytest.approx(1.0, abs=1e-15)
    assert evaluate(Q, 1j) == pytest.approx(1j * float(mpmath.sinh(mpmath.pi)), rel=1e-14)


def test_evaluate_constant(unit_basis):
    Q = ExpSum.constant(unit_basis, 2 - 3j)
    for z in (0, 1 + 5j, -7 - 40j):
        assert evaluate(Q, z) == 2 - 3j


def test_evaluate_overflow_signal(unit_basis):
    Q = sin_pi(unit_basis)
    with pytest.raises(OverflowSignal) as info:
        evaluate(Q, 300j)
    # |sin(pi * 300 i)| = sinh(300 pi)
    assert info.value.log_magnitude == pytest.approx(300 * math.pi - math.log(2), rel=1e-12)


def test_evaluate_large_imaginary_no_overflow(unit_basis):
    Q = sin_pi(unit_basis)
    z = 0.25 + 200j
    exact = complex(mpmath.sin(mpmath.pi * mpmath.mpc(0.25, 200)))
    assert evaluate(Q, z) == pytest.approx(exact, rel=1e-12)


def test_evaluate_array_matches_scalar(basis2):
    Q = multiply(sine_expsum(basis2, basis2.vector(one=1)), sine_expsum(basis2, basis2.vector(sqrt2=1), 0.3))
    z = np.array([0.1 + 0.2j, -3.3 - 1j, 12.0])
    assert np.allclose(Q.evaluate_array(z), [evaluate(Q, x) for x in z], rtol=1e-12)


# -- derivative ---------------------------------------------------------------

def test_derivative_of_sine(unit_basis):
    D = derivative(sin_pi(unit_basis))
    for z in (0.0, 0.3 + 0.2j, -2.1):
        assert evaluate(D, z) == pytest.approx(math.pi * cmath.cos(math.pi * z), rel=1e-13, abs=1e-13)


def test_derivative_of_constant_is_zero_sum(unit_basis):
    D = derivative(ExpSum.constant(unit_basis, 4.0))
    assert D.is_zero()
    assert evaluate(D, 1 + 1j) == 0


def test_derivative_finite_difference(basis2):
    rng = np.random.default_rng(3)
    vecs = [basis2.vector(one=Fraction(1, 3)), basis2.vector(sqrt2=-1), basis2.vector(one=1, sqrt2=Fraction(1, 2))]
    Q = make_expsum(zip(vecs, rng.normal(size=3) + 1j * rng.normal(size=3)), basis2)
    D = derivative(Q)
    h = 1e-5
    for z in rng.uniform(-3, 3, 10) + 1j * rng.uniform(-1, 1, 10):
        fd = (evaluate(Q, z + h) - evaluate(Q, z - h)) / (2 * h)
        assert abs(evaluate(D, z) - fd) / Q.local_scale(z) < 1e-6


# -- multiplication -----------------------------------------------------------

def test_sine_squared(unit_basis):
    S = multiply(sin_pi(unit_basis), sin_pi(unit_basis))
    assert S.terms() == pytest.approx({unit_basis.vector(one=0): 0.5, unit_basis.vector(one=1): -0.25,
                                       unit_basis.vector(one=-1): -0.25})


def test_multiply_by_one(basis2):
    Q = sine_expsum(basis2, basis2.vector(sqrt2=1), 0.7)
    assert multiply(Q, ExpSum.constant(basis2, 1.0)).is_close(Q)


def test_sine_times_sqrt2_sine(basis2):
    P = multiply(sine_expsum(basis2, basis2.vector(one=1)), sine_expsum(basis2, basis2.vector(sqrt2=1)))
    half = Fraction(1, 2)
    want = {basis2.vector(one=half, sqrt2=half): -0.25, basis2.vector(one=-half, sqrt2=-half): -0.25,
            basis2.vector(one=half, sqrt2=-half): 0.25, basis2.vector(one=-half, sqrt2=half): 0.25}
    assert P.terms() == pytest.approx(want)
    lo, hi = spectrum_extremes(P)
    assert lo.value == pytest.approx(-(1 + math.sqrt(2)) / 2)
    assert hi.value == pytest.approx((1 + math.sqrt(2)) / 2)


def test_basis_mismatch_in_arithmetic(unit_basis, basis2):
    with pytest.raises(BasisMismatch):
        multiply(sin_pi(unit_basis), sine_expsum(basis2, basis2.vector(one=1)))
    with pytest.raises(BasisMismatch):
        add(sin_pi(unit_basis), sine_expsum(basis2, basis2.vector(one=1)))


def test_spectrum_extremes(unit_basis):
    lo, hi = spectrum_extremes(sin_pi(unit_basis))
    assert (lo.value, hi.value) == (-0.5, 0.5)
    single = make_expsum([(unit_basis.vector(one=3), 2.0)], unit_basis)
    lo, hi = spectrum_extremes(single)
    assert lo.vector == hi.vector == unit_basis.vector(one=3)
    with pytest.raises(EmptySum):
        spectrum_extremes(ExpSum.zero(unit_basis))


def test_shift_scale_power(unit_basis):
    Q = sin_pi(unit_basis)
    S = shift(scale(Q, 2j), unit_basis.vector(one=Fraction(1, 4)))
    z = 0.3 - 0.4j
    assert evaluate(S, z) == pytest.approx(2j * cmath.exp(0.5j * math.pi * z) * evaluate(Q, z))
    assert evaluate(power(Q, 3), z) == pytest.approx(evaluate(Q, z) ** 3)
    assert power(Q, 0).terms() == {unit_basis.zero(): 1 + 0j}
    with pytest.raises(ValueError):
        power(Q, -1)


def test_json_round_trip(basis2):
    Q = multiply(sine_expsum(basis2, basis2.vector(one=1), 0.2), sine_expsum(basis2, basis2.vector(sqrt2=1)))
    text = Q.to_json()
    doc = json.loads(text)
    assert set(doc) == {"basis", "terms"}
    assert all("/" in f for t in doc["terms"] for f in t["freq"])
    R = ExpSum.from_json(text)
    assert R.basis == Q.basis and R.is_close(Q, 0)


# -- properties ---------------------------------------------------------------

BASIS2 = FrequencyBasis.from_values({"one": 1, "sqrt2": MP.sqrt(2)})
fractions = st.fractions(min_value=-3, max_value=3, max_denominator=6)
coefs = st.complex_numbers(min_magnitude=0.1, max_magnitude=3, allow_nan=False, allow_infinity=False)
terms = st.lists(st.tuples(fractions, fractions, coefs), min_size=1, max_size=4)


def build(ts):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        merged = {}
        for a, b, q in ts:
            v = BASIS2.vector(one=a, sqrt2=b)
            merged[v] = merged.get(v, 0j) + q
        merged = {v: q for v, q in merged.items() if abs(q) > 1e-3}
        return ExpSum(BASIS2, merged) if merged else ExpSum.constant(BASIS2, 1.0)


@settings(max_examples=60, deadline=None)
@given(terms, terms, terms)
def test_multiply_commutative_associative(a, b, c):
    Q, R, S = build(a), build(b), build(c)
    assert multiply(Q, R).is_close(multiply(R, Q), 1e-12)
    assert multiply(multiply(Q, R), S).is_close(multiply(Q, multiply(R, S)), 1e-10)


@settings(max_examples=60, deadline=None)
@given(terms, terms, st.floats(-5, 5), st.floats(-2, 2))
def test_multiply_evaluates_to_product(a, b, x, y):
    Q, R = build(a), build(b)
    z = complex(x, y)
    lhs = evaluate(multiply(Q, R), z)
    rhs = evaluate(Q, z) * evaluate(R, z)
    assert abs(lhs - rhs) <= 1e-10 * Q.local_scale(z) * R.local_scale(z)


@settings(max_examples=60, deadline=None)
@given(terms, terms)
def test_leibniz_rule(a, b):
    Q, R = build(a), build(b)
    lhs = derivative(multiply(Q, R))
    rhs = add(multiply(derivative(Q), R), multiply(Q, derivative(R)))
    scale_ = max(1.0, float(np.max(np.abs(lhs.coeffs))) if len(lhs) else 1.0)
    for v in set(lhs.vectors) | set(rhs.vectors):
        assert abs(lhs.coefficient(v) - rhs.coefficient(v)) <= 1e-9 * scale_


@settings(max_examples=60, deadline=None)
@given(terms, terms)
def test_extremes_add_under_products(a, b):
    Q, R = build(a), build(b)
    P = multiply(Q, R)
    (ql, qh), (rl, rh), (pl, ph) = spectrum_extremes(Q), spectrum_extremes(R), spectrum_extremes(P)
    # the extreme products cannot cancel: each is a single product of nonzero coefficients
    assert pl.vector == ql.vector + rl.vector
    assert ph.vector == qh.vector + rh.vector
