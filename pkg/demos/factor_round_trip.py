"""Build a sine product, expand it, and recover it from the exponential sum alone."""

from sinefactor import (FrequencyBasis, SineFactor, SineProductForm, build_sine_product, certify_real_rooted,
                        consistency_check, decompose_zero_set, factorize, verify_form)
from sinefactor.algebra import MP

basis = FrequencyBasis.from_values({"one": 1, "sqrt2": MP.sqrt(2)})
form = SineProductForm(basis, 1.5 - 0.5j, 0.0,
                       (SineFactor(basis.vector(one=1), 0.4, 2), SineFactor(basis.vector(sqrt2=1), 2.0)),
                       basis.vector(one=0.25)).canonical()
Q = build_sine_product(form)
print("input form:     ", form.render())
print("exponential sum:", len(Q.terms()), "terms")

got = factorize(Q)
print("recovered form: ", got.render())
print("verify residual:", verify_form(Q, got).max_residual)

zeros = certify_real_rooted(Q, (-20.1, 20.1)).zeros
progressions = decompose_zero_set(zeros)
for p in progressions.progressions:
    print(f"progression: period {p.period:.12f}, offset {p.offset:.12f}, multiplicity {p.multiplicity}")
print("consistent with the factors:", consistency_check(got, progressions).consistent)
