"""A real-rooted exponential sum that is not a sine product.

det(I - e^{ixL} U) with a random unitary U and incommensurable lengths has
only real zeros, yet the coefficients of its log-derivative grow faster
than linearly and cotangent peeling stops with a residual.
"""

from sinefactor import (NotASineProduct, SecularSpec, certify_real_rooted, growth_profile, h_expansion,
                        log_derivative_expansions, meyer_verdict, peel_sine_factors, secular_expsum)
from sinefactor.algebra import MP
from sinefactor.logderiv import Halfplane

spec = SecularSpec.random([MP.sqrt(1), MP.sqrt(2), MP.sqrt(3)], seed=1)
Q = secular_expsum(spec)
rep = certify_real_rooted(Q, (-40, 40))
print(f"zeros in the strip: {rep.rect_count}, on the real axis: {rep.real_count}, certified: {rep.certified}")

res = meyer_verdict(growth_profile(*log_derivative_expansions(Q, 10)))
print("growth verdict:", res.verdict.value, "|", res.reason)
for r, R in list(zip(res.report.radii, res.report.R_values))[::10]:
    print(f"  R({r:7.3f}) = {R:.4g}")

try:
    peel_sine_factors(h_expansion(Q, Halfplane.UPPER, 10))
except NotASineProduct as exc:
    print("peeling stopped:", exc)
    print("residual mass:", exc.to_dict()["residual_mass"])
