"""Two routes to the Fourier atoms of the zeros of sin(pi z) sin(sqrt2 pi z + 0.5).

The formula route reads the atoms off the half-plane expansions of Q'/Q;
the empirical route sums e^{-2 pi i gamma lambda} over located zeros.
"""

from sinefactor import FrequencyBasis, compare_diffraction, fourier_atoms, log_derivative_expansions
from sinefactor.algebra import MP, multiply
from sinefactor.generators import sine_expsum

basis = FrequencyBasis.from_values({"one": 1, "sqrt2": MP.sqrt(2)})
Q = multiply(sine_expsum(basis, basis.vector(one=1)), sine_expsum(basis, basis.vector(sqrt2=1), 0.5))

measure = fourier_atoms(*log_derivative_expansions(Q, 5))
print("formula-side atoms with |gamma| <= 5:")
for atom in measure.atoms:
    print(f"  gamma = {atom.value:+.6f}   mass = {atom.mass.real:+.6f}{atom.mass.imag:+.6f}i")

for L in (250, 500, 1000):
    report = compare_diffraction(Q, L, top_k=6)
    print(f"L = {L:5d}: largest |formula - empirical| over {len(report.entries)} atoms = {report.max_error:.2e}")
