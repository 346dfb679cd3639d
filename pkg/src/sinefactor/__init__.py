"""Sine-product analysis of real-rooted exponential sums."""

from .algebra import (ExpSum, FrequencyBasis, FreqVector, add, derivative, evaluate, make_expsum, multiply,
                      power, scale, shift, spectrum_extremes)
from .errors import *  # noqa: F401,F403
from .factorizer import (ProgressionSet, consistency_check, decompose_zero_set, factorize, peel_sine_factors,
                         recover_scale, verify_form)
from .forms import SineFactor, SineProductForm
from .generators import (SecularSpec, build_sine_product, cosine_expsum, random_unitary, secular_expsum,
                         sine_expsum)
from .logderiv import (GrowthReport, Halfplane, HExpansion, Verdict, difference_semigroup, growth_profile,
                       h_expansion, log_derivative_expansions, meyer_verdict, sine_product_h_closed_form)
from .parser import build_basis, parse_expression
from .quasicrystal import (AtomicMeasure, DiffractionReport, Weight, compare_diffraction, empirical_atom,
                           empirical_atoms, fourier_atoms)
from .rootfinder import ZeroSet, certify_real_rooted, count_zeros_rect, locate_real_zeros

__version__ = "0.1.0"
