"""gramcert: certified spectral-norm bounds, 1-Lipschitz rescalings, and
randomized-smoothing certification, verifiable against brute-force oracles."""

from .certify import (CertificationResult, ConfidenceInterval, SimplexMap,
                      certify_bonferroni, certify_cpm, ci_bernstein,
                      ci_clopper_pearson, ci_hoeffding, lvm_rs, radius_coord,
                      radius_global, radius_mono, radius_mult, simplex_map)
from .convnorm import (ConvBoundReport, FourierBlockSet, circ_to_zero_bound,
                       fourier_blocks, norm2_circ, norm2_toep,
                       orthogonality_gap, reduced_input_bound, strided_bound)
from .densenorm import (SingularTriplet, SpectralBound, gram_bound_gradient,
                        gram_iteration, gram_singular_vector, power_iteration,
                        squaring_eigenpair)
from .oracle import (MaterializedOperator, direct_conv2d, exact_svd_sigma1,
                     jacobi_eigh, materialize_circulant, materialize_strided,
                     materialize_toeplitz, mc_expectation, naive_dft_blocks)
from .rescale import (LayerDescriptor, PubReport, RescaleSpec,
                      apply_affine_1lip, apply_residual_1lip,
                      conv_spectral_rescaling, pub, spectral_rescaling)
from .smoothbounds import (ProbitModel, SmoothingContext,
                           gaussian_poincare_check, lip_bound_bounded,
                           lip_bound_bounded_refined, lip_bound_weierstrass,
                           local_lip_quantile, local_lip_quantile_ball,
                           optimal_sigma, probit_smoothed,
                           probit_smoothed_gradient_sup, smoothed_ce_bound,
                           smoothed_curvature_bound, weierstrass_gap)

__version__ = "0.1.0"
