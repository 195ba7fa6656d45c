"""Spectra of multilayer ReLU tangent kernels on general domains.

Library surface:

- seqcalc: forward differences, tail sums, Cesaro means, left extrapolation,
  and the decay-condition checker;
- sphere: Gegenbauer polynomials, zonal sums, per-degree mode extraction of
  dot-product kernels, the nonnegative Cesaro kernel;
- kernels: closed-form tangent kernel (arc-cosine compositions), sphere lift,
  kernel algebra, Gram assembly with PD diagnostics;
- spectral: input distributions, empirical operator eigenvalues, log-log
  decay fits, grid and spherical-cap experiments;
- flow: closed-form kernel gradient-flow regression, early stopping,
  cross-validated stopping-time selection, risk measurement;
- network: mirrored ReLU network, tangent-kernel computation, gradient
  descent with lazy-regime diagnostics;
- cli: reproducible command-line experiments with CSV and figure output.
"""

from .errors import DivergenceError, NumericalError
from .flow import (FlowPredictor, RegressionTask, TruncatedPredictor, cv_select_stopping,
                   flow_predict, l2_risk, optimal_stopping_time, stopping_time_grid,
                   sup_risk, truncate)
from .kernels import (KernelMatrix, LiftedPoint, NtkDescriptor, gram, gram_from_kernel,
                      kappa0, kappa1, lift, ntk_cross, ntk_eval, ntk_profile,
                      profile_kernel, pullback_kernel, scaled_kernel, sum_kernel)
from .network import (NetworkState, ProbeConfig, TrainTrace, forward, init_network,
                      load_checkpoint, probe_grid, save_checkpoint, tangent_kernel,
                      tangent_kernel_matrix, train, uniform_gap, weight_drift)
from .seqcalc import (EdrConditionReport, ExtrapolationResult, Seq, TailModel, binom_a,
                      cesaro_mean, cesaro_weighted_sum, check_edr_condition,
                      forward_difference, left_extrapolate, tail_sum)
from .spectral import (DecayFit, SampleDistribution, edr_experiment, empirical_eigenvalues,
                       fit_decay, restricted_sphere_edr, sample, theory_rate)
from .sphere import (ModeSpectrum, SphereGeometry, cesaro_kernel, funk_hecke_modes,
                     gegenbauer, modes_to_lambda, multiplicity, multiplicity_cumsum,
                     surface_area, zonal)

__version__ = "0.1.0"
