"""Central limit theorems with rates for driven expanding circle maps.

The package covers sequential, quasistatic, and random compositions of
smooth expanding maps of the circle: transfer-operator computation of
variances and correlations, Monte Carlo sampling of Birkhoff sums,
Wasserstein and smooth-test distances to the normal law, explicit
Berry-Esseen-type bounds, and reproducible studies behind the circleclt
command line tool.
"""

from .bounds import (BoundReport, DecayConstants, KChoice, c_sharp, c_star,
                     choose_K, circle_C_multivar, circle_C_tilde,
                     circle_rate_bound, geometric_tail,
                     geometric_weighted_sqrt, l_star, rho_tilde_multivar,
                     rho_tilde_univar, self_normalized_bound,
                     sixth_root_bound, splitting_bound, sum_lemma_check,
                     thm_main_bound, thm_w1_bound)
from .distances import (STEIN_CATALOG, SteinSolution1D, TrigTestFunction,
                        matrix_sqrt, normal_w1_bound, smooth_test_distance,
                        sqrt_diff_bound, stein_identity_check, stein_solve_1d,
                        w1_empirical_pair, w1_empirical_vs_normal)
from .dynamics import (CircleMap, InitialDensity, MapSchedule,
                       QuasistaticCurve, RandomDriver, c1_distance,
                       circle_dist, iterate_orbit, map_bounds, map_deriv,
                       map_eval, map_lift, power_curve, preimages,
                       sample_initial, sample_initial_many)
from .errors import ConfigError, NumericalError
from .experiments import (DEFAULT_CONFIGS, RateFit, StudyConfig, StudyReport,
                          calibrate_constants, emit_report, fit_rate,
                          render_figures, report_bytes, run_qds_study,
                          run_rate_study, run_rds_study)
from .stats import (CovarianceResult, Observable, SigmaHat, VarianceCurve,
                    WSamples, correlation_profile, covariance_matrix,
                    mean_at_time, pair_correlation, quadruple_correlation,
                    sample_W, self_normalize, sigma_hat_sq, sigma_sq_curve,
                    variance_profile, xi_samples, xi_variance, xi_weights)
from .streams import stream
from .transfer import (GridDensity, ThetaFit, density_from_function,
                       estimate_theta, grid_points, integrate,
                       invariant_density, l1_distance, lipschitz_log,
                       probe_pairs, pushforward_density, transfer_apply,
                       transfer_apply_signed, uniform_density)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
