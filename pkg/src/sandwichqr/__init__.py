"""Quantile regression with sandwich-corrected Bayesian intervals.

The package fits conditional quantiles three ways: classical check-loss
minimisation with pair-bootstrap confidence intervals, Bayesian fitting
under an asymmetric Laplace working likelihood, and a sandwich-corrected
Gaussian posterior that restores frequentist coverage to the Bayesian
intervals.  A simulation harness measures coverage and interval length
over replicated synthetic datasets.
"""

from .ald import ald_cdf, ald_density, ald_log_density, ald_quantile, check_loss
from .classical import IntervalSet, QrFit, bootstrap_intervals, fit_classical_qr
from .datagen import (BETA0, CstarResult, ModelSpec, compute_cstar,
                      generate_response, generate_responses, sample_covariates,
                      true_quantile)
from .dataset import Dataset, DegenerateDesignError, load_csv, save_csv
from .estimators import (BayesianQuantileRegressor, QuantileRegressor,
                         SandwichQuantileRegressor)
from .gibbs import (Chain, FixedScale, GibbsConfig, GibbsOverflowError,
                    PosteriorSummary, PriorSpec, RandomScale,
                    SingularCovarianceError, effective_sample_size, flat_prior,
                    informative_prior, run_gibbs, sample_ald_mixture,
                    sample_inverse_gaussian, save_chain_csv, summarize_chain)
from .harness import (CellStats, CoverageReport, ExperimentConfig, RepResult,
                      ReplicationError, Scenario, format_report, load_config,
                      parse_report_csv, run_experiment, run_replication)
from .sandwich import (ClosedFormGaussian, Draws, SandwichInputs,
                       SandwichPosterior, compute_s_n, compute_sigma_n,
                       credible_interval, sandwich_posterior)
from .validate import run_validation

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ald_cdf", "ald_density", "ald_log_density", "ald_quantile", "check_loss",
    "IntervalSet", "QrFit", "bootstrap_intervals", "fit_classical_qr",
    "BETA0", "CstarResult", "ModelSpec", "compute_cstar", "generate_response",
    "generate_responses", "sample_covariates", "true_quantile",
    "Dataset", "DegenerateDesignError", "load_csv", "save_csv",
    "BayesianQuantileRegressor", "QuantileRegressor", "SandwichQuantileRegressor",
    "Chain", "FixedScale", "GibbsConfig", "GibbsOverflowError",
    "PosteriorSummary", "PriorSpec", "RandomScale", "SingularCovarianceError",
    "effective_sample_size", "flat_prior", "informative_prior", "run_gibbs",
    "sample_ald_mixture", "sample_inverse_gaussian", "save_chain_csv",
    "summarize_chain",
    "CellStats", "CoverageReport", "ExperimentConfig", "RepResult",
    "ReplicationError", "Scenario", "format_report", "load_config",
    "parse_report_csv", "run_experiment", "run_replication",
    "ClosedFormGaussian", "Draws", "SandwichInputs", "SandwichPosterior",
    "compute_s_n", "compute_sigma_n", "credible_interval", "sandwich_posterior",
    "run_validation",
]
