"""Estimator-style wrappers with the fit/predict/get_params protocol.

These classes adapt the functional core to the scikit-learn estimator
contract so the models drop into pipelines, cross-validation, and
``clone``.  ``X`` is covariates only; the intercept is handled
internally and reported separately as ``intercept_``, matching the
sklearn linear-model convention.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .classical import bootstrap_intervals, fit_classical_qr
from .dataset import Dataset
from .gibbs import (FixedScale, GibbsConfig, PriorSpec, RandomScale,
                    flat_prior, informative_prior, run_gibbs, summarize_chain)
from .sandwich import (SandwichInputs, compute_s_n, credible_interval,
                       sandwich_posterior)
from .validation import check_level

__all__ = [
    "QuantileRegressor",
    "BayesianQuantileRegressor",
    "SandwichQuantileRegressor",
]


def _as_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y disagree on the number of rows")
    return X, y


def _resolve_prior(prior, p, scale_rule):
    if isinstance(prior, PriorSpec):
        if prior.p != p + 1:
            raise ValueError(
                f"prior covers {prior.p} coefficients but the model has {p + 1} "
                "(intercept included)")
        return PriorSpec(prior.mean, prior.variance, scale_rule)
    if prior == "flat":
        return flat_prior(p + 1, scale_rule)
    if prior == "informative":
        if p + 1 != 3:
            raise ValueError("the informative preset is for 3 coefficients")
        return informative_prior(scale_rule)
    raise ValueError("prior must be 'flat', 'informative', or a PriorSpec")


def _resolve_scale(scale):
    if isinstance(scale, (FixedScale, RandomScale)):
        return scale
    return FixedScale(float(scale))


class QuantileRegressor(BaseEstimator, RegressorMixin):
    """Check-loss linear quantile regression with bootstrap intervals.

    Parameters
    ----------
    tau : float, default 0.5
        Quantile level.
    bootstrap_b : int, default 600
        Pair-bootstrap resamples behind :meth:`confint`.
    random_state : int, default 0
        Seed for the bootstrap.
    """

    def __init__(self, tau=0.5, bootstrap_b=600, random_state=0):
        self.tau = tau
        self.bootstrap_b = bootstrap_b
        self.random_state = random_state

    def fit(self, X, y):
        X, y = _as_xy(X, y)
        data = Dataset.from_covariates(y, X)
        fit = fit_classical_qr(data, self.tau)
        self.data_ = data
        self.intercept_ = float(fit.beta_m[0])
        self.coef_ = fit.beta_m[1:].copy()
        self.objective_ = fit.objective
        self._confints = {}
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        return self.intercept_ + X @ self.coef_

    def confint(self, level=0.95):
        """Percentile bootstrap intervals, intercept row first."""
        level = check_level(level)
        if level not in self._confints:
            self._confints[level] = bootstrap_intervals(
                self.data_, self.tau, B=self.bootstrap_b, level=level,
                seed=self.random_state)
        return self._confints[level]


class BayesianQuantileRegressor(BaseEstimator, RegressorMixin):
    """Working-likelihood posterior via the latent-variable Gibbs chain.

    The reported ``coef_``/``intercept_`` are posterior means, and
    :meth:`confint` gives equal-tailed posterior quantile intervals.
    Under misspecification these intervals can over- or under-cover;
    see :class:`SandwichQuantileRegressor` for the corrected version.

    ``scale`` is either a positive number (fixed working scale) or a
    :class:`~sandwichqr.gibbs.RandomScale` rule sampled inside the
    chain.
    """

    def __init__(self, tau=0.5, prior="flat", scale=1.0, burn_in=2000,
                 n_draws=1000, random_state=0):
        self.tau = tau
        self.prior = prior
        self.scale = scale
        self.burn_in = burn_in
        self.n_draws = n_draws
        self.random_state = random_state

    def _run_chain(self, X, y):
        X, y = _as_xy(X, y)
        data = Dataset.from_covariates(y, X)
        prior = _resolve_prior(self.prior, X.shape[1], _resolve_scale(self.scale))
        config = GibbsConfig(burn_in=self.burn_in, n_draws=self.n_draws,
                             seed=self.random_state)
        chain = run_gibbs(data, self.tau, prior, config)
        summary = summarize_chain(chain, data, prior)
        return data, prior, chain, summary

    def fit(self, X, y):
        data, prior, chain, summary = self._run_chain(X, y)
        self.data_ = data
        self.prior_ = prior
        self.chain_ = chain
        self.summary_ = summary
        self.intercept_ = float(summary.beta_tilde[0])
        self.coef_ = summary.beta_tilde[1:].copy()
        self.sigma0_ = summary.sigma0_hat
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        return self.intercept_ + X @ self.coef_

    def confint(self, level=0.95):
        return credible_interval(self.chain_, level)


class SandwichQuantileRegressor(BayesianQuantileRegressor):
    """Sandwich-corrected credible intervals for quantile regression.

    Runs the Gibbs chain, then replaces the working likelihood with a
    Gaussian whose covariance is the plug-in sandwich matrix, centred
    either at the posterior mean (``center="posterior"``) or at the
    classical check-loss fit (``center="classical"``).  ``coef_`` is
    the corrected posterior mean.
    """

    def __init__(self, tau=0.5, prior="flat", scale=1.0, center="posterior",
                 burn_in=2000, n_draws=1000, random_state=0):
        super().__init__(tau=tau, prior=prior, scale=scale, burn_in=burn_in,
                         n_draws=n_draws, random_state=random_state)
        self.center = center

    def fit(self, X, y):
        if self.center not in ("posterior", "classical"):
            raise ValueError("center must be 'posterior' or 'classical'")
        data, prior, chain, summary = self._run_chain(X, y)
        if self.center == "classical":
            centre = fit_classical_qr(data, self.tau).beta_m
            tag = "slqr"
        else:
            centre = summary.beta_tilde
            tag = "slba"
        inputs = SandwichInputs(center=centre, v_n_inv=summary.v_n_inv,
                                s_n=compute_s_n(data), n=data.n,
                                tau=float(self.tau), prior=prior)
        posterior = sandwich_posterior(inputs, method_tag=tag)
        self.data_ = data
        self.prior_ = prior
        self.chain_ = chain
        self.summary_ = summary
        self.posterior_ = posterior
        self.sigma_n_ = posterior.sigma_n
        self.sigma0_ = summary.sigma0_hat
        mean = posterior.form.mean
        self.intercept_ = float(mean[0])
        self.coef_ = mean[1:].copy()
        return self

    def confint(self, level=0.95):
        return credible_interval(self.posterior_, level)
