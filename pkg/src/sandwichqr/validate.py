"""Self-contained cross-check battery behind ``sandwichqr validate``.

Every check pits a production computation against an independent
reference (quadrature, closed forms, grid search, or plain Monte
Carlo) and prints one PASS/FAIL line.  The battery is deterministic:
all randomness uses fixed seeds.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate

from .ald import ald_cdf, ald_density, check_loss
from .classical import fit_classical_qr
from .dataset import Dataset
from .datagen import ModelSpec, generate_responses, sample_covariates, true_quantile
from .gibbs import (FixedScale, GibbsConfig, PriorSpec, effective_sample_size,
                    run_gibbs, sample_ald_mixture, sample_inverse_gaussian,
                    summarize_chain)
from .oracle import (brute_force_qr, default_grid, grid_posterior,
                     inverse_gaussian_cdf, ks_statistic)

__all__ = ["run_validation"]


def _report(name, ok, detail, verbose, failures):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    if verbose:
        print(line)
    if not ok:
        failures.append(name)


def _check_loss_identity(verbose, failures):
    rng = np.random.default_rng(11)
    u = rng.normal(scale=5.0, size=1000)
    worst = 0.0
    for tau in (0.05, 0.25, 0.5, 0.75, 0.95):
        gap = np.max(np.abs(check_loss(u, tau) + check_loss(-u, tau) - np.abs(u)))
        worst = max(worst, float(gap))
    _report("check-loss reflection identity", worst < 1e-12,
            f"max |rho(u)+rho(-u)-|u|| = {worst:.2e}", verbose, failures)


def _ald_normalisation(verbose, failures):
    worst = 0.0
    for tau in (0.05, 0.25, 0.5, 0.75, 0.95):
        for sigma in (0.5, 1.0, 2.0):
            left, _ = integrate.quad(
                lambda y: ald_density(y, 0.0, tau, sigma), -np.inf, 0.0)
            right, _ = integrate.quad(
                lambda y: ald_density(y, 0.0, tau, sigma), 0.0, np.inf)
            worst = max(worst, abs(left + right - 1.0))
    _report("asymmetric Laplace density normalisation", worst < 1e-8,
            f"max |integral - 1| = {worst:.2e}", verbose, failures)


def _ald_cdf_mode(verbose, failures):
    worst = 0.0
    for tau in (0.05, 0.25, 0.5, 0.75, 0.95):
        for sigma in (0.5, 1.0, 2.0):
            worst = max(worst, abs(ald_cdf(1.3, 1.3, tau, sigma) - tau))
    _report("cdf at the mode equals tau", worst < 1e-12,
            f"max |cdf(mu) - tau| = {worst:.2e}", verbose, failures)


def _mixture_ks(verbose, failures):
    rng = np.random.default_rng(23)
    draws = sample_ald_mixture(0.7, 0.25, 1.4, 100_000, rng)
    _, p = ks_statistic(draws, lambda y: ald_cdf(y, 0.7, 0.25, 1.4))
    _report("normal-exponential mixture vs closed-form cdf", p > 0.01,
            f"KS p = {p:.4f}", verbose, failures)


def _ig_moments(verbose, failures):
    rng = np.random.default_rng(37)
    x = sample_inverse_gaussian(2.0, 5.0, rng) * np.ones(1)  # warm scalar path
    x = sample_inverse_gaussian(np.full(1_000_000, 2.0), 5.0, rng)
    mean_ok = abs(float(x.mean()) - 2.0) < 0.01
    var_ok = abs(float(x.var()) - 1.6) < 0.05
    _report("inverse-Gaussian moments", mean_ok and var_ok,
            f"mean {x.mean():.4f} (want 2), var {x.var():.4f} (want 1.6)",
            verbose, failures)
    sub = x[:100_000]
    _, p = ks_statistic(sub, lambda t: inverse_gaussian_cdf(t, 2.0, 5.0))
    _report("inverse-Gaussian vs closed-form cdf", p > 0.01,
            f"KS p = {p:.4f}", verbose, failures)


def _classical_vs_grid(verbose, failures):
    rng = np.random.default_rng(5)
    n = 24
    x = rng.normal(size=n)
    y = 1.0 + 0.8 * x + rng.standard_t(df=3, size=n)
    data = Dataset.from_covariates(y, x)
    fit = fit_classical_qr(data, 0.3)
    coarse = brute_force_qr(data, 0.3, [(fit.beta_m[0] - 2, fit.beta_m[0] + 2, 201),
                                        (fit.beta_m[1] - 2, fit.beta_m[1] + 2, 201)])
    fine = brute_force_qr(data, 0.3, [(coarse[0] - 0.05, coarse[0] + 0.05, 201),
                                      (coarse[1] - 0.05, coarse[1] + 0.05, 201)])
    obj_grid = float(np.sum(check_loss(y - fine[0] - fine[1] * x, 0.3)))
    gap = abs(obj_grid - fit.objective)
    _report("classical fit vs grid search", gap < 1e-3 and fit.objective <= obj_grid + 1e-12,
            f"|objective gap| = {gap:.2e}", verbose, failures)


def _gibbs_vs_grid(verbose, failures):
    rng = np.random.default_rng(7)
    n = 25
    y = 0.5 + rng.normal(size=n)
    data = Dataset(y, np.ones((n, 1)))
    prior = PriorSpec(np.zeros(1), np.full(1, 100.0), FixedScale(1.0))
    chain = run_gibbs(data, 0.25, prior, GibbsConfig(2000, 4000, seed=3))
    summary = summarize_chain(chain, data, prior)
    sd = float(np.sqrt(summary.post_cov[0, 0]))
    mean, cov, _ = grid_posterior(
        data, 0.25, prior, 1.0,
        default_grid(summary.beta_tilde, [sd], half_width=10, steps=4001))
    ess = effective_sample_size(chain.beta_draws[:, 0])
    tol = 3.0 * sd / np.sqrt(ess)
    gap = abs(float(summary.beta_tilde[0]) - float(mean[0]))
    _report("Gibbs mean vs quadrature posterior", gap < tol,
            f"|mean gap| = {gap:.2e} vs 3 MC se = {tol:.2e}", verbose, failures)


def _quantile_identity(verbose, failures):
    rng = np.random.default_rng(13)
    rows = sample_covariates(5, rng)
    worst = 0.0
    for model in (1, 2, 3, 4):
        for tau in (0.25, 0.75):
            spec = ModelSpec(model, tau)
            for i in range(rows.shape[0]):
                X = np.tile(rows[i], (200_000, 1))
                y = generate_responses(spec, X, rng)
                frac = float(np.mean(y <= true_quantile(rows[i])))
                worst = max(worst, abs(frac - tau))
    _report("conditional quantile identity P(Y <= q | X) = tau", worst < 0.005,
            f"max |frac - tau| = {worst:.4f} over models x taus x 5 rows",
            verbose, failures)


def run_validation(verbose=True) -> list:
    """Run every cross-check; returns the list of failed check names."""
    failures = []
    _check_loss_identity(verbose, failures)
    _ald_normalisation(verbose, failures)
    _ald_cdf_mode(verbose, failures)
    _mixture_ks(verbose, failures)
    _ig_moments(verbose, failures)
    _classical_vs_grid(verbose, failures)
    _gibbs_vs_grid(verbose, failures)
    _quantile_identity(verbose, failures)
    if verbose:
        if failures:
            print(f"{len(failures)} check(s) FAILED: {', '.join(failures)}")
        else:
            print("all checks passed")
    return failures
