"""Check loss and the asymmetric Laplace working density.

The tau-th conditional quantile minimises the expected check loss
``rho_tau(u) = u * (tau - 1{u <= 0})``.  Exponentiating the negative
loss gives an asymmetric Laplace density with mode ``mu`` and scale
``sigma``,

    f(y) = tau * (1 - tau) / sigma * exp(-rho_tau(y - mu) / sigma),

which is the working likelihood behind the Gibbs sampler in
:mod:`sandwichqr.gibbs`.  Because the density is a two-sided
exponential, its CDF and quantile function have closed forms; both are
implemented here rather than by numerical integration.
"""

from __future__ import annotations

import numpy as np

from .validation import check_positive, check_tau

__all__ = [
    "check_loss",
    "ald_log_density",
    "ald_density",
    "ald_cdf",
    "ald_quantile",
]


def check_loss(u, tau):
    """Asymmetric check loss ``rho_tau(u) = u * (tau - 1{u <= 0})``.

    Parameters
    ----------
    u : array_like
        Residual(s).
    tau : float
        Quantile level in (0, 1).

    Returns
    -------
    float or ndarray
        Nonnegative loss, zero exactly at ``u = 0``.  Piecewise linear
        and convex in ``u``.
    """
    tau = check_tau(tau)
    u = np.asarray(u, dtype=float)
    out = u * (tau - (u <= 0.0))
    return float(out) if out.ndim == 0 else out


def ald_log_density(y, mu, tau, sigma=1.0):
    """Log density of the asymmetric Laplace with mode ``mu``, scale ``sigma``.

    ``log(tau * (1 - tau) / sigma) - rho_tau(y - mu) / sigma``; maximal
    over ``y`` at ``y = mu``.
    """
    tau = check_tau(tau)
    sigma = check_positive(sigma, "sigma")
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    out = np.log(tau * (1.0 - tau) / sigma) - check_loss(y - mu, tau) / sigma
    return float(out) if np.ndim(out) == 0 else out


def ald_density(y, mu, tau, sigma=1.0):
    """Density ``exp(ald_log_density(...))``."""
    return np.exp(ald_log_density(y, mu, tau, sigma))


def ald_cdf(y, mu, tau, sigma=1.0):
    """Closed-form CDF of the asymmetric Laplace.

    Integrating the two exponential branches:

        y <= mu:  tau * exp((1 - tau) * (y - mu) / sigma)
        y >  mu:  1 - (1 - tau) * exp(-tau * (y - mu) / sigma)

    so that ``ald_cdf(mu, mu, tau, sigma) == tau`` exactly.
    """
    tau = check_tau(tau)
    sigma = check_positive(sigma, "sigma")
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    z = (y - mu) / sigma
    # evaluate both branches on clipped arguments to avoid overflow warnings
    lower = tau * np.exp((1.0 - tau) * np.minimum(z, 0.0))
    upper = 1.0 - (1.0 - tau) * np.exp(-tau * np.maximum(z, 0.0))
    out = np.where(z <= 0.0, lower, upper)
    return float(out) if np.ndim(out) == 0 else out


def ald_quantile(q, mu, tau, sigma=1.0):
    """Quantile function (inverse of :func:`ald_cdf`).

    For ``q <= tau`` invert the lower exponential branch, otherwise the
    upper one.  ``q = 0`` and ``q = 1`` map to -inf/+inf.
    """
    tau = check_tau(tau)
    sigma = check_positive(sigma, "sigma")
    q = np.asarray(q, dtype=float)
    if np.any((q < 0.0) | (q > 1.0)):
        raise ValueError("quantile levels must lie in [0, 1]")
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore"):
        lower = mu + sigma * np.log(np.minimum(q, tau) / tau) / (1.0 - tau)
        upper = mu - sigma * np.log(np.maximum(1.0 - q, 0.0) / (1.0 - tau)) / tau
    out = np.where(q <= tau, lower, upper)
    return float(out) if np.ndim(out) == 0 else out
