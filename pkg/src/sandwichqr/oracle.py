"""Brute-force reference implementations used by the test suite.

Everything here recomputes quantities from first principles with its
own arithmetic (explicit loops, trapezoid grids) rather than calling
the production kernels, so agreement between the two is meaningful
evidence.  None of it is performance sensitive.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

__all__ = [
    "GridTooSmallError",
    "grid_posterior",
    "default_grid",
    "brute_force_qr",
    "ks_statistic",
    "inverse_gaussian_cdf",
    "naive_s_n",
    "naive_matmul",
]


class GridTooSmallError(ValueError):
    """The integration grid leaves too much posterior mass on its edges."""


def _grid_axes(grid):
    axes, weights = [], []
    for lo, hi, steps in grid:
        lo, hi, steps = float(lo), float(hi), int(steps)
        if steps < 9 or hi <= lo:
            raise ValueError("each grid dimension needs lo < hi and >= 9 steps")
        ax = np.linspace(lo, hi, steps)
        h = ax[1] - ax[0]
        w = np.full(steps, h)
        w[0] = w[-1] = 0.5 * h  # trapezoid end weights
        axes.append(ax)
        weights.append(w)
    return axes, weights


def _log_post_on_grid(data, tau, prior, sigma, betas):
    """Unnormalised log posterior at each grid point, computed inline.

    The working log likelihood log(tau(1-tau)/sigma) - loss/sigma and
    the normal log prior are written out here on purpose; the oracle
    must not share code with the modules it checks.
    """
    m = betas.shape[0]
    if data is not None:
        resid = data.y[None, :] - betas @ data.X.T  # (m, n)
        loss = resid * (tau - (resid <= 0.0))
        loglik = (data.n * math.log(tau * (1.0 - tau) / sigma)
                  - loss.sum(axis=1) / sigma)
    else:
        loglik = np.zeros(m)
    lp = loglik
    for j in range(betas.shape[1]):
        var = prior.variance[j]
        lp = lp - 0.5 * (betas[:, j] - prior.mean[j]) ** 2 / var \
            - 0.5 * math.log(2.0 * math.pi * var)
    return lp


def grid_posterior(data, tau, prior, sigma, grid):
    """Trapezoid-rule posterior mean/covariance for p <= 2 problems.

    ``data=None`` integrates the prior alone (no likelihood term).
    Raises :class:`GridTooSmallError` when the boundary slices carry
    more than 1e-8 of the total mass, which signals that the grid does
    not cover the posterior.

    Returns ``(mean, cov, log_normalizer)``.
    """
    if len(grid) > 2:
        raise ValueError("grid posterior supports at most p = 2")
    if data is not None and data.p != len(grid):
        raise ValueError("grid dimension must equal the number of coefficients")
    axes, weights = _grid_axes(grid)
    mesh = np.meshgrid(*axes, indexing="ij")
    betas = np.column_stack([m.ravel() for m in mesh])
    w = weights[0]
    for wj in weights[1:]:
        w = np.multiply.outer(w, wj)
    w = w.ravel()

    lp = _log_post_on_grid(data, float(tau), prior, float(sigma), betas)
    peak = float(np.max(lp))
    dens = np.exp(lp - peak)
    mass = float(np.sum(w * dens))
    if mass <= 0.0:
        raise GridTooSmallError("no posterior mass on the grid")

    shape = tuple(len(a) for a in axes)
    dens_nd = (w * dens).reshape(shape)
    boundary = 0.0
    for axis in range(len(shape)):
        idx_lo = [slice(None)] * len(shape)
        idx_hi = [slice(None)] * len(shape)
        idx_lo[axis] = 0
        idx_hi[axis] = -1
        boundary += float(np.sum(dens_nd[tuple(idx_lo)]))
        boundary += float(np.sum(dens_nd[tuple(idx_hi)]))
    if boundary / mass > 1e-8:
        raise GridTooSmallError(
            f"boundary mass fraction {boundary / mass:.2e} exceeds 1e-8; "
            "widen the grid")

    prob = w * dens / mass
    mean = prob @ betas
    centred = betas - mean
    cov = (centred * prob[:, None]).T @ centred
    log_norm = peak + math.log(mass)
    return mean, np.atleast_2d(cov), log_norm


def default_grid(center, sds, half_width=8.0, steps=201):
    """Convenience grid builder: centre +/- half_width * sd per axis."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    sds = np.atleast_1d(np.asarray(sds, dtype=float))
    return [(c - half_width * s, c + half_width * s, int(steps))
            for c, s in zip(center, sds)]


def brute_force_qr(data, tau, grid):
    """Exhaustive check-loss minimisation over a coefficient grid.

    Evaluates every grid point (chunked to bound memory); the loss is
    written as ``tau r`` / ``(tau - 1) r`` branches rather than the
    indicator form the production code uses.
    """
    axes, _ = _grid_axes(grid)
    mesh = np.meshgrid(*axes, indexing="ij")
    betas = np.column_stack([m.ravel() for m in mesh])
    tau = float(tau)
    best_val = math.inf
    best = None
    n_chunks = max(1, betas.shape[0] // 65536)
    for chunk in np.array_split(betas, n_chunks):
        resid = data.y[None, :] - chunk @ data.X.T
        loss = np.where(resid > 0.0, tau * resid, (tau - 1.0) * resid).sum(axis=1)
        k = int(np.argmin(loss))
        if float(loss[k]) < best_val:
            best_val = float(loss[k])
            best = chunk[k]
    return np.asarray(best, dtype=float)


def ks_statistic(samples, cdf):
    """One-sample Kolmogorov-Smirnov statistic and asymptotic p-value.

    The p-value uses the Kolmogorov series with the Stephens small-n
    adjustment lambda = D (sqrt(n) + 0.12 + 0.11 / sqrt(n)).
    """
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.shape[0]
    if n < 100:
        raise ValueError("need at least 100 samples for the KS check")
    F = np.asarray(cdf(s), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = float(np.max(i / n - F))
    d_minus = float(np.max(F - (i - 1) / n))
    D = max(d_plus, d_minus)
    lam = D * (math.sqrt(n) + 0.12 + 0.11 / math.sqrt(n))
    total = 0.0
    for k in range(1, 101):
        term = 2.0 * (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
        total += term
        if abs(term) < 1e-12:
            break
    p = min(max(total, 0.0), 1.0)
    return D, p


def inverse_gaussian_cdf(x, mu, lam):
    """Closed-form IG(mu, lam) CDF, stable in the far tails via log-CDF."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x, dtype=float)
    pos = x > 0.0
    xp = x[pos]
    root = np.sqrt(lam / xp)
    a = _sp.log_ndtr(root * (xp / mu - 1.0))
    b = 2.0 * lam / mu + _sp.log_ndtr(-root * (xp / mu + 1.0))
    out[pos] = np.exp(a) + np.exp(b)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def naive_s_n(data):
    """Triple-loop second-moment matrix, the slow way on purpose."""
    n, p = data.n, data.p
    out = [[0.0] * p for _ in range(p)]
    for i in range(n):
        for a in range(p):
            for b in range(p):
                out[a][b] += float(data.X[i, a]) * float(data.X[i, b])
    return np.array(out) / n


def naive_matmul(A, B):
    """Schoolbook matrix product used to cross-check sandwich algebra."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n, k = A.shape
    k2, m = B.shape
    if k != k2:
        raise ValueError("inner dimensions differ")
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for t in range(k):
                acc += A[i, t] * B[t, j]
            out[i, j] = acc
    return out
