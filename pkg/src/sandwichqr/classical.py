"""Classical quantile regression and pair-bootstrap confidence intervals.

The point estimate minimises the exact check-loss sum.  The solver runs
iteratively reweighted least squares on a smoothed surrogate
``sqrt(r^2 + eps^2)/2 + (tau - 1/2) r`` (a majorise-minimise scheme,
so each solve cannot increase the surrogate), anneals ``eps`` down to
1e-10, then polishes with exact coordinate-wise line searches on the
true piecewise-linear objective.  Each polish step lands on a breakpoint
where the coordinate subgradient changes sign, so the final point is
coordinate-wise optimal; a grid-search oracle cross-checks global
optimality in the test suite.

Confidence intervals come from resampling (y_i, x_i) pairs with
replacement and refitting, which stays valid under heteroscedastic
designs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ald import check_loss
from .dataset import Dataset, DegenerateDesignError
from .validation import as_finite_array, check_level, check_tau

__all__ = ["QrFit", "IntervalSet", "fit_classical_qr", "bootstrap_intervals"]


@dataclass(frozen=True)
class QrFit:
    """Check-loss minimiser ``beta_m`` and the attained objective."""

    beta_m: np.ndarray
    objective: float


@dataclass(frozen=True)
class IntervalSet:
    """Per-coefficient interval endpoints at a common confidence level."""

    lower: np.ndarray
    upper: np.ndarray
    level: float

    def __post_init__(self):
        lower = as_finite_array(self.lower, "lower", ndim=1)
        upper = as_finite_array(self.upper, "upper", ndim=1)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "level", check_level(self.level))
        if lower.shape != upper.shape:
            raise ValueError("lower and upper must have matching shapes")
        if np.any(lower > upper):
            raise ValueError("interval endpoints out of order")

    @property
    def lengths(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, beta) -> np.ndarray:
        beta = as_finite_array(beta, "beta", ndim=1)
        return (self.lower <= beta) & (beta <= self.upper)


def _objective(y, X, beta, tau):
    return float(np.sum(check_loss(y - X @ beta, tau)))


def _irls(y, X, tau):
    """Annealed IRLS on the smoothed check loss. Returns a warm start."""
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ beta
    const = (tau - 0.5) * X.sum(axis=0)
    spread = float(np.median(np.abs(r - np.median(r)))) if len(r) else 1.0
    eps = max(spread, 1e-3)
    while True:
        final = eps <= 1e-10
        # intermediate stages only steer toward the solution; the exact
        # coordinate polish afterwards supplies the final accuracy
        tol, max_inner = (1e-9, 40) if final else (1e-5, 12)
        for _ in range(max_inner):
            w = 0.5 / np.sqrt(r * r + eps * eps)
            Xw = X * w[:, None]
            A = Xw.T @ X
            rhs = Xw.T @ y + const
            try:
                new = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError as exc:
                raise DegenerateDesignError(
                    "weighted normal equations are singular") from exc
            step = float(np.max(np.abs(new - beta)))
            beta = new
            r = y - X @ beta
            if step < tol * (1.0 + float(np.max(np.abs(beta)))):
                break
        if final:
            break
        eps = max(eps * 0.02, 1e-10)
    return beta, r


def _polish(y, X, tau, beta, r, max_sweeps=60):
    """Exact coordinate-wise minimisation of the piecewise-linear objective.

    For coordinate j with column a, the one-dimensional objective is
    sum_i rho_tau(c_i - a_i t) with breakpoints t_i = c_i / a_i.  Its
    right derivative jumps by |a_i| at each breakpoint; the minimiser is
    the first breakpoint (in sorted order) where the cumulative slope
    becomes nonnegative.
    """
    n, p = X.shape
    obj = float(np.sum(check_loss(r, tau)))
    for _ in range(max_sweeps):
        moved = False
        for j in range(p):
            a = X[:, j]
            nz = a != 0.0
            if not nz.any():
                continue
            anz = a[nz]
            c = r[nz] + anz * beta[j]
            t = c / anz
            jumps = np.abs(anz)
            # slope of f(t) as t -> -inf: -a*tau for a > 0, (1-tau)*a for a < 0
            base = -tau * np.sum(anz[anz > 0.0]) + (1.0 - tau) * np.sum(anz[anz < 0.0])
            order = np.argsort(t, kind="stable")
            cum = base + np.cumsum(jumps[order])
            k = int(np.argmax(cum >= 0.0))
            t_new = float(t[order[k]])
            if t_new != beta[j]:
                r = r - a * (t_new - beta[j])
                beta = beta.copy()
                beta[j] = t_new
                moved = True
        new_obj = float(np.sum(check_loss(r, tau)))
        if not moved or new_obj >= obj - 1e-14 * (1.0 + obj):
            obj = min(obj, new_obj)
            break
        obj = new_obj
    return beta, obj


def _line_search(y, X, tau, beta, r, d):
    """Exact minimisation of ``t -> sum_i rho_tau(r_i - t (Xd)_i)``.

    Same breakpoint argument as one coordinate of the polish, with the
    column replaced by the directional image X @ d.
    """
    a = X @ d
    nz = a != 0.0
    if not nz.any():
        return beta, r, False
    anz = a[nz]
    t = r[nz] / anz
    jumps = np.abs(anz)
    base = -tau * np.sum(anz[anz > 0.0]) + (1.0 - tau) * np.sum(anz[anz < 0.0])
    order = np.argsort(t, kind="stable")
    cum = base + np.cumsum(jumps[order])
    k = int(np.argmax(cum >= 0.0))
    t_star = float(t[order[k]])
    if t_star == 0.0:
        return beta, r, False
    return beta + t_star * d, r - t_star * a, True


def _fit_qr_arrays(y, X, tau):
    beta, r = _irls(y, X, tau)
    beta, obj = _polish(y, X, tau, beta, r)
    const = (tau - 0.5) * X.sum(axis=0)
    # Coordinate descent can stall on a vertex that a diagonal move would
    # improve.  Escape by exact line searches along smoothed Newton
    # directions, re-polishing after each successful move.
    scale = 1.0 + float(np.max(np.abs(beta)))
    for _ in range(8):
        r = y - X @ beta
        eps = 1e-6 * (1.0 + float(np.median(np.abs(r))))
        w = 0.5 / np.sqrt(r * r + eps * eps)
        Xw = X * w[:, None]
        try:
            target = np.linalg.solve(Xw.T @ X, Xw.T @ y + const)
        except np.linalg.LinAlgError:
            break
        d = target - beta
        if float(np.max(np.abs(d))) < 1e-12 * scale:
            break
        beta2, r2, moved = _line_search(y, X, tau, beta, r, d)
        if not moved:
            break
        beta2, obj2 = _polish(y, X, tau, beta2, r2)
        if obj2 >= obj - 1e-13 * (1.0 + obj):
            if obj2 < obj:
                beta, obj = beta2, obj2
            break
        beta, obj = beta2, obj2
    return beta, obj


def fit_classical_qr(data: Dataset, tau) -> QrFit:
    """Minimise ``sum_i rho_tau(y_i - x_i' beta)`` over beta.

    Parameters
    ----------
    data : Dataset
    tau : float
        Quantile level in (0, 1).
    """
    tau = check_tau(tau)
    beta, obj = _fit_qr_arrays(data.y, data.X, tau)
    return QrFit(beta_m=beta, objective=obj)


def bootstrap_intervals(data: Dataset, tau, B=600, level=0.95, seed=0) -> IntervalSet:
    """Equal-tailed percentile intervals from the xy-pair bootstrap.

    Resamples rows with replacement and refits; resamples whose design
    is rank deficient are redrawn (bounded retries).  Deterministic for
    a fixed ``seed``.
    """
    tau = check_tau(tau)
    level = check_level(level)
    B = int(B)
    if B < 100:
        raise ValueError(f"need at least 100 bootstrap resamples, got {B}")
    rng = np.random.default_rng(seed)
    y, X, n = data.y, data.X, data.n
    betas = np.empty((B, data.p))
    for b in range(B):
        beta = None
        for _ in range(100):
            idx = rng.integers(0, n, size=n)
            try:
                beta, _ = _fit_qr_arrays(y[idx], X[idx], tau)
                break
            except (DegenerateDesignError, np.linalg.LinAlgError):
                continue
        if beta is None:
            raise DegenerateDesignError(
                "bootstrap resampling kept producing rank-deficient designs")
        betas[b] = beta
    alpha = 0.5 * (1.0 - level)
    lower = np.quantile(betas, alpha, axis=0)
    upper = np.quantile(betas, 1.0 - alpha, axis=0)
    return IntervalSet(lower=lower, upper=upper, level=level)
