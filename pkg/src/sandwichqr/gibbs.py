"""Gibbs sampling from the asymmetric-Laplace working posterior.

The asymmetric Laplace admits a normal-exponential mixture: with
``theta = (1 - 2 tau) / (tau (1 - tau))`` and
``psi^2 = 2 / (tau (1 - tau))``,

    y_i = x_i' beta + theta v_i + psi sqrt(sigma v_i) u_i,
    v_i ~ Exponential(mean sigma),  u_i ~ N(0, 1),

has exactly the asymmetric Laplace law with mode ``x_i' beta`` and
scale ``sigma``.  Conditioning on the latent ``v`` makes beta Gaussian,
``1 / v_i`` inverse-Gaussian, and sigma inverse-gamma-form, so the
sampler cycles v, beta, sigma in closed form.

The chain summary feeds the sandwich correction: the posterior draw
covariance times ``n / sigma0_hat`` estimates the inverse curvature
``V_n^{-1}`` of the working likelihood at its peak.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _stats

from .dataset import Dataset
from .validation import as_finite_array, check_positive, check_tau

__all__ = [
    "FixedScale",
    "RandomScale",
    "PriorSpec",
    "GibbsConfig",
    "Chain",
    "PosteriorSummary",
    "GibbsOverflowError",
    "SingularCovarianceError",
    "flat_prior",
    "informative_prior",
    "beta_full_conditional",
    "sample_inverse_gaussian",
    "sample_ald_mixture",
    "run_gibbs",
    "summarize_chain",
    "save_chain_csv",
    "effective_sample_size",
]


class GibbsOverflowError(RuntimeError):
    """Latent-variable update produced non-finite values."""


class SingularCovarianceError(ValueError):
    """Chain too degenerate for a usable posterior covariance."""


@dataclass(frozen=True)
class FixedScale:
    """Keep the working-likelihood scale fixed at ``sigma0``."""

    sigma0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "sigma0", check_positive(self.sigma0, "sigma0"))


@dataclass(frozen=True)
class RandomScale:
    """Put a prior on the scale and sample it inside the chain.

    ``family="invgamma"`` means density proportional to
    ``s^(-shape-1) exp(-rate / s)`` (``rate`` is the numerator scale),
    ``family="gamma"`` means ``s^(shape-1) exp(-rate s)``.  An optional
    compact ``support = (s1, s2)`` restricts draws by rejection.
    """

    shape: float
    rate: float
    family: str = "invgamma"
    support: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "shape", check_positive(self.shape, "shape"))
        object.__setattr__(self, "rate", check_positive(self.rate, "rate"))
        if self.family not in ("invgamma", "gamma"):
            raise ValueError(f"unknown scale family {self.family!r}")
        if self.support is not None:
            s1, s2 = (float(self.support[0]), float(self.support[1]))
            if not 0.0 < s1 < s2:
                raise ValueError("support must satisfy 0 < s1 < s2")
            object.__setattr__(self, "support", (s1, s2))


@dataclass(frozen=True)
class PriorSpec:
    """Independent normal prior per coefficient plus a scale rule."""

    mean: np.ndarray
    variance: np.ndarray
    scale_rule: FixedScale | RandomScale = FixedScale(1.0)

    def __post_init__(self):
        mean = as_finite_array(self.mean, "prior mean", ndim=1)
        var = as_finite_array(self.variance, "prior variance", ndim=1)
        if mean.shape != var.shape:
            raise ValueError("prior mean and variance must have the same length")
        if np.any(var <= 0.0):
            raise ValueError("prior variances must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", var)

    @property
    def p(self) -> int:
        return self.mean.shape[0]


def flat_prior(p=3, scale_rule=FixedScale(1.0)) -> PriorSpec:
    """Weakly informative default: independent N(0, 100) per coefficient."""
    return PriorSpec(np.zeros(p), np.full(p, 100.0), scale_rule)


def informative_prior(scale_rule=FixedScale(1.0)) -> PriorSpec:
    """Unit-variance normals centred near the simulation truth (1, 2, 3)."""
    return PriorSpec(np.array([0.9, 2.1, 2.9]), np.ones(3), scale_rule)


@dataclass(frozen=True)
class GibbsConfig:
    burn_in: int = 2000
    n_draws: int = 1000
    seed: int = 0

    def __post_init__(self):
        if int(self.n_draws) < 1:
            raise ValueError("n_draws must be at least 1")
        if int(self.burn_in) < 0:
            raise ValueError("burn_in cannot be negative")
        object.__setattr__(self, "burn_in", int(self.burn_in))
        object.__setattr__(self, "n_draws", int(self.n_draws))


@dataclass(frozen=True)
class Chain:
    """Stored post-burn-in states plus light diagnostics."""

    beta_draws: np.ndarray
    sigma_draws: np.ndarray
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PosteriorSummary:
    """Chain moments in the form the sandwich step consumes.

    ``post_cov`` is the raw draw covariance; ``v_n_inv`` is the same
    matrix rescaled by ``n / sigma0_hat`` so it estimates the inverse
    curvature of the working likelihood.
    """

    beta_tilde: np.ndarray
    post_cov: np.ndarray
    v_n_inv: np.ndarray
    sigma0_hat: float


def _mixture_constants(tau):
    theta = (1.0 - 2.0 * tau) / (tau * (1.0 - tau))
    psi2 = 2.0 / (tau * (1.0 - tau))
    return theta, psi2


def sample_inverse_gaussian(mu, lam, rng):
    """Draw from the inverse Gaussian IG(mu, lam), elementwise.

    Michael-Schucany-Haas transform method.  The root is computed as
    ``2 mu lam / (mu w + 2 lam + s)`` with ``s^2 = mu w (mu w + 4 lam)``,
    which avoids the cancellation in the textbook ``mu w - s`` form when
    ``mu w >> lam``.
    """
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(mu <= 0.0) or np.any(lam <= 0.0):
        raise ValueError("inverse-Gaussian parameters must be positive")
    shape = np.broadcast_shapes(mu.shape, lam.shape)
    nu = rng.standard_normal(shape)
    w = nu * nu
    muw = mu * w
    s = np.sqrt(muw * (muw + 4.0 * lam))
    x1 = 2.0 * mu * lam / (muw + 2.0 * lam + s)
    accept = rng.random(shape) <= mu / (mu + x1)
    out = np.where(accept, x1, mu * mu / x1)
    return float(out) if out.ndim == 0 else out


def sample_ald_mixture(mu, tau, sigma, size, rng):
    """Draw asymmetric-Laplace variates through the normal-exponential mixture."""
    tau = check_tau(tau)
    sigma = check_positive(sigma, "sigma")
    theta, psi2 = _mixture_constants(tau)
    v = rng.exponential(scale=sigma, size=size)
    return mu + theta * v + np.sqrt(psi2 * sigma * v) * rng.standard_normal(size)


def beta_full_conditional(data: Dataset, v, sigma, tau, prior: PriorSpec):
    """Gaussian full conditional of beta given the latent vector ``v``.

    Returns ``(mean, covariance)`` where precision =
    prior precision + sum_i x_i x_i' / (psi^2 sigma v_i) and mean solves
    precision @ mean = prior precision @ prior mean
    + sum_i x_i (y_i - theta v_i) / (psi^2 sigma v_i).
    """
    tau = check_tau(tau)
    sigma = check_positive(sigma, "sigma")
    v = as_finite_array(v, "v", ndim=1)
    if v.shape[0] != data.n:
        raise ValueError("v must have one entry per observation")
    if np.any(v <= 0.0):
        raise ValueError("latent values must be positive")
    theta, psi2 = _mixture_constants(tau)
    wt = 1.0 / (psi2 * sigma * v)
    Xw = data.X * wt[:, None]
    prec = np.diag(1.0 / prior.variance) + Xw.T @ data.X
    rhs = prior.mean / prior.variance + Xw.T @ (data.y - theta * v)
    cov = np.linalg.inv(prec)
    cov = 0.5 * (cov + cov.T)
    return cov @ rhs, cov


def _init_sigma(rule):
    if isinstance(rule, FixedScale):
        return rule.sigma0
    if rule.family == "invgamma":
        init = rule.rate / (rule.shape + 1.0)  # prior mode
    else:
        init = rule.shape / rule.rate  # prior mean
    if rule.support is not None:
        init = min(max(init, rule.support[0]), rule.support[1])
    return init


def _draw_sigma(rule, n, A, rng, clamp_counter):
    """Scale full conditional: density proportional to

    prior(s) * s^(-3n/2) * exp(-A / s),  A = sum d~_i^2/(2 psi^2 v_i) + sum v_i.
    """
    if rule.family == "invgamma":
        shape_post = rule.shape + 1.5 * n
        scale_post = rule.rate + A
        for _ in range(1000):
            sigma = scale_post / rng.standard_gamma(shape_post)
            if rule.support is None or rule.support[0] <= sigma <= rule.support[1]:
                return sigma
    else:
        # Gamma(shape, rate) prior gives a generalised-inverse-Gaussian
        # conditional GIG(p = shape - 3n/2, a = 2 rate, b = 2A).
        p_gig = rule.shape - 1.5 * n
        a_gig = 2.0 * rule.rate
        b_gig = 2.0 * A
        b_sc = np.sqrt(a_gig * b_gig)
        scale = np.sqrt(b_gig / a_gig)
        for _ in range(1000):
            sigma = float(_stats.geninvgauss.rvs(p_gig, b_sc, scale=scale,
                                                 random_state=rng))
            if rule.support is None or rule.support[0] <= sigma <= rule.support[1]:
                return sigma
    # rejection exhausted: clamp to the nearest bound and record it
    clamp_counter[0] += 1
    warnings.warn("scale rejection sampling exhausted; clamping to support",
                  RuntimeWarning, stacklevel=3)
    return min(max(sigma, rule.support[0]), rule.support[1])


def run_gibbs(data: Dataset, tau, prior: PriorSpec, config: GibbsConfig) -> Chain:
    """Run the latent-variable Gibbs sampler and keep post-burn-in states.

    One cycle updates, in order, the latents (``1/v_i`` is inverse
    Gaussian), beta (Gaussian), and sigma under a ``RandomScale`` rule.
    Bit-identical output for identical ``(data, prior, config)``.
    """
    tau = check_tau(tau)
    if prior.p != data.p:
        raise ValueError(f"prior has length {prior.p} but the design has p={data.p}")
    y, X = data.y, data.X
    n, p = data.n, data.p
    theta, psi2 = _mixture_constants(tau)
    rng = np.random.default_rng(config.seed)

    prior_prec = 1.0 / prior.variance
    prec_base = np.diag(prior_prec)
    rhs_base = prior.mean * prior_prec
    mu_coef = 1.0 / (tau * (1.0 - tau))
    lam_coef = 0.5 * mu_coef

    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    rule = prior.scale_rule
    random_scale = isinstance(rule, RandomScale)
    sigma = _init_sigma(rule)

    beta_out = np.empty((config.n_draws, p))
    sigma_out = np.empty(config.n_draws)
    clamped = [0]
    total = config.burn_in + config.n_draws
    for t in range(total):
        d = y - X @ beta
        absd = np.abs(d)
        np.maximum(absd, 1e-100, out=absd)  # guard the 1/|d| mean parameter
        w = sample_inverse_gaussian(mu_coef / absd, lam_coef / sigma, rng)
        v = 1.0 / w
        wt = w / (psi2 * sigma)
        Xw = X * wt[:, None]
        prec = prec_base + Xw.T @ X
        rhs = rhs_base + Xw.T @ (y - theta * v)
        try:
            L = np.linalg.cholesky(prec)
        except np.linalg.LinAlgError as exc:
            raise GibbsOverflowError(
                f"singular full-conditional precision at iteration {t}") from exc
        mean = np.linalg.solve(prec, rhs)
        beta = mean + np.linalg.solve(L.T, rng.standard_normal(p))
        if random_scale:
            dt = (y - X @ beta) - theta * v
            A = float(np.sum(dt * dt * w)) / (2.0 * psi2) + float(np.sum(v))
            sigma = _draw_sigma(rule, n, A, rng, clamped)
        if not np.all(np.isfinite(beta)) or not np.isfinite(sigma):
            raise GibbsOverflowError(
                f"non-finite state in latent update at iteration {t}")
        if t >= config.burn_in:
            k = t - config.burn_in
            beta_out[k] = beta
            sigma_out[k] = sigma
    return Chain(beta_draws=beta_out, sigma_draws=sigma_out,
                 diagnostics={"sigma_clamped": clamped[0], "tau": tau})


def summarize_chain(chain: Chain, data: Dataset, prior: PriorSpec) -> PosteriorSummary:
    """Reduce a chain to (mean, covariance, rescaled curvature, scale).

    ``sigma0_hat`` is the fixed scale under ``FixedScale`` and the
    posterior mean of the sigma draws under ``RandomScale``;
    ``v_n_inv = (n / sigma0_hat) * post_cov``.
    """
    draws = np.asarray(chain.beta_draws, dtype=float)
    if draws.ndim != 2 or draws.shape[0] == 0:
        raise ValueError("chain is empty")
    m, p = draws.shape
    if np.unique(draws, axis=0).shape[0] < p + 1:
        raise SingularCovarianceError(
            f"need at least p+1={p + 1} distinct draws for a covariance")
    beta_tilde = draws.mean(axis=0)
    post_cov = np.cov(draws, rowvar=False, ddof=1)
    post_cov = np.atleast_2d(post_cov)
    post_cov = _repair_psd(post_cov, "posterior covariance")
    if isinstance(prior.scale_rule, FixedScale):
        sigma0_hat = prior.scale_rule.sigma0
    else:
        sigma0_hat = float(np.mean(chain.sigma_draws))
    v_n_inv = (data.n / sigma0_hat) * post_cov
    return PosteriorSummary(beta_tilde=beta_tilde, post_cov=post_cov,
                            v_n_inv=v_n_inv, sigma0_hat=sigma0_hat)


def _repair_psd(mat, name):
    """Jitter the diagonal (1e-10 * mean diagonal) if Cholesky fails."""
    try:
        np.linalg.cholesky(mat)
        return mat
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-10 * float(np.trace(mat)) / mat.shape[0]
    repaired = mat + jitter * np.eye(mat.shape[0])
    try:
        np.linalg.cholesky(repaired)
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError(f"{name} is not positive definite") from exc
    warnings.warn(f"{name} needed a diagonal jitter of {jitter:.3e}",
                  RuntimeWarning, stacklevel=2)
    return repaired


def save_chain_csv(chain: Chain, path) -> None:
    """Dump a chain as CSV: one row per draw, columns beta1..beta_p, sigma."""
    draws = np.asarray(chain.beta_draws, dtype=float)
    sig = np.asarray(chain.sigma_draws, dtype=float)
    p = draws.shape[1]
    with open(path, "w") as fh:
        fh.write(",".join([f"beta{j + 1}" for j in range(p)] + ["sigma"]) + "\n")
        for k in range(draws.shape[0]):
            vals = [repr(float(v)) for v in draws[k]] + [repr(float(sig[k]))]
            fh.write(",".join(vals) + "\n")


def effective_sample_size(x) -> float:
    """Autocorrelation-adjusted sample size of a scalar chain.

    Uses Geyer's initial positive sequence: sum consecutive
    autocorrelation pairs until a pair sum goes nonpositive.
    """
    x = as_finite_array(x, "draws", ndim=1)
    m = x.shape[0]
    if m < 4:
        return float(m)
    x = x - x.mean()
    var = float(np.dot(x, x)) / m
    if var == 0.0:
        return float(m)
    # autocovariances up to half the chain length
    kmax = m // 2
    acov = np.array([np.dot(x[:m - k], x[k:]) / m for k in range(kmax)])
    rho = acov / var
    s = 0.0
    for k in range(1, kmax - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0.0:
            break
        s += pair
    ess = m / (1.0 + 2.0 * s)
    return float(min(max(ess, 1.0), m))
