import numpy as np
import pytest

from sandwichqr.dataset import Dataset
from sandwichqr.gibbs import (Chain, GibbsConfig, PriorSpec,
                              effective_sample_size, flat_prior)
from sandwichqr.oracle import naive_matmul, naive_s_n
from sandwichqr.sandwich import (ClosedFormGaussian, Draws, SandwichInputs,
                                 SandwichPosterior, compute_s_n,
                                 compute_sigma_n, credible_interval,
                                 sandwich_posterior)


def _random_inputs(seed=0, p=3, n=500, prior=None):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(p, p))
    v_n_inv = A @ A.T + p * np.eye(p)
    B = rng.normal(size=(p, p))
    s_n = B @ B.T + p * np.eye(p)
    center = rng.normal(size=p)
    if prior is None:
        prior = PriorSpec(rng.normal(size=p), rng.uniform(0.5, 4.0, size=p))
    return SandwichInputs(center=center, v_n_inv=v_n_inv, s_n=s_n, n=n,
                          tau=0.25, prior=prior)


# ------------------------------------------------------------- the algebra

def test_s_n_matches_triple_loop():
    rng = np.random.default_rng(1)
    X = np.column_stack([np.ones(30), rng.normal(size=(30, 2))])
    data = Dataset(rng.normal(size=30), X)
    np.testing.assert_allclose(compute_s_n(data), naive_s_n(data), atol=1e-12)


def test_sigma_n_matches_schoolbook_product():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(3, 3))
    v_inv = A @ A.T + 3.0 * np.eye(3)
    B = rng.normal(size=(3, 3))
    s = B @ B.T + 3.0 * np.eye(3)
    tau = 0.3
    got = compute_sigma_n(v_inv, s, tau)
    want = tau * (1.0 - tau) * naive_matmul(naive_matmul(v_inv, s), v_inv)
    np.testing.assert_allclose(got, want, atol=1e-10)
    np.testing.assert_allclose(got, got.T, atol=0)


def test_inputs_validation():
    rng = np.random.default_rng(3)
    good = _random_inputs()
    asym = good.v_n_inv.copy()
    asym[0, 1] += 1.0
    with pytest.raises(ValueError):
        SandwichInputs(center=good.center, v_n_inv=asym, s_n=good.s_n,
                       n=good.n, tau=good.tau, prior=good.prior)
    with pytest.raises(ValueError):
        SandwichInputs(center=good.center[:2], v_n_inv=good.v_n_inv,
                       s_n=good.s_n, n=good.n, tau=good.tau, prior=good.prior)
    with pytest.raises(ValueError):
        SandwichInputs(center=good.center, v_n_inv=good.v_n_inv,
                       s_n=good.s_n, n=0, tau=good.tau, prior=good.prior)
    with pytest.raises(ValueError):
        SandwichInputs(center=good.center, v_n_inv=good.v_n_inv,
                       s_n=good.s_n, n=good.n, tau=1.5, prior=good.prior)


# ------------------------------------------------------- closed-form update

def test_conjugate_update_matches_direct_inverse_formula():
    inputs = _random_inputs(seed=4)
    post = sandwich_posterior(inputs)
    sigma_n = compute_sigma_n(inputs.v_n_inv, inputs.s_n, inputs.tau)
    lik_prec = inputs.n * np.linalg.inv(sigma_n)
    prior_prec = np.diag(1.0 / inputs.prior.variance)
    cov = np.linalg.inv(lik_prec + prior_prec)
    mean = cov @ (lik_prec @ inputs.center
                  + inputs.prior.mean / inputs.prior.variance)
    assert isinstance(post.form, ClosedFormGaussian)
    np.testing.assert_allclose(post.form.cov, cov, rtol=1e-8)
    np.testing.assert_allclose(post.form.mean, mean, rtol=1e-8)
    np.testing.assert_allclose(post.sigma_n, sigma_n, rtol=1e-12)


def test_flat_prior_limit_recovers_sandwich_spread():
    prior = PriorSpec(np.zeros(3), np.full(3, 1e12))
    inputs = _random_inputs(seed=5, prior=prior)
    post = sandwich_posterior(inputs)
    np.testing.assert_allclose(post.form.mean, inputs.center, atol=1e-7)
    np.testing.assert_allclose(post.form.cov, post.sigma_n / inputs.n,
                               rtol=1e-6)


def test_one_dimensional_normal_normal_textbook_formula():
    prior = PriorSpec(np.array([1.0]), np.array([4.0]))
    inputs = SandwichInputs(center=np.array([3.0]),
                            v_n_inv=np.array([[2.0]]),
                            s_n=np.array([[0.5]]), n=100, tau=0.5,
                            prior=prior)
    post = sandwich_posterior(inputs)
    sig2 = 0.25 * 2.0 * 0.5 * 2.0   # tau(1-tau) V^-1 S V^-1
    lik_var = sig2 / 100.0
    want_var = 1.0 / (1.0 / lik_var + 1.0 / 4.0)
    want_mean = want_var * (3.0 / lik_var + 1.0 / 4.0)
    assert post.form.cov[0, 0] == pytest.approx(want_var, rel=1e-12)
    assert post.form.mean[0] == pytest.approx(want_mean, rel=1e-12)


def test_centers_shift_mean_but_not_covariance():
    base = _random_inputs(seed=6)
    other_center = base.center + np.array([0.5, -1.0, 2.0])
    moved = SandwichInputs(center=other_center, v_n_inv=base.v_n_inv,
                           s_n=base.s_n, n=base.n, tau=base.tau,
                           prior=base.prior)
    post_a = sandwich_posterior(base, method_tag="slba")
    post_b = sandwich_posterior(moved, method_tag="slqr")
    np.testing.assert_allclose(post_a.form.cov, post_b.form.cov, rtol=1e-12)
    lik_prec = base.n * np.linalg.inv(post_a.sigma_n)
    shift = post_a.form.cov @ lik_prec @ (other_center - base.center)
    np.testing.assert_allclose(post_b.form.mean - post_a.form.mean, shift,
                               rtol=1e-8)
    assert post_a.method_tag == "slba"
    assert post_b.method_tag == "slqr"


def test_prior_length_mismatch_rejected():
    inputs = _random_inputs(seed=7, prior=flat_prior(2))
    # construction succeeds (prior length is checked at posterior time for
    # PriorSpec), the posterior call must refuse
    with pytest.raises(ValueError):
        sandwich_posterior(inputs)


def test_non_positive_definite_sigma_raises():
    prior = flat_prior(2)
    center = np.zeros(2)
    v = np.eye(2)
    s = np.diag([1.0, -1.0])  # indefinite moments make Sigma_n indefinite
    inputs = SandwichInputs(center=center, v_n_inv=v, s_n=s, n=10, tau=0.5,
                            prior=prior)
    with pytest.raises(np.linalg.LinAlgError):
        sandwich_posterior(inputs)


# --------------------------------------------------------- metropolis path

def test_metropolis_agrees_with_closed_form():
    prior = PriorSpec(np.array([0.5, -0.5]), np.array([2.0, 1.0]))
    rng = np.random.default_rng(8)
    A = rng.normal(size=(2, 2))
    inputs = SandwichInputs(center=np.array([1.0, 2.0]),
                            v_n_inv=A @ A.T + 2.0 * np.eye(2),
                            s_n=np.eye(2), n=200, tau=0.25, prior=prior)
    closed = sandwich_posterior(inputs)

    def log_prior(beta):
        return float(-0.5 * np.sum((beta - prior.mean) ** 2 / prior.variance))

    sampled = sandwich_posterior(
        SandwichInputs(center=inputs.center, v_n_inv=inputs.v_n_inv,
                       s_n=inputs.s_n, n=inputs.n, tau=inputs.tau,
                       prior=log_prior),
        mcmc=GibbsConfig(burn_in=2000, n_draws=8000, seed=9))
    assert isinstance(sampled.form, Draws)
    draws = sampled.form.draws
    for j in range(2):
        sd = float(np.sqrt(closed.form.cov[j, j]))
        ess = effective_sample_size(draws[:, j])
        tol = 3.0 * sd / np.sqrt(ess)
        assert float(draws[:, j].mean()) == pytest.approx(
            float(closed.form.mean[j]), abs=tol)
        assert float(draws[:, j].std(ddof=1)) == pytest.approx(
            sd, rel=0.15)


def test_non_priorspec_non_callable_rejected():
    inputs = _random_inputs(seed=10)
    bad = SandwichInputs(center=inputs.center, v_n_inv=inputs.v_n_inv,
                         s_n=inputs.s_n, n=inputs.n, tau=inputs.tau,
                         prior="flat")
    with pytest.raises(TypeError):
        sandwich_posterior(bad)


# ---------------------------------------------------------------- intervals

def test_interval_from_draws_uses_linear_interpolation():
    draws = np.arange(1.0, 1001.0)[:, None]
    chain = Chain(beta_draws=draws, sigma_draws=np.ones(1000))
    ivs = credible_interval(chain, 0.95)
    assert ivs.lower[0] == pytest.approx(25.975, abs=1e-9)
    assert ivs.upper[0] == pytest.approx(975.025, abs=1e-9)


def test_interval_from_closed_form_is_mean_pm_z_sd():
    post = SandwichPosterior(
        sigma_n=np.eye(2),
        form=ClosedFormGaussian(mean=np.array([1.0, -2.0]),
                                cov=np.diag([4.0, 0.25])))
    ivs = credible_interval(post, 0.95)
    z = 1.959963984540054
    np.testing.assert_allclose(ivs.lower, [1.0 - 2 * z, -2.0 - 0.5 * z],
                               atol=1e-9)
    np.testing.assert_allclose(ivs.upper, [1.0 + 2 * z, -2.0 + 0.5 * z],
                               atol=1e-9)


def test_interval_level_is_respected():
    post = SandwichPosterior(
        sigma_n=np.eye(1),
        form=ClosedFormGaussian(mean=np.zeros(1), cov=np.eye(1)))
    ivs = credible_interval(post, 0.5)
    assert ivs.upper[0] == pytest.approx(0.6744897501960817, abs=1e-9)


def test_interval_rejects_junk():
    with pytest.raises(TypeError):
        credible_interval(np.zeros((10, 2)), 0.95)
    empty = SandwichPosterior(sigma_n=np.eye(2),
                              form=Draws(draws=np.empty((0, 2))))
    with pytest.raises(ValueError):
        credible_interval(empty, 0.95)
    post = SandwichPosterior(
        sigma_n=np.eye(1),
        form=ClosedFormGaussian(mean=np.zeros(1), cov=np.eye(1)))
    with pytest.raises(ValueError):
        credible_interval(post, 1.0)
