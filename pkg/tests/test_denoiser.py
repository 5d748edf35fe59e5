import numpy as np
import pytest

from blindguide.diffusion.denoiser import FiniteDifferenceDenoiser, finite_diff_vjp
from blindguide.diffusion.gmm import (
    GmmDenoiser,
    GmmPrior,
    exemplar_prior,
    fit_gmm_prior,
    load_prior,
    make_prior,
    save_prior,
)
from blindguide.diffusion.schedule import q_sample
from blindguide.exceptions import ConfigurationError, ParameterError
from blindguide.ops.image import to_model


def _single_gaussian(shape=(3, 3, 1), mean=0.2, var=0.5):
    return GmmPrior(weights=np.ones(1), means=np.full((1,) + shape, mean), variances=np.array([var]))


def test_single_component_matches_closed_form(sched, rng):
    prior = _single_gaussian()
    den = GmmDenoiser(prior, sched)
    t = 20
    x_t = rng.standard_normal(prior.image_shape)
    ab = sched.alpha_bar[t]
    c = ab * 0.5 + (1 - ab)
    posterior = 0.2 + np.sqrt(ab) * 0.5 / c * (x_t - np.sqrt(ab) * 0.2)
    assert np.allclose(den.posterior_mean(x_t, t), posterior)
    expected_eps = (x_t - np.sqrt(ab) * posterior) / np.sqrt(1 - ab)
    assert np.allclose(den.eps(x_t, t), expected_eps)


def test_single_component_vjp_is_scaled_identity(sched, rng):
    prior = _single_gaussian()
    den = GmmDenoiser(prior, sched)
    t = 20
    ab = sched.alpha_bar[t]
    c = ab * 0.5 + (1 - ab)
    u = rng.standard_normal(prior.image_shape)
    slope = (1 - ab * 0.5 / c) / np.sqrt(1 - ab)
    assert np.allclose(den.vjp(rng.standard_normal(u.shape), t, u), slope * u)


@pytest.mark.parametrize("t", [3, 25, 49])
def test_gmm_vjp_matches_finite_differences(denoiser, prior, sched, rng, t):
    x0 = prior.means[0]
    x_t = q_sample(x0, t, rng.standard_normal(x0.shape), sched)
    u = rng.standard_normal(x0.shape)
    pixels = [(0, 0, 0), (5, 7, 0), (15, 15, 0), (8, 2, 0)]
    numeric = finite_diff_vjp(denoiser, x_t, t, u, 1e-5, pixels)
    analytic = denoiser.vjp(x_t, t, u)
    for p in pixels:
        assert analytic[p] == pytest.approx(numeric[p], rel=1e-4, abs=1e-6)


def test_eps_is_unbiased_for_prior_samples(sched):
    prior = _single_gaussian(shape=(8, 8, 1), mean=0.0, var=0.3)
    den = GmmDenoiser(prior, sched)
    rng = np.random.default_rng(0)
    x0 = prior.sample(1, seed=0)[0]
    noise = rng.standard_normal(x0.shape)
    x_t = q_sample(x0, 30, noise, sched)
    # optimal eps correlates with the true noise far better than chance
    assert np.corrcoef(den.eps(x_t, 30).ravel(), noise.ravel())[0, 1] > 0.5


def test_wrong_shape_is_rejected(denoiser):
    with pytest.raises(ConfigurationError):
        denoiser.eps(np.zeros((4, 4, 1)), 3)


def test_finite_difference_denoiser_recovers_linear_jacobian(rng):
    matrix = rng.standard_normal((8, 8))
    den = FiniteDifferenceDenoiser(lambda x, t: (matrix @ x.reshape(-1)).reshape(x.shape))
    x = rng.standard_normal((2, 4, 1))
    u = rng.standard_normal(x.shape)
    assert np.allclose(den.vjp(x, 0, u).reshape(-1), matrix.T @ u.reshape(-1), atol=1e-6)


def test_finite_diff_vjp_only_fills_requested_pixels(denoiser, prior, rng):
    x = prior.means[0]
    grad = finite_diff_vjp(denoiser, x, 5, rng.standard_normal(x.shape), 1e-5, [0, 3])
    assert np.count_nonzero(grad) <= 2
    assert grad.reshape(-1)[1] == 0.0


@pytest.mark.parametrize("step,pixels", [(0.0, [0]), (1e-5, []), (1e-5, [10**6])])
def test_finite_diff_vjp_rejects_bad_arguments(denoiser, prior, step, pixels):
    x = prior.means[0]
    with pytest.raises(ParameterError):
        finite_diff_vjp(denoiser, x, 5, np.ones_like(x), step, pixels)


def test_prior_validation():
    with pytest.raises(ConfigurationError):
        GmmPrior(weights=np.array([0.5, 0.4]), means=np.zeros((2, 2, 2, 1)), variances=np.ones(2))
    with pytest.raises(ConfigurationError):
        GmmPrior(weights=np.ones(1), means=np.zeros((2, 2, 2, 1)), variances=np.ones(1))
    with pytest.raises(ConfigurationError):
        GmmPrior(weights=np.ones(1), means=np.zeros((1, 2, 2, 1)), variances=np.zeros(1))


def test_fit_prior_shapes(corpus, prior):
    assert prior.n_components == 3
    assert prior.image_shape == corpus.shape[1:]
    assert prior.weights.sum() == pytest.approx(1.0)
    assert np.all(prior.variances > 0)


def test_fit_prior_single_image(corpus):
    single = fit_gmm_prior(corpus[:1], n_components=4)
    assert single.n_components == 1


def test_prior_save_load(tmp_path, prior):
    save_prior(prior, tmp_path / "prior")
    loaded = load_prior(tmp_path / "prior")
    assert loaded.n_components == prior.n_components
    assert np.allclose(loaded.weights, prior.weights)
    assert np.allclose(loaded.variances, prior.variances)
    # means are stored as float32
    assert np.allclose(loaded.means, prior.means, atol=1e-6)


def test_load_prior_missing_manifest(tmp_path):
    with pytest.raises(ConfigurationError):
        load_prior(tmp_path)


def test_weights_must_sum_to_one_tightly():
    means = np.zeros((2, 2, 2, 1))
    with pytest.raises(ConfigurationError):
        GmmPrior(weights=np.array([0.5, 0.5 + 1e-9]), means=means, variances=np.ones(2))
    close = GmmPrior(weights=np.array([0.5, 0.5 + 1e-14]), means=means, variances=np.ones(2))
    assert close.weights[1] == 0.5 + 1e-14


def test_exemplar_prior(corpus):
    prior = exemplar_prior(corpus, variance=2e-3)
    assert prior.n_components == len(corpus)
    assert np.allclose(prior.weights, 1.0 / len(corpus))
    assert np.array_equal(prior.means, to_model(corpus))
    assert np.all(prior.variances == 2e-3)


def test_exemplar_draws_stay_near_their_image(corpus):
    prior = exemplar_prior(corpus, variance=1e-4)
    draws = prior.sample(5, seed=3)
    nearest = [np.min(np.mean((prior.means - d[None]) ** 2, axis=(1, 2, 3))) for d in draws]
    assert np.allclose(nearest, 1e-4, rtol=0.5)


def test_exemplar_denoiser_recovers_its_image(corpus, sched):
    prior = exemplar_prior(corpus, variance=1e-4)
    den = GmmDenoiser(prior, sched)
    t = 1
    x_t = np.sqrt(sched.alpha_bar[t]) * prior.means[2]
    assert np.allclose(den.posterior_mean(x_t, t), prior.means[2], atol=1e-2)


@pytest.mark.parametrize("variance", [0.0, -1e-3])
def test_exemplar_prior_rejects_bad_variance(corpus, variance):
    with pytest.raises(ConfigurationError):
        exemplar_prior(corpus, variance)


def test_make_prior_dispatches(corpus):
    fitted = make_prior(corpus, "fitted", n_components=3, seed=0)
    assert fitted.n_components == 3
    assert make_prior(corpus, "exemplar", variance=1e-3).n_components == len(corpus)
    with pytest.raises(ConfigurationError):
        make_prior(corpus, "kde")
