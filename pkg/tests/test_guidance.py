import numpy as np
import pytest

from blindguide.diffusion.schedule import predict_x0, q_sample
from blindguide.dsst.table import DSSTable
from blindguide.exceptions import ContractViolation, ParameterError
from blindguide.guidance.gradients import (
    fidelity_gradient,
    fidelity_loss,
    measurement_cotangent,
    measurement_residual,
    std_derivative_from_residual,
    std_gradient,
)
from blindguide.guidance.guidance_set import (
    GuidanceItem,
    GuidanceSet,
    SamplerState,
    check_scale_map,
    clamp_std,
)
from blindguide.ops.gaussian import DELTA_THRESHOLD, blur, convolve, make_kernel
from blindguide.ops.image import from_model, to_model
from blindguide.ops.std_search import StdGrid

T_STEP = 10
PIXELS = [(0, 0, 0), (3, 12, 0), (8, 8, 0), (15, 1, 0)]


@pytest.fixture
def state(image, sched):
    noise = np.random.default_rng(5).standard_normal(image.shape)
    return SamplerState(x_t=q_sample(to_model(image), T_STEP, noise, sched), t=T_STEP, stds=(1.9,), rng_seed=0)


@pytest.fixture
def item(image):
    return GuidanceItem(y_acute=blur(image, 2.2), std=1.9, weight=1.0, t_start=20)


def _perturbed(state, pixel, delta):
    x = state.x_t.copy()
    x[pixel] += delta
    return x


def test_fidelity_gradient_matches_finite_differences(state, item, denoiser, sched):
    grad = fidelity_gradient(state, item, denoiser, sched)
    h = 1e-5
    for p in PIXELS:
        plus = fidelity_loss(_perturbed(state, p, h), T_STEP, item.target, item.std, denoiser, sched)
        minus = fidelity_loss(_perturbed(state, p, -h), T_STEP, item.target, item.std, denoiser, sched)
        assert grad[p] == pytest.approx((plus - minus) / (2 * h), rel=1e-4, abs=1e-6)


def test_std_gradient_matches_finite_differences(state, item, denoiser, sched):
    analytic = std_gradient(state, item, denoiser, sched)
    h = 1e-5
    plus = fidelity_loss(state.x_t, T_STEP, item.target, item.std + h, denoiser, sched)
    minus = fidelity_loss(state.x_t, T_STEP, item.target, item.std - h, denoiser, sched)
    assert analytic == pytest.approx((plus - minus) / (2 * h), rel=1e-4, abs=1e-6)


def test_zero_residual_gives_zero_gradients(state, denoiser, sched):
    x0 = predict_x0(state.x_t, T_STEP, denoiser.eps(state.x_t, T_STEP), sched)
    exact = GuidanceItem(y_acute=from_model(convolve(x0, make_kernel(1.9))), std=1.9, weight=1.0, t_start=20)
    assert np.allclose(fidelity_gradient(state, exact, denoiser, sched), 0.0, atol=1e-9)
    assert std_gradient(state, exact, denoiser, sched) == pytest.approx(0.0, abs=1e-9)


def test_cotangent_is_twice_adjoint_residual(image):
    target = to_model(blur(image, 1.0))
    c, r = measurement_cotangent(to_model(image), target, 1.5)
    assert np.allclose(r, convolve(to_model(image), make_kernel(1.5)) - target)
    assert c.shape == image.shape


def test_inactive_item_is_a_contract_violation(state, image, denoiser, sched):
    late = GuidanceItem(y_acute=image, std=1.0, weight=1.0, t_start=T_STEP - 1)
    with pytest.raises(ContractViolation):
        fidelity_gradient(state, late, denoiser, sched)
    with pytest.raises(ContractViolation):
        std_gradient(state, late, denoiser, sched)


def test_std_refinement_skipped_on_delta_branch(state, item, denoiser, sched):
    assert std_gradient(state, item, denoiser, sched, std=DELTA_THRESHOLD / 2) is None


class TestGuidanceSet:
    def _items(self, image, weights=(0.7, 0.2, 0.1), stds=(3.0, 2.0, 1.0), starts=(30, 20, 10)):
        return tuple(GuidanceItem(y_acute=image, std=s, weight=w, t_start=t)
                     for w, s, t in zip(weights, stds, starts))

    def test_active_weights_renormalise(self, image):
        gset = GuidanceSet(self._items(image))
        assert gset.global_t_start == 30
        assert list(gset.active(15)) == [True, True, False]
        assert np.allclose(gset.active_weights(15), [7 / 9, 2 / 9, 0.0])
        assert np.allclose(gset.active_weights(5), [0.7, 0.2, 0.1])
        assert np.allclose(gset.active_weights(40), 0.0)

    def test_weights_must_not_increase(self, image):
        with pytest.raises(ParameterError):
            GuidanceSet(self._items(image, weights=(0.2, 0.7, 0.1)))

    def test_stds_must_descend(self, image):
        with pytest.raises(ParameterError):
            GuidanceSet(self._items(image, stds=(1.0, 2.0, 3.0)))

    def test_empty_set(self):
        with pytest.raises(ParameterError):
            GuidanceSet(())

    def test_shapes_must_agree(self, image):
        items = (GuidanceItem(image, 2.0, 0.5, 10), GuidanceItem(image[:8], 1.0, 0.5, 10))
        with pytest.raises(ParameterError):
            GuidanceSet(items)


class TestFromDblm:
    grid = StdGrid(0.5, 6.0, 0.5)
    table = DSSTable(stds=[0.5, 1.0, 2.0, 3.0], t_starts=[0, 5, 12, 25], tol=1e-3, T=50)

    def test_items_follow_offsets_and_table(self, image):
        gset = GuidanceSet.from_dblm(image, 3.0, 3, [0.0, 1.0, 2.0], [0.7, 0.2, 0.1], self.grid, self.table)
        assert gset.stds == (3.0, 2.0, 1.0)
        assert [item.t_start for item in gset.items] == [25, 12, 5]
        for item in gset.items:
            assert np.allclose(item.y_acute, blur(image, item.std))

    def test_stds_floor_at_grid_minimum(self, image):
        gset = GuidanceSet.from_dblm(image, 1.2, 3, [0.0, 1.0, 2.0], [0.7, 0.2, 0.1], self.grid, self.table)
        assert gset.stds == (1.2, 0.5, 0.5)
        # a zero table entry still activates at step 1
        assert gset.items[-1].t_start == 1

    def test_fixed_start_replaces_table(self, image):
        gset = GuidanceSet.from_dblm(image, 3.0, 2, [0.0, 1.0], [0.8, 0.2], self.grid, t_start=49)
        assert [item.t_start for item in gset.items] == [49, 49]

    def test_requires_table_or_start(self, image):
        with pytest.raises(ParameterError):
            GuidanceSet.from_dblm(image, 3.0, 1, [0.0], [1.0], self.grid)

    def test_requires_enough_offsets(self, image):
        with pytest.raises(ParameterError):
            GuidanceSet.from_dblm(image, 3.0, 3, [0.0, 1.0], [0.7, 0.2, 0.1], self.grid, self.table)


def test_scale_map_range_is_enforced():
    assert check_scale_map(0.5, (2, 2, 1)).shape == (2, 2, 1)
    with pytest.raises(ContractViolation):
        check_scale_map(np.full((2, 2, 1), 1.2), (2, 2, 1))
    with pytest.raises(ContractViolation):
        check_scale_map(np.full((2, 2, 1), np.nan), (2, 2, 1))


def test_clamp_std():
    assert clamp_std(-3.0, 15.0) == DELTA_THRESHOLD
    assert clamp_std(20.0, 15.0) == 15.0
    assert clamp_std(2.5, 15.0) == 2.5


def test_sampler_state_rejects_non_positive_std(image):
    with pytest.raises(ParameterError):
        SamplerState(x_t=image, t=3, stds=(1.0, 0.0), rng_seed=0)


def _std_derivative(image, std, true_std=3.0):
    x0 = to_model(image)
    target = convolve(x0, make_kernel(true_std))
    return std_derivative_from_residual(x0, measurement_residual(x0, target, std), std)


@pytest.mark.parametrize("std", [2.0, 2.5, 2.9])
def test_std_derivative_is_negative_below_the_true_blur(image, std):
    assert _std_derivative(image, std) < 0


@pytest.mark.parametrize("std", [3.1, 3.5, 4.0])
def test_std_derivative_is_positive_above_the_true_blur(image, std):
    assert _std_derivative(image, std) > 0


@pytest.mark.parametrize("initial", [2.0, 4.0])
def test_default_refinement_rate_recovers_the_true_blur(image, initial):
    std = initial
    for _ in range(1000):
        std = clamp_std(std - 0.02 * _std_derivative(image, std), 15.0)
    assert std == pytest.approx(3.0, abs=0.05)
