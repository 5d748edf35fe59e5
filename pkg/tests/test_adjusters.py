import numpy as np
import pandas as pd
import pytest
import torch

from blindguide.adjusters.base import AdjusterFactory
from blindguide.adjusters.basic import ConstantAdjuster, VarianceAdjuster, local_variance
from blindguide.adjusters.loss import dgsa_loss, dgsa_loss_torch
from blindguide.adjusters.network import DgsaAdjuster, DgsaNet, load_dgsa, save_dgsa, timestep_embedding
from blindguide.adjusters.swt import swt_decompose, swt_decompose_torch, swt_reconstruct
from blindguide.adjusters.training import (
    DenoiserEps,
    DgsaComponents,
    constant_baseline_losses,
    draw_probe,
    evaluate_adjuster_loss,
    make_validation_probes,
    probe_step,
    region_scale_means,
    step_ahead_estimate,
    train_dgsa,
)
from blindguide.dblm.mapping import DblmStage
from blindguide.dblm.spectrum import SpectralStdEstimator
from blindguide.degradations.pipeline import RANGES, DegradationParams
from blindguide.exceptions import ConfigurationError, DimensionError, ParameterError
from blindguide.ops.gaussian import blur
from blindguide.ops.image import constant_image
from blindguide.stores.tensors import save_weights

GAMMA = (0.0, 0.01, 0.01, 0.05)


@pytest.fixture
def components(denoiser, sched, table):
    return DgsaComponents(denoiser=denoiser, sched=sched, table=table)


class TestBaselines:
    def test_constant(self, image):
        scale = ConstantAdjuster(0.3).adjust(image, image, 5)
        assert scale.shape == image.shape
        assert np.all(scale == 0.3)

    @pytest.mark.parametrize("value", [-0.1, 1.1])
    def test_constant_range(self, value):
        with pytest.raises(ParameterError):
            ConstantAdjuster(value)

    def test_variance_is_one_on_flat_images(self):
        flat = constant_image(0.4, 8, 8)
        assert np.allclose(VarianceAdjuster().adjust(flat, flat, 3), 1.0)

    def test_variance_lowers_scale_on_texture(self, image):
        scale = VarianceAdjuster(window=3, pivot=0.001).adjust(image, image, 3)
        variance = local_variance(image, 3)
        assert scale[variance == variance.max()].max() < scale[variance == variance.min()].min()

    @pytest.mark.parametrize("kwargs", [{"window": 4}, {"window": 1}, {"pivot": 0.0}])
    def test_variance_parameters(self, kwargs):
        with pytest.raises(ParameterError):
            VarianceAdjuster(**kwargs)

    def test_scale_maps_stay_in_range(self, rng):
        adjusters = [ConstantAdjuster(1.0), VarianceAdjuster(), DgsaAdjuster(DgsaNet())]
        for _ in range(5):
            x = rng.uniform(-0.5, 1.5, (12, 12, 1))
            for adjuster in adjusters:
                scale = adjuster.adjust(x, x, int(rng.integers(1, 50)))
                assert np.all((scale >= 0.0) & (scale <= 1.0))


class TestSwt:
    def test_reconstruction(self, image):
        assert np.allclose(swt_reconstruct(swt_decompose(image)), image)

    def test_constant_image_has_no_detail(self):
        bands = swt_decompose(constant_image(0.6, 8, 8))
        assert np.allclose(bands.ll, 0.6)
        for band in (bands.lh, bands.hl, bands.hh):
            assert np.allclose(band, 0.0)

    def test_horizontal_edge_lands_in_lh(self):
        img = np.zeros((8, 8, 1))
        img[4:] = 1.0
        bands = swt_decompose(img)
        assert np.abs(bands.lh).sum() > 0
        assert np.allclose(bands.hl, 0.0)
        assert np.allclose(bands.hh, 0.0)

    def test_torch_matches_numpy(self, image):
        tensor = torch.from_numpy(np.transpose(image, (2, 0, 1)))[None]
        for band, numpy_band in zip(swt_decompose_torch(tensor), swt_decompose(image).as_tuple()):
            assert np.allclose(band[0].numpy(), np.transpose(numpy_band, (2, 0, 1)))


class TestLoss:
    def test_zero_for_identical_images(self, image):
        assert dgsa_loss(image, image, GAMMA) == pytest.approx(0.0, abs=1e-12)

    def test_positive_for_blurred_images(self, image):
        assert dgsa_loss(blur(image, 2.0), image, GAMMA) > 0.0

    def test_band_weights_only(self, image):
        assert dgsa_loss(blur(image, 2.0), image, (0.0, 0.0, 0.0, 0.0), proxy_weight=0.0) == 0.0

    def test_requires_four_weights(self, image):
        with pytest.raises(ParameterError):
            dgsa_loss(image, image, (1.0, 1.0))

    def test_shape_mismatch(self, image):
        with pytest.raises(DimensionError):
            dgsa_loss(image, image[:8], GAMMA)
        with pytest.raises(DimensionError):
            dgsa_loss_torch(torch.zeros(1, 1, 4, 4), torch.zeros(1, 1, 4, 5), GAMMA)


class TestNetwork:
    def test_embedding_shapes(self):
        assert timestep_embedding(torch.tensor([0, 5]), 64).shape == (2, 64)
        assert timestep_embedding(torch.tensor([3]), 7).shape == (1, 7)

    def test_untrained_network_gives_zero_scale(self, image):
        scale = DgsaAdjuster(DgsaNet()).adjust(image, image, 10)
        assert scale.shape == image.shape
        assert scale.dtype == np.float64
        assert np.all(scale == 0.0)

    def test_save_load_preserves_outputs(self, tmp_path, image):
        torch.manual_seed(0)
        net = DgsaNet(channels=1, hidden=8)
        with torch.no_grad():
            net.conv3.bias.fill_(0.3)
            net.conv3.weight.normal_(0.0, 0.05)
        save_dgsa(net, tmp_path / "dgsa")
        loaded = load_dgsa(tmp_path / "dgsa")
        assert loaded.hidden == 8
        before = DgsaAdjuster(net).adjust(image, image, 7)
        after = DgsaAdjuster(loaded).adjust(image, image, 7)
        assert np.array_equal(before, after)
        assert before.max() > 0.0

    def test_load_rejects_foreign_weights(self, tmp_path):
        save_weights(tmp_path / "other", {"layer.weight": np.ones((2, 2))})
        with pytest.raises(ConfigurationError):
            load_dgsa(tmp_path / "other")


class TestFactory:
    def test_builds_each_kind(self):
        factory = AdjusterFactory()
        assert isinstance(factory.create_adjuster({"type": "constant", "scale": 0.5}), ConstantAdjuster)
        assert isinstance(factory.create_adjuster({"type": "variance"}), VarianceAdjuster)
        assert isinstance(factory.create_adjuster({"type": "dgsa", "net": DgsaNet()}), DgsaAdjuster)

    def test_loads_dgsa_weights(self, tmp_path):
        save_dgsa(DgsaNet(hidden=4), tmp_path / "dgsa")
        adjuster = AdjusterFactory().create_adjuster({"type": "dgsa", "path": str(tmp_path / "dgsa")})
        assert adjuster.net.hidden == 4

    @pytest.mark.parametrize("config", [{}, {"type": "learned"}])
    def test_rejects_bad_type(self, config):
        with pytest.raises(ValueError):
            AdjusterFactory().create_adjuster(config)


class TestTraining:
    def test_denoiser_op_backward_is_the_vjp(self, denoiser, prior, sched, rng):
        x = torch.from_numpy(np.transpose(prior.means[1] + 0.1 * rng.standard_normal(prior.image_shape),
                                          (2, 0, 1)).copy()).requires_grad_(True)
        u = torch.from_numpy(rng.standard_normal(tuple(x.shape)))
        (DenoiserEps.apply(x, denoiser, 6) * u).sum().backward()
        expected = denoiser.vjp(np.transpose(x.detach().numpy(), (1, 2, 0)), 6,
                                np.transpose(u.numpy(), (1, 2, 0)))
        assert np.allclose(np.transpose(x.grad.numpy(), (1, 2, 0)), expected)

    def test_probe_with_zero_scale_is_unguided(self, components, image, sched, denoiser):
        probe = probe_step(image, blur(image, 2.0), 2.0, 5, seed=3, components=components)
        estimate = step_ahead_estimate(probe, np.zeros_like(image), components)
        x_prev = probe.x_prime
        expected = (x_prev - sched.sqrt_one_minus_alpha_bar(4) * denoiser.eps(x_prev, 4)) / sched.sqrt_alpha_bar(4)
        assert np.allclose(estimate, (expected + 1.0) / 2.0)

    def test_draw_probe_respects_table(self, components, image, table):
        rng = np.random.default_rng(0)
        for _ in range(5):
            probe = draw_probe(image, 1, rng, components)
            assert 1 <= probe.t <= max(1, table.lookup(probe.std).t_start)

    def test_stage_two_needs_dblm(self, components, image):
        with pytest.raises(ConfigurationError):
            draw_probe(image, 2, np.random.default_rng(0), components)

    def test_stage_two_probe(self, components, image, spectrum, grid):
        components.dblm = DblmStage(SpectralStdEstimator(spectrum, grid))
        probe = draw_probe(image, 2, np.random.default_rng(1), components)
        assert probe.y_acute.shape == image.shape
        assert grid.contains(probe.std)

    def test_scale_cap_for_small_images(self):
        rng = np.random.default_rng(0)
        draws = [DegradationParams.sample(rng, max_scale=4.0).C for _ in range(50)]
        assert max(draws) <= 4.0
        assert min(draws) >= RANGES["C"][0]

    def test_baselines_frame(self, components, corpus):
        probes = make_validation_probes(corpus, components, n=2, seed=0)
        frame = constant_baseline_losses(probes, components, GAMMA, scales=(0.0, 1.0))
        assert isinstance(frame, pd.DataFrame)
        assert list(frame.columns) == ["scale", "loss"]
        assert list(frame["scale"]) == [0.0, 1.0]
        zero = evaluate_adjuster_loss(ConstantAdjuster(0.0), probes, components, GAMMA)
        assert frame["loss"].iloc[0] == pytest.approx(zero)

    def test_region_means_of_constant_adjuster(self, components, corpus):
        probes = make_validation_probes(corpus, components, n=2, seed=0)
        regions = region_scale_means(ConstantAdjuster(0.4), probes)
        assert regions.flat == pytest.approx(0.4)
        assert regions.textured == pytest.approx(0.4)

    def test_short_training_run(self, components, corpus):
        result = train_dgsa(corpus, components, stage1_iters=3, stage2_iters=0, batch_size=2, seed=0)
        assert not result.diverged
        assert list(result.curve.columns) == ["iteration", "stage", "loss", "validation"]
        assert list(result.curve["iteration"]) == [1, 2, 3]
        assert np.all(np.isfinite(result.curve["loss"]))
        assert result.curve["validation"].isna().all()
        assert not result.net.training

    def test_fresh_network_starts_at_best_constant(self, components, corpus, image):
        steps = make_validation_probes(corpus, components, n=3, seed=7)
        losses = constant_baseline_losses(steps, components, GAMMA)
        best = losses.loc[losses["loss"].idxmin()]
        result = train_dgsa(corpus, components, stage1_iters=0, stage2_iters=0, validation=steps)
        scale = DgsaAdjuster(result.net).adjust(image, image, 5)
        assert np.all(scale == best["scale"])

    def test_held_out_selection_beats_every_constant(self, components, corpus):
        steps = make_validation_probes(corpus, components, n=3, seed=7)
        result = train_dgsa(corpus, components, stage1_iters=3, stage2_iters=0, batch_size=2, seed=0,
                            validation=steps)
        trained = evaluate_adjuster_loss(DgsaAdjuster(result.net), steps, components, GAMMA)
        constants = constant_baseline_losses(steps, components, GAMMA)
        assert trained <= constants["loss"].min() + 1e-12
        assert result.curve["validation"].notna().all()
        assert not result.net.training

    def test_training_is_seeded(self, components, corpus):
        a = train_dgsa(corpus, components, stage1_iters=2, stage2_iters=0, batch_size=2, seed=5)
        b = train_dgsa(corpus, components, stage1_iters=2, stage2_iters=0, batch_size=2, seed=5)
        assert np.allclose(a.curve["loss"], b.curve["loss"])

    def test_training_rejects_missing_inputs(self, components, corpus):
        with pytest.raises(ConfigurationError):
            train_dgsa(corpus[:0], components, stage1_iters=1, stage2_iters=0)
        with pytest.raises(ConfigurationError):
            train_dgsa(corpus, components, stage1_iters=1, stage2_iters=1)
