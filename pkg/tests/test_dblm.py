import numpy as np
import pytest

from blindguide.dblm.mapping import DblmStage, dblm_map
from blindguide.dblm.restorers import IdentityRestorer, RestorerFactory, WienerRestorer, wiener_restore
from blindguide.dblm.spectrum import RadialSpectrum, SpectralStdEstimator, estimate_std
from blindguide.exceptions import ConfigurationError, EstimationError, ParameterError
from blindguide.ops.gaussian import blur
from blindguide.ops.image import constant_image
from blindguide.ops.std_search import StdGrid

GRID = StdGrid(0.5, 6.0, 0.5)


class TestRestorers:
    def test_wiener_inverts_reflect_blur(self, image):
        assert np.allclose(wiener_restore(blur(image, 1.0), 1.0, 1e-10), image, atol=1e-5)

    def test_heavy_regularisation_tends_to_mean(self, image):
        out = wiener_restore(image, 2.0, 1e6)
        assert np.allclose(out, image.mean(axis=(0, 1)), atol=1e-3)

    def test_delta_kernel_is_identity(self, image):
        assert np.array_equal(wiener_restore(image, 0.0, 1e-3), image)

    def test_negative_noise_power(self, image):
        with pytest.raises(ParameterError):
            wiener_restore(image, 1.0, -1.0)

    def test_factory(self):
        factory = RestorerFactory()
        assert isinstance(factory.create_restorer({"type": "identity"}), IdentityRestorer)
        wiener = factory.create_restorer({"type": "wiener", "assumed_std": 2.0, "noise_power": 0.01})
        assert isinstance(wiener, WienerRestorer)
        assert wiener.kernel.std == 2.0
        with pytest.raises(ValueError):
            factory.create_restorer({"type": "deep"})


class TestSpectrum:
    def test_from_image(self, image):
        spectrum = RadialSpectrum.from_image(image)
        assert spectrum.n_bins == 16
        assert spectrum.frequencies[-1] == pytest.approx(0.5)
        assert np.all(np.diff(spectrum.frequencies) > 0)

    def test_corpus_must_not_be_empty(self):
        with pytest.raises(ConfigurationError):
            RadialSpectrum.from_corpus(np.zeros((0, 8, 8, 1)))

    def test_save_load(self, tmp_path, spectrum):
        path = spectrum.save(tmp_path / "spectrum.tsv")
        loaded = RadialSpectrum.load(path)
        assert np.allclose(loaded.frequencies, spectrum.frequencies)
        assert np.allclose(loaded.log_power, spectrum.log_power)

    def test_load_missing(self, tmp_path):
        with pytest.raises(ConfigurationError):
            RadialSpectrum.load(tmp_path / "absent.tsv")

    def test_interpolate_at_bins(self, spectrum):
        assert np.allclose(spectrum.interpolate(spectrum.frequencies), spectrum.log_power)


class TestSpectralEstimator:
    @pytest.fixture
    def own_reference(self, image):
        return RadialSpectrum.from_corpus(image[None])

    def test_unblurred_image_gets_smallest_std(self, image, own_reference):
        assert estimate_std(image, own_reference, GRID).std_hat == pytest.approx(0.5)

    @pytest.mark.parametrize("true_std", [1.5, 3.0])
    def test_recovers_known_blur(self, image, own_reference, true_std):
        estimate = SpectralStdEstimator(own_reference, GRID).estimate(blur(image, true_std))
        assert abs(estimate.std_hat - true_std) <= 0.5
        assert estimate.intermediate.shape == image.shape
        assert estimate.costs.shape == GRID.values().shape

    def test_constant_image_is_degenerate(self, spectrum):
        with pytest.raises(EstimationError) as info:
            estimate_std(constant_image(0.5, 16, 16), spectrum, GRID)
        assert info.value.code == "degenerate_spectrum"

    def test_invalid_noise_floor(self, spectrum):
        with pytest.raises(ConfigurationError):
            SpectralStdEstimator(spectrum, GRID, noise_floor=0.0)


class FixedEstimator(SpectralStdEstimator):
    def __init__(self, std):
        self.std = std

    def estimate(self, y):
        from blindguide.dblm.spectrum import StdEstimate
        return StdEstimate(std_hat=self.std, intermediate=y)


class TestMapping:
    def test_dblm_map_is_reblurred_restoration(self, image):
        assert np.allclose(dblm_map(image, IdentityRestorer(), 2.0), blur(image, 2.0))

    def test_negative_std(self, image):
        with pytest.raises(ParameterError):
            dblm_map(image, IdentityRestorer(), -1.0)

    def test_stage_uses_estimate(self, image):
        result = DblmStage(FixedEstimator(2.5), restorer_kind="identity").run(image)
        assert result.std_hat == 2.5
        assert np.allclose(result.restored, image)
        assert np.allclose(result.y_acute, blur(image, 2.5))

    def test_stage_override_wins(self, image):
        result = DblmStage(FixedEstimator(2.5), restorer_kind="identity", std_override=1.0).run(image)
        assert result.std_hat == 1.0
        assert result.estimate.std_hat == 2.5
        assert np.allclose(result.y_acute, blur(image, 1.0))

    def test_wiener_stage_output_is_exactly_gaussian_blurred(self, image):
        y = blur(image, 2.0)
        result = DblmStage(FixedEstimator(2.0), restorer_kind="wiener", noise_power=1e-3).run(y)
        assert np.allclose(result.y_acute, blur(result.restored, 2.0))
