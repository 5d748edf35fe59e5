import math

import numpy as np
import pytest
from skimage.metrics import structural_similarity

from blindguide.data.synth import ingest_directory, synth_corpus
from blindguide.exceptions import CorpusIOError, DimensionError, ParameterError
from blindguide.metrics.quality import consistency, evaluate_pair, psnr, sharpness, ssim
from blindguide.ops.gaussian import blur
from blindguide.ops.image import constant_image
from blindguide.stores.filesystem import write_png


class TestSynth:
    def test_seeded(self):
        assert np.array_equal(synth_corpus(3, 16, seed=4), synth_corpus(3, 16, seed=4))
        assert not np.array_equal(synth_corpus(3, 16, seed=4), synth_corpus(3, 16, seed=5))

    @pytest.mark.parametrize("size,channels", [(16, 1), (32, 3), (64, 1)])
    def test_shape_and_range(self, size, channels):
        corpus = synth_corpus(2, size, seed=0, channels=channels)
        assert corpus.shape == (2, size, size, channels)
        assert corpus.min() >= 0.0 and corpus.max() <= 1.0

    def test_images_have_structure(self):
        img = synth_corpus(1, 32, seed=0)[0]
        assert sharpness(img) > sharpness(blur(img, 2.0))

    def test_grain_adds_pixel_texture(self):
        plain = synth_corpus(2, 32, seed=1)
        grainy = synth_corpus(2, 32, seed=1, grain=0.2)
        assert grainy.shape == plain.shape
        assert grainy.min() >= 0.0 and grainy.max() <= 1.0
        assert sharpness(grainy[0]) > sharpness(plain[0])
        assert np.array_equal(synth_corpus(2, 32, seed=1, grain=0.0), plain)

    @pytest.mark.parametrize("kwargs", [{"n": 0}, {"n": 2, "size": 24}, {"n": 2, "channels": 2},
                                        {"n": 2, "grain": -0.1}, {"n": 2, "grain": 0.6}])
    def test_invalid_arguments(self, kwargs):
        with pytest.raises(ParameterError):
            synth_corpus(**kwargs)


class TestIngest:
    def test_reads_and_resizes(self, tmp_path, corpus):
        write_png(tmp_path / "a.png", corpus[0])
        big = np.repeat(np.repeat(corpus[1], 2, axis=0), 3, axis=1)
        write_png(tmp_path / "b.png", big)
        (tmp_path / "notes.txt").write_text("ignored")
        images = ingest_directory(tmp_path, size=16)
        assert images.shape == (2, 16, 16, 1)
        assert np.allclose(images[0], corpus[0], atol=0.5 / 255 + 1e-9)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(CorpusIOError):
            ingest_directory(tmp_path / "absent")

    def test_empty_directory(self, tmp_path):
        with pytest.raises(CorpusIOError):
            ingest_directory(tmp_path)

    def test_unreadable_files_are_listed(self, tmp_path, corpus):
        write_png(tmp_path / "good.png", corpus[0])
        (tmp_path / "broken.png").write_bytes(b"not an image")
        with pytest.raises(CorpusIOError) as info:
            ingest_directory(tmp_path, size=16)
        assert info.value.files == ["broken.png"]


class TestMetrics:
    def test_psnr(self, image):
        assert psnr(image, image) == math.inf
        assert psnr(image, image + 0.1) == pytest.approx(20.0)

    def test_psnr_shape_mismatch(self, image):
        with pytest.raises(DimensionError):
            psnr(image, image[:8])

    @pytest.mark.parametrize("channels", [1, 3])
    def test_ssim_matches_reference(self, channels):
        a = synth_corpus(1, 32, seed=2, channels=channels)[0]
        b = np.clip(blur(a, 1.5) + 0.02 * np.random.default_rng(0).standard_normal(a.shape), 0.0, 1.0)
        expected = structural_similarity(a, b, win_size=7, data_range=1.0, channel_axis=2)
        assert ssim(a, b) == pytest.approx(expected, abs=1e-10)

    def test_ssim_of_identical_images(self, image):
        assert ssim(image, image) == pytest.approx(1.0)

    def test_ssim_window(self, image):
        with pytest.raises(ParameterError):
            ssim(image, image, window=4)
        with pytest.raises(DimensionError):
            ssim(image[:5, :5], image[:5, :5])

    def test_consistency(self, image):
        assert consistency(blur(image, 2.0), image, 2.0) == pytest.approx(0.0, abs=1e-20)
        assert consistency(image, image, 2.0) > 0.0

    def test_sharpness_of_flat_image(self):
        assert sharpness(constant_image(0.3, 8, 8)) == 0.0

    def test_evaluate_pair(self, image):
        report = evaluate_pair(image, blur(image, 1.0))
        assert report.consistency is None
        assert 0.0 < report.ssim < 1.0
        full = evaluate_pair(image, image, y_acute=blur(image, 1.0), std=1.0)
        assert full.psnr == math.inf
        assert full.consistency == pytest.approx(0.0, abs=1e-20)
        assert set(full.to_dict()) == {"psnr", "ssim", "sharpness", "consistency"}
