import numpy as np
import pandas as pd
import pytest

from blindguide.config.settings import RunConfig
from blindguide.experiments import (
    SETTINGS,
    SUITE_ALIASES,
    SUITES,
    prepare_context,
    resolve_suite,
    run_suite,
    write_report,
)
from blindguide.experiments.common import HARSH_DEGRADATION, TEST_DEGRADATION
from blindguide.experiments.kernel_refinement import run_kernel_refinement, summarize_refinement

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def ctx():
    config = RunConfig(T=50, beta_start=1e-3, beta_end=0.2, std_min=0.5, std_max=6.0, std_step=0.5,
                       corpus_size=12, image_size=16, gmm_components=3, stage1_iters=2, stage2_iters=1,
                       batch_size=2, seed=0, log_dir="")
    return prepare_context(config, n_test=2)


def test_context(ctx):
    assert ctx.corpus.shape == (12, 16, 16, 1)
    assert ctx.test_clean.shape == ctx.test_degraded.shape == (2, 16, 16, 1)
    assert not np.array_equal(ctx.test_clean[0], ctx.corpus[0])
    assert ctx.table.T == 50


def test_mapping_ablation(ctx):
    frame = run_suite("mapping", ctx)
    assert list(frame["setting"]) == list(SETTINGS)
    single = frame[frame["setting"].isin(["A", "E"])]
    assert set(single["n_guidance"]) == {1}
    assert np.all(np.isfinite(frame[["ssim", "sharpness", "consistency"]].to_numpy()))


def test_start_step_sweep(ctx):
    frame = run_suite("start-step", ctx)
    assert list(frame["start"]) == ["0.4T", "T-1", "dsst"]
    assert frame.loc[frame["start"] == "T-1", "mean_t_start"].item() == 49
    assert frame.loc[frame["start"] == "0.4T", "mean_t_start"].item() == 20


def test_guidance_count_sweep(ctx):
    frame = run_suite("guidance-count", ctx)
    assert list(frame["n_guidance"]) == [1, 2, 3, 4]
    assert list(frame["lambda"]) == ["1", "0.8/0.2", "0.7/0.2/0.1", "0.7/0.1/0.1/0.1"]


def test_kernel_refinement(ctx):
    frame = run_kernel_refinement(ctx, n_images=1)
    assert len(frame) == 4
    frozen = frame[frame["mode"] == "frozen"]
    assert list(frozen["final_std"]) == list(frozen["initial_std"])
    summary = summarize_refinement(frame)
    assert list(summary["initial_std"]) == [2.0, 4.0]
    assert set(summary.columns) == {"initial_std", "refined_std", "psnr_gain", "std_error"}


def test_end_to_end(ctx):
    frame = run_suite("end-to-end", ctx)
    assert list(frame["image"]) == [0, 1]
    assert np.allclose(frame["psnr_gain"], frame["psnr_output"] - frame["psnr_input"])
    assert (frame["descent_violations"] >= 0).all()
    assert np.all(np.isfinite(frame["refined_std"]))


def test_harsh_end_to_end_degrades_the_same_images(ctx):
    mild = run_suite("end-to-end", ctx)
    harsh = run_suite("end-to-end-harsh", ctx)
    assert list(harsh["image"]) == [0, 1]
    assert (harsh["psnr_input"] < mild["psnr_input"]).all()


def test_matched_context(ctx):
    matched = ctx.matched()
    assert matched is ctx.matched()
    assert matched.config.prior_kind == "exemplar"
    assert matched.prior.n_components == len(ctx.corpus)
    assert matched.test_clean.shape == ctx.test_clean.shape
    assert matched.degradation == TEST_DEGRADATION
    assert matched.matched() is matched
    assert ctx.config.prior_kind == "fitted"


def test_with_degradation_keeps_clean_images(ctx):
    assert ctx.with_degradation(TEST_DEGRADATION) is ctx
    harsh = ctx.with_degradation(HARSH_DEGRADATION)
    assert np.array_equal(harsh.test_clean, ctx.test_clean)
    assert not np.array_equal(harsh.test_degraded, ctx.test_degraded)
    assert harsh.degradation == HARSH_DEGRADATION


def test_adjuster_value(ctx):
    frame = run_suite("dgsa-value", ctx)
    assert list(frame["adjuster"])[:5] == ["constant(0)", "constant(0.25)", "constant(0.5)",
                                           "constant(0.75)", "constant(1)"]
    trained = frame.iloc[-1]
    assert trained["adjuster"].startswith("dgsa")
    assert 0.0 <= trained["flat_mean"] <= 1.0


def test_unknown_suite(ctx):
    with pytest.raises(ValueError):
        run_suite("everything", ctx)
    assert set(SUITES) == {"mapping", "guidance-count", "start-step", "kernel-refinement", "end-to-end",
                           "end-to-end-harsh", "dgsa-value"}


def test_alias_resolves_to_the_mapping_ablation():
    assert SUITE_ALIASES == {"tab3": "mapping"}
    assert resolve_suite("tab3") == "mapping"
    assert resolve_suite("end-to-end") == "end-to-end"
    with pytest.raises(ValueError):
        resolve_suite("tab4")


def test_report_is_written(tmp_path):
    path = write_report(pd.DataFrame({"a": [1.0, 2.0]}), tmp_path / "out" / "r.csv")
    assert path.read_text().splitlines() == ["a", "1", "2"]
