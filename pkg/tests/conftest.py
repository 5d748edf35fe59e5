"""
Shared fixtures: a short diffusion schedule, a toy corpus and a GMM fitted to it
"""

import numpy as np
import pytest

from blindguide.data.synth import synth_corpus
from blindguide.dblm.spectrum import RadialSpectrum
from blindguide.diffusion.gmm import GmmDenoiser, fit_gmm_prior
from blindguide.diffusion.schedule import make_schedule
from blindguide.dsst.table import build_table
from blindguide.ops.std_search import StdGrid

SIZE = 16


@pytest.fixture(scope="session")
def sched():
    # short chain that still reaches (almost) pure noise
    return make_schedule(T=50, beta_start=1e-3, beta_end=0.2)


@pytest.fixture(scope="session")
def corpus():
    return synth_corpus(12, SIZE, seed=0)


@pytest.fixture(scope="session")
def prior(corpus):
    return fit_gmm_prior(corpus, n_components=3, seed=0)


@pytest.fixture(scope="session")
def denoiser(prior, sched):
    return GmmDenoiser(prior, sched)


@pytest.fixture(scope="session")
def grid():
    return StdGrid(0.5, 6.0, 0.5)


@pytest.fixture(scope="session")
def table(corpus, grid, sched):
    return build_table(corpus, grid, 1e-3, sched)


@pytest.fixture(scope="session")
def spectrum(corpus):
    return RadialSpectrum.from_corpus(corpus)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def image(corpus):
    return corpus[0].copy()
