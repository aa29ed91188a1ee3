"""Shared fixtures: small deterministic signals and corpora."""

import numpy as np
import pytest

from vlafp.audio import Waveform
from vlafp.synth import SynthSpec, generate

FS = 8000


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tone_1k():
    t = np.arange(FS) / FS
    return Waveform(0.5 * np.sin(2 * np.pi * 1000.0 * t), FS)


@pytest.fixture(scope="session")
def noise_wave():
    return Waveform(0.3 * np.random.default_rng(7).standard_normal(2 * FS), FS)


@pytest.fixture(scope="session")
def small_corpus():
    return generate(SynthSpec(n_audios=6, duration_range=(6.0, 6.0), seed=3))
