import numpy as np
import pytest

from songseg.audio import AudioBuffer
from songseg.params import PipelineParams


@pytest.fixture
def params():
    return PipelineParams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_audio(seed, seconds, sr=44100):
    gen = np.random.default_rng(seed)
    return AudioBuffer(gen.uniform(-0.5, 0.5, int(seconds * sr)), sr)
