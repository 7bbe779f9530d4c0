import numpy as np
import pytest

from pondwatch.raster import Raster, SIX_BANDS


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_raster(rng, bands=SIX_BANDS, h=8, w=8, lo=0.0, hi=1.0):
    data = rng.uniform(lo, hi, (len(bands), h, w)).astype(np.float32)
    return Raster(bands=tuple(bands), data=data)
