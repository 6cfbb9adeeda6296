import numpy as np
import pytest

from fdisac.codes import make_lfm_code
from fdisac.waveform import WaveformConfig


@pytest.fixture
def table_cfg() -> WaveformConfig:
    """Parameter table of the reference system, N = 100 and J = 900."""
    return WaveformConfig()


@pytest.fixture
def small_cfg() -> WaveformConfig:
    """Reduced frame with N = 8, J = 56 and K = 16."""
    return WaveformConfig(
        bandwidth=100e6,
        pri=6.4e-7,
        pulse_duration=8e-8,
        pris_per_cpi=16,
        radar_power=1.0,
        comm_power=0.5,
        psk_order=8,
    )


@pytest.fixture
def small_code():
    return make_lfm_code(8)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
