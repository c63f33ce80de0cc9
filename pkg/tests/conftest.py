import numpy as np
import pytest

from irs_cellfree.active import project_bs_blocks
from irs_cellfree.channel import ChannelSet, crandn
from irs_cellfree.scenario import SystemConfig, build_frequency_grid

REDUCED = dict(n_bs=2, n_tx=2, n_users=2, n_rx=2, n_irs=1, n_elems=16, n_tones=4)


@pytest.fixture
def reduced_config():
    return SystemConfig(**REDUCED)


def random_channels(rng, M=2, Nb=2, K=2, Nt=2, Nr=2, Nc=1, R=3, scale=1.0):
    return ChannelSet(
        direct=scale * crandn(rng, (M, Nb, K, Nt, Nr)),
        bs_irs=crandn(rng, (M, Nb, Nc, R, Nt)),
        irs_user=scale * crandn(rng, (M, Nc, K, R, Nr)),
    )


def random_instance(seed, M=2, Nb=2, K=2, Nt=2, Nr=2, Nc=1, R=3, power=1.0):
    """Unit-scale channels, a feasible precoder and a reflection vector in the disk."""
    rng = np.random.default_rng(seed)
    ch = random_channels(rng, M, Nb, K, Nt, Nr, Nc, R)
    W = project_bs_blocks(crandn(rng, (M, K, Nb * Nt)), np.full(Nb, power))
    phi = 0.9 * np.exp(2j * np.pi * rng.uniform(size=(M, Nc * R))) * np.sqrt(rng.uniform(size=(M, Nc * R)))
    return ch, W, phi


@pytest.fixture
def grid16():
    return build_frequency_grid(SystemConfig())
