import numpy as np
import pytest

from elmnet.core import NetworkConfig, NeuronConfig


def tiny_hidden(**kwargs) -> NeuronConfig:
    base = dict(d_m=3, l_mlp=1, d_mlp=6, d_tree=3, d_branch=2, c=10.0,
                lam=5.0, tau_min=1.0, tau_max=50.0, tau_r=5.0)
    base.update(kwargs)
    return NeuronConfig(**base).validate()


def tiny_readout(**kwargs) -> NeuronConfig:
    base = dict(d_m=2, l_mlp=0, d_mlp=2, d_tree=2, d_branch=2, c=1.0,
                lam=5.0, tau_min=1.0, tau_max=20.0, tau_r=5.0,
                output_mode="linear-no-filter")
    base.update(kwargs)
    return NeuronConfig(**base).validate()


def tiny_network(n_rec=4, d_inp=5, d_out=3, hidden=None, readout=None,
                 **kwargs) -> NetworkConfig:
    return NetworkConfig(
        hidden=hidden or tiny_hidden(),
        readout=readout or tiny_readout(),
        n_rec=n_rec, d_inp=d_inp, d_out=d_out,
        **{**dict(rho_rec=0.4, n_readout=3, embed_scale=3.0), **kwargs},
    ).validate()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
