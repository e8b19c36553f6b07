import dataclasses

import pytest

from skynoma.channel import build_channel_set
from skynoma.scenario import ScenarioConfig, generate_topology


@pytest.fixture(scope="session")
def config():
    return ScenarioConfig()


@pytest.fixture(scope="session")
def small_config():
    # within the exhaustive-search size guard
    return dataclasses.replace(ScenarioConfig(), users_per_cell=4, n_subchannels=2)


@pytest.fixture(scope="session")
def channels(config):
    topo = generate_topology(config, seed=7)
    return build_channel_set(topo, config, seed=7)


@pytest.fixture(scope="session")
def small_channels(small_config):
    topo = generate_topology(small_config, seed=7)
    return build_channel_set(topo, small_config, seed=7)
