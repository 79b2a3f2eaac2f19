import numpy as np
import pytest

from ircnet.panel import ActorSet, BinaryNetwork


def actor_set(n):
    return ActorSet(tuple(f"N{i:03d}" for i in range(n)))


def random_graph(rng, n, p=0.4, year=0):
    x = (rng.random((n, n)) < p).astype(np.int8)
    x = np.triu(x, 1)
    x = x + x.T
    return BinaryNetwork(actor_set(n), year, x)


def toggled(net, i, j):
    x = net.x.copy()
    x[i, j] = 1 - x[i, j]
    x[j, i] = x[i, j]
    return BinaryNetwork(net.actors, net.year, x)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
