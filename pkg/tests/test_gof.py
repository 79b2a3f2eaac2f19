import itertools
from math import comb

import numpy as np
import pytest

from conftest import actor_set, random_graph
from ircnet.gof import (AuxiliaryStat, GofError, degree_distribution_aux,
                        gof_test, mahalanobis_test, triad_census_undirected)
from ircnet.panel import BinaryNetwork, PanelError, empty_network


def k3():
    x = np.ones((3, 3), dtype=np.int8) - np.eye(3, dtype=np.int8)
    return BinaryNetwork(actor_set(3), 0, x)


def path4():
    x = np.zeros((4, 4), dtype=np.int8)
    for i in range(3):
        x[i, i + 1] = x[i + 1, i] = 1
    return BinaryNetwork(actor_set(4), 0, x)


def brute_force_census(net):
    """Oracle: classify every actor triple by explicit enumeration."""
    n = net.actors.n
    counts = [0, 0, 0, 0]
    for a, b, c in itertools.combinations(range(n), 3):
        e = int(net.x[a, b] + net.x[a, c] + net.x[b, c])
        counts[e] += 1
    return np.array(counts)


class TestDegreeDistribution:
    def test_empty_network(self):
        assert degree_distribution_aux(empty_network(actor_set(5)), 2).tolist() == \
            [5, 0, 0, 0]

    def test_k3(self):
        assert degree_distribution_aux(k3(), 2).tolist() == [0, 0, 3, 0]

    def test_overflow_bucket(self):
        assert degree_distribution_aux(k3(), 1).tolist() == [0, 0, 3]

    def test_matches_recount(self, rng):
        for _ in range(30):
            net = random_graph(rng, 20, float(rng.uniform(0.05, 0.6)))
            max_k = 6
            got = degree_distribution_aux(net, max_k)
            deg = net.x.sum(axis=1)
            expected = [int((deg == k).sum()) for k in range(max_k + 1)]
            expected.append(int((deg > max_k).sum()))
            assert got.tolist() == expected
            assert got.sum() == 20


class TestTriadCensus:
    def test_k3(self):
        assert triad_census_undirected(k3()).tolist() == [0, 0, 0, 1]

    def test_empty_n4(self):
        assert triad_census_undirected(empty_network(actor_set(4))).tolist() == \
            [4, 0, 0, 0]

    def test_path4_by_hand(self):
        assert triad_census_undirected(path4()).tolist() == [0, 2, 2, 0]

    def test_small_n_rejected(self):
        with pytest.raises(PanelError):
            triad_census_undirected(empty_network(actor_set(2)))

    def test_matches_enumeration_oracle(self, rng):
        for _ in range(50):
            n = int(rng.integers(3, 15))
            net = random_graph(rng, n, float(rng.uniform(0.0, 0.8)))
            got = triad_census_undirected(net)
            assert np.array_equal(got, brute_force_census(net))
            assert got.sum() == comb(n, 3)


class FakeResult:
    def __init__(self, finals):
        self.draws_final_networks = finals
        self.draws_stats = None


class TestGofTest:
    def make_draws(self, rng, n, n_draws, p=0.3):
        return [random_graph(rng, n, p) for _ in range(n_draws)]

    def test_too_few_draws(self, rng):
        res = FakeResult(self.make_draws(rng, 8, 5))
        with pytest.raises(GofError):
            gof_test(res, random_graph(rng, 8, 0.3), "triad_census")

    def test_observed_at_mean_gives_p_one(self, rng):
        sims = rng.normal(size=(100, 4))
        observed = sims.mean(axis=0)
        _, _, p = mahalanobis_test(observed, sims)
        assert p == 1.0

    def test_constant_dimension_dropped(self, rng):
        sims = rng.normal(size=(60, 3))
        sims[:, 1] = 7.0  # degenerate dimension
        observed = sims.mean(axis=0)
        d_obs, d_draws, p = mahalanobis_test(observed, sims)
        assert np.isfinite(d_obs) and np.all(np.isfinite(d_draws))
        assert p == 1.0

    def test_affine_invariance(self, rng):
        sims = rng.normal(size=(80, 4))
        observed = rng.normal(size=4)
        scale = np.array([2.0, 5.0, 0.5, 10.0])
        shift = np.array([1.0, -3.0, 0.0, 7.0])
        _, _, p1 = mahalanobis_test(observed, sims)
        _, _, p2 = mahalanobis_test(observed * scale + shift,
                                    sims * scale + shift)
        assert p1 == pytest.approx(p2)

    def test_self_consistent_draws(self, rng):
        # observed drawn from the same distribution as the draws: p not tiny
        draws = self.make_draws(rng, 12, 200, 0.3)
        observed = random_graph(rng, 12, 0.3)
        res = FakeResult(draws)
        for kind in ("degree_distribution", "triad_census"):
            aux = gof_test(res, observed, kind)
            assert 0.0 <= aux.p <= 1.0
            assert aux.observed.shape == aux.q50.shape

    def test_quantile_bands_ordered(self, rng):
        res = FakeResult(self.make_draws(rng, 10, 50, 0.4))
        aux = gof_test(res, random_graph(rng, 10, 0.4), "degree_distribution")
        assert np.all(aux.q05 <= aux.q50) and np.all(aux.q50 <= aux.q95)
