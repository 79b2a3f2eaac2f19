import numpy as np
import pytest

from conftest import actor_set, random_graph
from ircnet.effects import EffectSpec, ModelSpec, PeriodContext
from ircnet.panel import ActorSet, BinaryNetwork, CovariateSet, empty_network
from ircnet.simulate import (SimState, SimulationError, ministep,
                             simulate_period)

ACTORS3 = ActorSet(("A", "B", "C"))


def density_model(beta, rate):
    return ModelSpec((EffectSpec("density"),), beta=np.array([beta]),
                     rates=np.array([rate]))


def option_probs(model, x, i, covs=None):
    """Hand oracle: multinomial logit over actor i's n options."""
    n = x.shape[0]
    beta = model.beta
    deltas = np.zeros(n)
    for j in range(n):
        if j == i:
            continue
        d = 0.0
        for k, eff in enumerate(model.effects):
            from ircnet.effects import change_statistic
            net = BinaryNetwork(actor_set(n), 0, x)
            d += beta[k] * change_statistic(eff, net, i, j, covs, 0)
        deltas[j] = d
    w = np.exp(deltas - deltas.max())
    return w / w.sum()


def exact_stationary_density(beta, lam=1.0):
    """8-state generator of the n=3 density-only forcing chain, solved exactly."""
    dyads = [(0, 1), (0, 2), (1, 2)]
    q = np.zeros((8, 8))
    for s in range(8):
        x = np.zeros((3, 3))
        for k, (i, j) in enumerate(dyads):
            if (s >> k) & 1:
                x[i, j] = x[j, i] = 1
        for k, (i, j) in enumerate(dyads):
            rate = 0.0
            for actor, other in ((i, j), (j, i)):
                deltas = np.zeros(3)
                for partner in range(3):
                    if partner != actor:
                        deltas[partner] = beta * (1.0 if x[actor, partner] == 0 else -1.0)
                w = np.exp(deltas - deltas.max())
                rate += lam * (w / w.sum())[other]
            q[s, s ^ (1 << k)] = rate
        q[s, s] = -q[s].sum()
    a = np.vstack([q.T, np.ones(8)])
    b = np.zeros(9)
    b[-1] = 1
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    return pi


def state_index(net):
    return int(net.x[0, 1] + 2 * net.x[0, 2] + 4 * net.x[1, 2])


class TestMinistep:
    def test_uniform_options_at_zero_beta(self, rng):
        # all betas zero: each of the n options (keep or toggle) is 1/n
        n = 4
        model = ModelSpec((EffectSpec("density"),), beta=np.array([0.0]),
                          rates=np.array([1.0]))
        for graph_p in (0.0, 0.5):
            net = random_graph(rng, n, graph_p)
            for i in range(n):
                p = option_probs(model, net.x.astype(float), i)
                assert np.allclose(p, 1.0 / n)

    def test_large_negative_beta_drops_ties(self):
        # dense start, beta = -10: keep/drop probabilities concentrate on drops
        n = 5
        x = np.ones((n, n), dtype=np.int8) - np.eye(n, dtype=np.int8)
        model = ModelSpec((EffectSpec("density"),), beta=np.array([-10.0]),
                          rates=np.array([1.0]))
        p = option_probs(model, x.astype(float), 0)
        drop_mass = p[[j for j in range(n) if j != 0]].sum()
        assert drop_mass > 1 - 1e-3

    def test_n3_option_probabilities_all_states(self):
        # every state of the 8-state chain matches the hand-computed logit
        model = density_model(0.5, 1.0)
        ctx = PeriodContext.build(model, CovariateSet(), 3, 0, model.beta)
        for s in range(8):
            x = np.zeros((3, 3))
            for k, (i, j) in enumerate([(0, 1), (0, 2), (1, 2)]):
                if (s >> k) & 1:
                    x[i, j] = x[j, i] = 1
            for i in range(3):
                deltas = ctx.objective_delta_row(x, x.sum(axis=1), i, model.beta)
                deltas[i] = 0.0
                w = np.exp(deltas - deltas.max())
                got = w / w.sum()
                expected = option_probs(model, x, i)
                assert np.allclose(got, expected)

    def test_nonfinite_objective_raises(self):
        model = density_model(np.inf, 1.0)
        state = SimState(x=np.zeros((3, 3)), deg=np.zeros(3), t=0.0, period=0,
                         rng=np.random.default_rng(0))
        with pytest.raises(SimulationError):
            for _ in range(50):
                ministep(state, model)

    def test_symmetry_preserved(self, rng):
        n = 8
        model = density_model(0.0, 5.0)
        start = random_graph(rng, n, 0.3)
        end, _, _ = simulate_period(start, model, None, 0, seed=3)
        assert np.array_equal(end.x, end.x.T)
        assert np.all(np.diagonal(end.x) == 0)


class TestSimulatePeriod:
    def test_tiny_rate_leaves_network_unchanged(self, rng):
        # rate -> 0+ freezes the network: total rate n * lambda, so the
        # no-step probability is exp(-n * lambda)
        n = 10
        start = random_graph(rng, n, 0.3)
        for lam, bound in ((0.001, 990), (0.01, 880)):
            model = density_model(0.0, lam)
            unchanged = 0
            for r in range(1000):
                _, _, changed = simulate_period(start, model, None, 0, seed=r)
                unchanged += changed == 0
            assert unchanged >= bound

    def test_seed_determinism(self, rng):
        n = 8
        start = random_graph(rng, n, 0.3)
        model = density_model(-0.5, 3.0)
        a, sa, _ = simulate_period(start, model, None, 0, seed=42)
        b, sb, _ = simulate_period(start, model, None, 0, seed=42)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(sa, sb)

    def test_expected_ministep_count(self):
        # mean steps per period ~ n * lambda within 5%
        n, lam = 10, 2.0
        model = density_model(0.0, lam)
        start = empty_network(actor_set(n))
        from ircnet.simulate import _start_state
        from ircnet.effects import PeriodContext
        rng = np.random.default_rng(99)
        total = 0
        runs = 10000
        ctx = PeriodContext.build(model, CovariateSet(), n, 0, model.beta)
        for _ in range(runs):
            state = _start_state(start, 0, rng)
            while state.t < 1.0:
                ministep(state, model, None, ctx)
            total += state.steps
        assert total / runs == pytest.approx(n * lam, rel=0.05)

    @pytest.mark.slow
    @pytest.mark.parametrize("beta", [-1.0, 0.0, 0.5])
    def test_stationary_distribution(self, beta):
        pi = exact_stationary_density(beta)
        model = density_model(beta, 5.0)
        rng = np.random.default_rng(7)
        x = empty_network(ACTORS3)
        counts = np.zeros(8)
        for rep in range(9000):
            x, _, _ = simulate_period(x, model, None, 0, rng=rng)
            if rep >= 500:
                counts[state_index(x)] += 1
        emp = counts / counts.sum()
        assert 0.5 * np.abs(emp - pi).sum() < 0.02

    def test_pairwise_conjunctive_runs(self, rng):
        n = 8
        start = random_graph(rng, n, 0.2)
        model = ModelSpec((EffectSpec("density"),), beta=np.array([0.5]),
                          rates=np.array([3.0]), model_type="pairwise-conjunctive")
        end, _, _ = simulate_period(start, model, None, 0, seed=5)
        assert np.array_equal(end.x, end.x.T)
