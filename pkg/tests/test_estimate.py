import numpy as np
import pytest

from conftest import actor_set, random_graph
from ircnet.effects import EffectSpec, ModelSpec
from ircnet.estimate import (EstimationError, EstimationOptions,
                             SingularDerivativeError, estimate, initialize,
                             observed_targets, p_value, p_values,
                             phase1_derivative, phase2_update, phase3_finalize,
                             stars)
from ircnet.panel import (ActorCovariate, BinaryNetwork, BinaryNetSeries,
                          CovariateSet, empty_network)
from ircnet.simulate import simulate_period


def make_panel(rng, n, waves, model=None, covs=None, start_p=0.1, seed=0):
    """Simulate a panel from a generating model (or random waves if None)."""
    net = random_graph(rng, n, start_p, year=2000)
    waves_list = [net]
    gen_rng = np.random.default_rng(seed)
    for m in range(waves - 1):
        if model is None:
            nxt = random_graph(rng, n, start_p, year=2001 + m)
        else:
            end, _, _ = simulate_period(waves_list[-1], model, covs, m, rng=gen_rng)
            nxt = BinaryNetwork(net.actors, 2001 + m, end.x)
        waves_list.append(nxt)
    return BinaryNetSeries(tuple(waves_list))


def density_model(n_effects_extra=()):
    return ModelSpec((EffectSpec("density"),) + tuple(n_effects_extra))


class TestInitialize:
    def test_identical_waves_floor(self, rng):
        net = random_graph(rng, 10, 0.2)
        panel = BinaryNetSeries((net, BinaryNetwork(net.actors, 2001, net.x)))
        theta0 = initialize(panel, density_model())
        assert theta0[0] == 0.5

    def test_one_toggle_scales_inverse_n(self, rng):
        n = 10
        a = empty_network(actor_set(n), 2000)
        x = a.x.copy()
        x[0, 1] = x[1, 0] = 1
        panel = BinaryNetSeries((a, BinaryNetwork(a.actors, 2001, x)))
        theta0 = initialize(panel, density_model())
        assert theta0[0] == pytest.approx(2.0 * 1 * n / (n - 1) / n)

    def test_structure_for_30_wave_panel(self, rng):
        panel = make_panel(rng, 8, 30, start_p=0.3)
        effects = (EffectSpec("density"), EffectSpec("gwesp"), EffectSpec("degPlus"))
        theta0 = initialize(panel, ModelSpec(effects))
        assert len(theta0) == 29 + 3
        assert theta0[29] == -1.0           # density start
        assert np.all(theta0[30:] == 0.0)   # other effects start at 0


class TestPhase1:
    def test_density_derivative_positive(self, rng):
        model = ModelSpec((EffectSpec("density"),),
                          rates=np.array([2.0]), beta=np.array([-1.0]))
        panel = make_panel(rng, 10, 2, model)
        theta0 = initialize(panel, model)
        opts = EstimationOptions(n1=20, seed=1)
        d = phase1_derivative(theta0, panel, model, None, opts)
        assert d[1, 1] > 0  # expected edge count rises with the density parameter

    def test_duplicated_effect_is_singular(self, rng):
        effects = (EffectSpec("density"), EffectSpec("degPlus"),
                   EffectSpec("degPlus"))
        model = ModelSpec(effects, rates=np.array([2.0]),
                          beta=np.array([-1.0, 0.0, 0.0]))
        panel = make_panel(rng, 8, 2, model)
        theta0 = initialize(panel, model)
        with pytest.raises(SingularDerivativeError):
            phase1_derivative(theta0, panel, model, None,
                              EstimationOptions(n1=10, seed=2))

    def test_matches_oversampled_oracle_on_diagonal(self, rng):
        # high-precision finite differences with 10x simulations
        effects = (EffectSpec("density"), EffectSpec("degPlus"))
        model = ModelSpec(effects, rates=np.array([2.0]),
                          beta=np.array([-1.5, 0.05]))
        panel = make_panel(rng, 12, 2, model)
        theta0 = np.array([2.0, -1.5, 0.05])
        fast = phase1_derivative(theta0, panel, model, None,
                                 EstimationOptions(n1=40, seed=3))
        slow = phase1_derivative(theta0, panel, model, None,
                                 EstimationOptions(n1=400, seed=4))
        # the rate diagonal is small and noisy; compare effect diagonals
        assert fast[0, 0] >= 0.0
        for k in (1, 2):
            assert fast[k, k] == pytest.approx(slow[k, k], rel=0.25)


class TestPhase2And3:
    def test_fixed_point_near_truth(self, rng):
        model = ModelSpec((EffectSpec("density"),),
                          rates=np.array([2.0]), beta=np.array([-2.0]))
        panel = make_panel(rng, 20, 2, model, seed=11)
        opts = EstimationOptions(n1=60, n3=400, seed=5, initial_gain=0.05,
                                 keep_draws=False)
        truth = np.array([2.0, -2.0])
        d = phase1_derivative(truth, panel, model, None, opts,
                              np.random.default_rng(1))
        theta_hat, _ = phase2_update(truth, d, panel, model, None, opts,
                                     np.random.default_rng(2))
        res = phase3_finalize(theta_hat, panel, model, None, opts,
                              np.random.default_rng(3))
        assert np.all(np.abs(res.theta - truth) < 3 * res.se + 1e-9)

    def test_density_recovery(self, rng):
        model = ModelSpec((EffectSpec("density"),),
                          rates=np.array([2.0]), beta=np.array([-2.0]))
        panel = make_panel(rng, 20, 2, model, seed=21)
        res = estimate(panel, model, None,
                       EstimationOptions(n1=30, n3=300, seed=6, keep_draws=False))
        assert abs(res.beta[0] - (-2.0)) < 3 * res.beta_se[0]

    def test_rates_recovery(self, rng):
        model = ModelSpec((EffectSpec("density"),),
                          rates=np.array([1.5]), beta=np.array([-1.5]))
        panel = make_panel(rng, 20, 2, model, seed=31)
        res = estimate(panel, model, None,
                       EstimationOptions(n1=30, n3=300, seed=7, keep_draws=False))
        assert abs(res.rates[0] - 1.5) < 3 * res.se[0]

    def test_deterministic_given_seed(self, rng):
        model = ModelSpec((EffectSpec("density"),),
                          rates=np.array([1.5]), beta=np.array([-1.5]))
        panel = make_panel(rng, 10, 2, model, seed=41)
        opts = EstimationOptions(n1=25, n3=60, seed=8)
        r1 = estimate(panel, model, None, opts)
        r2 = estimate(panel, model, None, opts)
        assert np.array_equal(r1.theta, r2.theta)
        assert np.array_equal(r1.se, r2.se)
        assert r1.conv_ratio == r2.conv_ratio
        assert np.array_equal(r1.draws_stats, r2.draws_stats)

    def test_moments_match_at_estimate(self, rng):
        model = ModelSpec((EffectSpec("density"),),
                          rates=np.array([2.0]), beta=np.array([-2.0]))
        panel = make_panel(rng, 15, 2, model, seed=51)
        res = estimate(panel, model, None,
                       EstimationOptions(n1=30, n3=400, seed=9, keep_draws=False))
        s_obs = observed_targets(panel, model, None)
        dev = res.draws_stats.mean(axis=0) - s_obs
        sd = res.draws_stats.std(axis=0, ddof=1)
        assert np.all(np.abs(dev) < 4 * sd / np.sqrt(400) + 1e-9)

    def test_actor_relabeling_invariance(self, rng):
        # permuting actor labels leaves estimates within noise
        model = ModelSpec((EffectSpec("density"),),
                          rates=np.array([2.0]), beta=np.array([-2.0]))
        panel = make_panel(rng, 12, 2, model, seed=61)
        perm = np.random.default_rng(0).permutation(12)
        relabeled = BinaryNetSeries(tuple(
            BinaryNetwork(panel.actors, net.year, net.x[np.ix_(perm, perm)])
            for net in panel))
        opts = EstimationOptions(n1=40, n3=200, seed=10, keep_draws=False)
        r1 = estimate(panel, model, None, opts)
        r2 = estimate(relabeled, model, None, opts)
        assert np.all(np.abs(r1.theta - r2.theta) < 3 * (r1.se + r2.se) + 1e-9)


class TestPValues:
    def test_table_strong_effect(self):
        p = p_value(0.6447, 0.0548)
        assert p < 0.001 and stars(p) == "***"

    def test_table_boundary_effect(self):
        p = p_value(1.1806, 0.5354)
        assert 0.01 < p < 0.05 and stars(p) == "*"

    def test_zero_estimate(self):
        assert p_value(0.0, 1.0) == 1.0

    def test_zero_se_rejected(self):
        with pytest.raises(EstimationError):
            p_value(1.0, 0.0)

    def test_rows_exclude_rates(self, rng):
        model = ModelSpec((EffectSpec("density"),),
                          rates=np.array([1.5]), beta=np.array([-1.5]))
        panel = make_panel(rng, 10, 2, model, seed=71)
        res = estimate(panel, model, None,
                       EstimationOptions(n1=25, n3=60, seed=12, keep_draws=False))
        rows = p_values(res)
        assert len(rows) == 1 and rows[0][0] == "density"


class TestOptionsValidation:
    def test_gain_bounds(self):
        with pytest.raises(EstimationError):
            EstimationOptions(initial_gain=1.5)

    def test_positive_counts(self):
        with pytest.raises(EstimationError):
            EstimationOptions(n1=0)
