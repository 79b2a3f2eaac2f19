"""Continuous-time ministep simulation of undirected network evolution.

Actors get change opportunities at total rate n * lambda within a unit-
length period. At each opportunity one uniformly chosen actor compares n
options (keep the network, or toggle any one of its n-1 ties) by
multinomial logit over the objective-function changes. Under the forcing
rule the chosen toggle is imposed on both endpoints; under the
pairwise-conjunctive rule tie creation additionally requires the partner
to agree (logistic in the partner's own objective change), dissolution is
unilateral.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .effects import ModelSpec, PeriodContext
from .panel import BinaryNetwork, CovariateSet

MAX_MINISTEPS = 10_000_000


class SimulationError(RuntimeError):
    pass


@dataclass
class SimState:
    """Mutable simulation state for one period."""

    x: np.ndarray          # float adjacency, mutated in place
    deg: np.ndarray        # degree vector, kept in sync
    t: float
    period: int
    rng: np.random.Generator
    steps: int = 0


def _start_state(start: BinaryNetwork, period: int, rng) -> SimState:
    x = start.x.astype(float)
    return SimState(x=x, deg=x.sum(axis=1), t=0.0, period=period, rng=rng)


def ministep(state: SimState, model: ModelSpec, covs: CovariateSet = None,
             ctx: PeriodContext = None) -> SimState:
    """Advance one actor opportunity; mutates and returns `state`.

    Time is advanced by an exponential holding time with total rate
    n * lambda; the tie change (if any) is applied afterwards. If the
    holding time overshoots t = 1 the period is over and no change is made.
    """
    n = state.x.shape[0]
    rate = float(model.rates[state.period])
    if rate <= 0:
        raise SimulationError("rate must be positive")
    if ctx is None:
        ctx = PeriodContext.build(model, covs or CovariateSet(), n, state.period,
                                  model.beta)
    rng = state.rng
    state.t += rng.exponential(1.0 / (n * rate))
    if state.t >= 1.0:
        return state
    state.steps += 1
    if state.steps > MAX_MINISTEPS:
        raise SimulationError("ministep budget exceeded; rates are diverging")

    i = int(rng.integers(n))
    delta = ctx.objective_delta_row(state.x, state.deg, i, model.beta)
    delta[i] = 0.0  # slot i doubles as the keep-the-network option
    if not np.all(np.isfinite(delta)):
        raise SimulationError(
            f"non-finite objective change for actor {i} (beta={model.beta})")
    logits = delta - delta.max()
    weights = np.exp(logits)
    probs = weights / weights.sum()
    j = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    j = min(j, n - 1)
    if j == i:
        return state

    creating = state.x[i, j] == 0.0
    if model.model_type == "pairwise-conjunctive" and creating:
        delta_j = ctx.objective_delta_row(state.x, state.deg, j, model.beta)[i]
        if rng.random() >= 1.0 / (1.0 + np.exp(-delta_j)):
            return state
    sign = 1.0 if creating else -1.0
    state.x[i, j] += sign
    state.x[j, i] += sign
    state.deg[i] += sign
    state.deg[j] += sign
    return state


def simulate_period(start: BinaryNetwork, model: ModelSpec,
                    covs: CovariateSet = None, period: int = 0,
                    rng=None, seed=None):
    """Run ministeps over one unit period.

    Returns (end_network, effect_totals, n_changed_dyads) where the totals
    are the per-effect network statistics of the end network (imputed
    covariates excluded via the target mask) and n_changed_dyads is the
    Hamming distance from the start wave.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    covs = covs or CovariateSet()
    n = start.actors.n
    ctx = PeriodContext.build(model, covs, n, period, model.beta)
    state = _start_state(start, period, rng)
    while state.t < 1.0:
        ministep(state, model, covs, ctx)
    xi = state.x.astype(np.int8)
    end = BinaryNetwork(start.actors, start.year, xi)
    totals = masked_totals(model, ctx, state.x)
    changed = int(np.count_nonzero(xi != start.x)) // 2
    return end, totals, changed


def masked_totals(model: ModelSpec, ctx: PeriodContext, x: np.ndarray) -> np.ndarray:
    """Per-effect totals with missing-covariate dyads excluded.

    Matches the convention used for observed target statistics so that
    method-of-moments deviations compare like with like.
    """
    deg = x.sum(axis=1)
    totals = np.zeros(model.n_effects)
    raw = ctx.totals(x, deg)
    for k in raw:
        totals[k] = raw[k]
    return totals


def simulate_panel(panel, model: ModelSpec, covs: CovariateSet = None, rng=None,
                   seed=None):
    """Simulate every period from its observed start wave.

    Returns (stats, end_networks): stats is the concatenated statistic
    vector [changed dyads per period, per-effect totals summed over
    periods]; end_networks holds each period's simulated end state.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    n_periods = panel.n_waves - 1
    changes = np.zeros(n_periods)
    totals = np.zeros(model.n_effects)
    ends = []
    for m in range(n_periods):
        end, per_effect, changed = simulate_period(panel.wave(m), model, covs,
                                                   period=m, rng=rng)
        changes[m] = changed
        totals += per_effect
        ends.append(end)
    return np.concatenate([changes, totals]), ends
