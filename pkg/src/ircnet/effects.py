"""Effect statistics for the tie-change objective function.

Each effect defines a per-actor statistic s_i(x) and an incremental change
form used by the simulator: the difference in actor i's statistic when the
tie (i, j) is toggled. Covariate effects read grand-mean-centered values;
missing entries are imputed to the mean (contributing 0) during simulation
and excluded from observed target sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .panel import BinaryNetwork, BinaryNetSeries, CovariateSet

STRUCTURAL_KINDS = ("density", "gwesp", "degPlus")
ACTOR_COV_KINDS = ("egoPlusAltX", "egoPlusAltSqX", "simX")
DYAD_COV_KINDS = ("dyadX",)
ALL_KINDS = STRUCTURAL_KINDS + ACTOR_COV_KINDS + DYAD_COV_KINDS


class EffectError(ValueError):
    """Bad effect specification or missing covariate."""


@dataclass(frozen=True)
class EffectSpec:
    """One term of the objective function.

    kind: one of density, gwesp, degPlus, egoPlusAltX, egoPlusAltSqX,
    simX, dyadX. Covariate effects must name their covariate; gwesp takes
    a decay parameter (default ln 2: each extra shared partner adds half
    the previous increment).
    """

    kind: str
    covariate: str = None
    gwesp_decay: float = math.log(2.0)

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise EffectError(f"unknown effect kind {self.kind!r}")
        needs_cov = self.kind in ACTOR_COV_KINDS + DYAD_COV_KINDS
        if needs_cov and not self.covariate:
            raise EffectError(f"effect {self.kind} requires a covariate name")
        if not needs_cov and self.covariate:
            raise EffectError(f"effect {self.kind} takes no covariate")
        if self.gwesp_decay <= 0:
            raise EffectError("gwesp decay must be positive")

    @property
    def label(self) -> str:
        return f"{self.covariate} ({self.kind})" if self.covariate else self.kind


@dataclass(frozen=True)
class ModelSpec:
    """Ordered effect list plus parameter values and the tie-change rule."""

    effects: tuple
    beta: np.ndarray = None
    rates: np.ndarray = None
    model_type: str = "forcing"

    def __post_init__(self):
        effects = tuple(self.effects)
        if not any(e.kind == "density" for e in effects):
            raise EffectError("model must include the density effect")
        if self.model_type not in ("forcing", "pairwise-conjunctive"):
            raise EffectError(f"unknown model type {self.model_type!r}")
        object.__setattr__(self, "effects", effects)
        if self.beta is not None:
            beta = np.asarray(self.beta, dtype=float)
            if beta.shape != (len(effects),):
                raise EffectError("beta length must match effect list")
            object.__setattr__(self, "beta", beta)
        if self.rates is not None:
            rates = np.asarray(self.rates, dtype=float)
            if np.any(rates <= 0):
                raise EffectError("rates must be strictly positive")
            object.__setattr__(self, "rates", rates)

    @property
    def n_effects(self) -> int:
        return len(self.effects)


def _gwesp_weight(esp, decay):
    """Edgewise contribution e^a (1 - (1 - e^-a)^esp) for esp shared partners."""
    c = 1.0 - math.exp(-decay)
    return math.exp(decay) * (1.0 - np.power(c, esp))


def _actor_cov(effect, covs: CovariateSet):
    try:
        return covs.actor[effect.covariate]
    except KeyError:
        raise EffectError(f"actor covariate {effect.covariate!r} not provided")


def _dyad_cov(effect, covs: CovariateSet):
    try:
        return covs.dyad[effect.covariate]
    except KeyError:
        raise EffectError(f"dyadic covariate {effect.covariate!r} not provided")


def similarity_mean(cov) -> float:
    """Mean of sim_ij = 1 - |v_i - v_j| / range over observed dyads, all periods."""
    rng = cov.value_range
    if rng == 0.0:
        return 1.0
    total, count = 0.0, 0
    for p in range(cov.n_periods):
        v = cov.values[:, p]
        obs = ~np.isnan(v)
        vo = v[obs]
        if vo.size < 2:
            continue
        diff = np.abs(vo[:, None] - vo[None, :])
        iu = np.triu_indices(vo.size, k=1)
        sims = 1.0 - diff[iu] / rng
        total += sims.sum()
        count += sims.size
    if count == 0:
        return 1.0
    return total / count


def dyadic_contribution(effect: EffectSpec, covs: CovariateSet, period: int,
                        imputed: bool = True):
    """(contrib, valid): per-dyad contribution matrix for a covariate effect.

    contrib[i, j] is what toggling tie (i, j) adds to actor i's statistic.
    `valid` is None for fully observed effects, else a boolean dyad mask of
    entries backed by observed data (used for target statistics). With
    imputed=True missing actor values are replaced by the grand mean.
    """
    if effect.kind == "dyadX":
        return _dyad_cov(effect, covs).centered(), None
    cov = _actor_cov(effect, covs)
    valid = None
    if not cov.observed(period).all():
        obs = cov.observed(period)
        valid = obs[:, None] & obs[None, :]
    if effect.kind == "egoPlusAltX":
        v = cov.centered(period)
        contrib = v[:, None] + v[None, :]
    elif effect.kind == "egoPlusAltSqX":
        v = cov.centered(period)
        contrib = (v[:, None] + v[None, :]) ** 2
    elif effect.kind == "simX":
        v = cov.filled(period)
        rng = cov.value_range
        if rng == 0.0:
            contrib = np.ones((v.size, v.size)) - similarity_mean(cov)
        else:
            contrib = 1.0 - np.abs(v[:, None] - v[None, :]) / rng - similarity_mean(cov)
    else:
        raise EffectError(f"{effect.kind} is not a covariate effect")
    np.fill_diagonal(contrib, 0.0)
    return contrib, valid


def statistic(effect: EffectSpec, net: BinaryNetwork, covs: CovariateSet = None,
              period: int = 0, use_mask: bool = True):
    """(total, per_actor) statistic of one effect on a network.

    use_mask=True excludes dyads with missing covariate data (the target-
    statistic convention); use_mask=False evaluates with imputed values
    (the simulation convention).
    """
    x = net.x.astype(float)
    if effect.kind == "density":
        per_actor = x.sum(axis=1)
    elif effect.kind == "degPlus":
        deg = x.sum(axis=1)
        per_actor = x @ deg
    elif effect.kind == "gwesp":
        esp = x @ x
        w = _gwesp_weight(esp, effect.gwesp_decay)
        per_actor = (x * w).sum(axis=1)
    else:
        contrib, valid = dyadic_contribution(effect, covs, period)
        if use_mask and valid is not None:
            contrib = np.where(valid, contrib, 0.0)
        per_actor = (x * contrib).sum(axis=1)
    return float(per_actor.sum()), per_actor


def change_row(effect: EffectSpec, x: np.ndarray, deg: np.ndarray, i: int,
               contrib: np.ndarray = None):
    """Vector over j of the change in actor i's statistic when (i, j) toggles.

    x is a float adjacency matrix, deg its degree vector; for covariate
    effects pass the precomputed `dyadic_contribution` matrix. Entry i of
    the result is meaningless (self-toggle is not an option).
    """
    row = x[i]
    adding = row == 0.0
    sign = np.where(adding, 1.0, -1.0)
    if effect.kind == "density":
        return sign
    if effect.kind == "degPlus":
        # adding tie (i,j): partner degree becomes deg_j + 1; removing: -deg_j
        return np.where(adding, deg + 1.0, -deg)
    if effect.kind == "gwesp":
        decay = effect.gwesp_decay
        c = 1.0 - math.exp(-decay)
        ea = math.exp(decay)
        esp = x @ row  # shared partners of i with every j
        base = _gwesp_weight(esp, decay)
        # toggling (i,j) shifts esp of every edge (i,h) with h adjacent to j
        inc = ea * (1.0 - c) * np.power(c, esp) * row       # gain per affected edge
        dec = np.where(row > 0, ea * (1.0 - c) * np.power(c, np.maximum(esp, 1) - 1), 0.0) * row
        corr_add = x @ inc
        corr_rem = x @ dec
        return np.where(adding, base + corr_add, -(base + corr_rem))
    if contrib is None:
        raise EffectError(f"effect {effect.kind} needs a contribution matrix")
    return sign * contrib[i]


def change_statistic(effect: EffectSpec, net: BinaryNetwork, i: int, j: int,
                     covs: CovariateSet = None, period: int = 0) -> float:
    """Change in actor i's statistic when tie (i, j) is toggled."""
    if i == j:
        raise EffectError("self-ties are not defined")
    x = net.x.astype(float)
    deg = x.sum(axis=1)
    contrib = None
    if effect.kind not in STRUCTURAL_KINDS:
        contrib, _ = dyadic_contribution(effect, covs, period)
    return float(change_row(effect, x, deg, i, contrib)[j])


def target_statistics(panel: BinaryNetSeries, model: ModelSpec,
                      covs: CovariateSet = None) -> np.ndarray:
    """Per-effect method-of-moments targets.

    For effect k: sum over periods m of the total statistic evaluated on
    observed wave m+1 with period-m covariate values, excluding dyads with
    missing covariate data.
    """
    if panel.n_waves < 2:
        raise EffectError("target statistics need at least 2 waves")
    targets = np.zeros(model.n_effects)
    for m in range(panel.n_waves - 1):
        for k, eff in enumerate(model.effects):
            total, _ = statistic(eff, panel.wave(m + 1), covs, period=m, use_mask=True)
            targets[k] += total
    return targets


@dataclass
class PeriodContext:
    """Precomputed per-period quantities for fast simulation.

    cov_combined = sum over covariate effects of beta_k * contribution_k
    (imputed values), so the covariate part of the objective delta for any
    toggle is just sign * cov_combined[i, j].
    """

    structural: list = field(default_factory=list)  # (index, EffectSpec)
    covariate: list = field(default_factory=list)   # (index, EffectSpec, contrib, valid)
    cov_combined: np.ndarray = None

    @classmethod
    def build(cls, model: ModelSpec, covs: CovariateSet, n: int, period: int,
              beta: np.ndarray):
        ctx = cls()
        combined = np.zeros((n, n))
        for k, eff in enumerate(model.effects):
            if eff.kind in STRUCTURAL_KINDS:
                ctx.structural.append((k, eff))
            else:
                contrib, valid = dyadic_contribution(eff, covs, period)
                ctx.covariate.append((k, eff, contrib, valid))
                combined += beta[k] * contrib
        ctx.cov_combined = combined
        return ctx

    def objective_delta_row(self, x, deg, i, beta):
        """Vector over j of the objective-function change for toggling (i, j)."""
        delta = self.cov_combined[i] * np.where(x[i] == 0.0, 1.0, -1.0)
        for k, eff in self.structural:
            if beta[k] != 0.0:
                delta = delta + beta[k] * change_row(eff, x, deg, i)
        return delta

    def totals(self, x, deg):
        """Full per-effect totals on the current state (imputed covariates)."""
        out = {}
        for k, eff in self.structural:
            if eff.kind == "density":
                out[k] = float(deg.sum())
            elif eff.kind == "degPlus":
                out[k] = float(deg @ deg)  # sum_i (x @ deg)_i = deg . deg
            else:
                esp = x @ x
                out[k] = float((x * _gwesp_weight(esp, eff.gwesp_decay)).sum())
        for k, eff, contrib, valid in self.covariate:
            masked = contrib if valid is None else np.where(valid, contrib, 0.0)
            out[k] = float((x * masked).sum())
        return out
