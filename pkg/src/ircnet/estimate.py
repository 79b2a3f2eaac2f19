"""Method-of-moments estimation by three-phase stochastic approximation.

Parameters are theta = [rates per period, beta per effect]. The observed
targets are the per-period changed-dyad counts and the per-effect totals
on the end-of-period waves. Phase 1 estimates the derivative of expected
statistics by common-random-number finite differences, phase 2 iterates
Robbins-Monro updates with halving gains, phase 3 simulates at the fixed
estimate to obtain the statistic covariance, standard errors, and
convergence diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm as _norm

from .effects import ModelSpec, target_statistics
from .panel import BinaryNetSeries, CovariateSet, hamming
from .simulate import simulate_panel

RATE_FLOOR = 0.01
INITIAL_RATE_FALLBACK = 0.5
DIVERGENCE_NORM = 1e3


class EstimationError(RuntimeError):
    pass


class SingularDerivativeError(EstimationError):
    """The derivative matrix is (numerically) singular; respecify the model."""


class DivergenceError(EstimationError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class EstimationOptions:
    n1: int = 50                 # phase-1 simulations
    subphases: int = 4
    n3: int = 1000               # phase-3 simulations
    initial_gain: float = 0.2
    t_max: float = 0.25          # convergence-ratio threshold for reporting
    seed: int = 0
    derivative_step: float = 0.1
    max_subphase_iter: int = None   # default 200 + 10 * n_parameters
    min_subphase_iter: int = 5
    keep_draws: bool = True
    restarts: int = 2            # phase-2 reruns while conv_ratio > t_max

    def __post_init__(self):
        if not (0 < self.initial_gain < 1):
            raise EstimationError("initial gain must be in (0, 1)")
        for name in ("n1", "subphases", "n3"):
            if getattr(self, name) <= 0:
                raise EstimationError(f"{name} must be positive")


@dataclass
class EstimationResult:
    theta: np.ndarray            # rates then effect parameters
    se: np.ndarray               # same layout
    rate_labels: list
    effect_labels: list
    derivative: np.ndarray
    covariance: np.ndarray
    tratios: np.ndarray          # per-parameter convergence t-ratios
    conv_ratio: float            # overall maximum convergence ratio
    iterations: int
    seed: int
    ridge_applied: bool = False
    draws_stats: np.ndarray = None       # n3 x p simulated statistic vectors
    draws_final_networks: list = field(default_factory=list)
    targets: np.ndarray = None

    @property
    def n_rates(self) -> int:
        return len(self.rate_labels)

    @property
    def rates(self) -> np.ndarray:
        return self.theta[: self.n_rates]

    @property
    def beta(self) -> np.ndarray:
        return self.theta[self.n_rates:]

    @property
    def beta_se(self) -> np.ndarray:
        return self.se[self.n_rates:]


def _split(theta, n_periods):
    return theta[:n_periods], theta[n_periods:]


def _with_theta(model: ModelSpec, theta, n_periods) -> ModelSpec:
    rates, beta = _split(theta, n_periods)
    return replace(model, rates=np.maximum(rates, RATE_FLOOR), beta=beta)


def observed_targets(panel: BinaryNetSeries, model: ModelSpec,
                     covs: CovariateSet = None) -> np.ndarray:
    """Target statistic vector: per-period changed dyads, then effect totals."""
    n_periods = panel.n_waves - 1
    changes = np.array([hamming(panel.wave(m), panel.wave(m + 1))
                        for m in range(n_periods)], dtype=float)
    return np.concatenate([changes, target_statistics(panel, model, covs)])


def initialize(panel: BinaryNetSeries, model: ModelSpec,
               covs: CovariateSet = None) -> np.ndarray:
    """Starting parameter vector.

    Rates start at 2 * H_m * n/(n-1) / n (twice the observed changed-dyad
    count per actor, inflated for cancelling back-and-forth toggles, with
    the small-sample n/(n-1) factor); a period with no observed change
    falls back to 0.5. The density parameter starts at -1, everything
    else at 0.
    """
    if panel.n_waves < 2:
        raise EstimationError("need at least 2 waves")
    n = panel.actors.n
    n_periods = panel.n_waves - 1
    rates = np.empty(n_periods)
    for m in range(n_periods):
        h = hamming(panel.wave(m), panel.wave(m + 1))
        rates[m] = 2.0 * h * n / (n - 1) / n if h > 0 else INITIAL_RATE_FALLBACK
    beta = np.zeros(model.n_effects)
    for k, eff in enumerate(model.effects):
        if eff.kind == "density":
            beta[k] = -1.0
    return np.concatenate([rates, beta])


def _simulate_stats(theta, panel, model, covs, rng, n_periods):
    m = _with_theta(model, theta, n_periods)
    stats, ends = simulate_panel(panel, m, covs, rng=rng)
    return stats, ends


def phase1_derivative(theta, panel, model, covs, options: EstimationOptions,
                      rng=None, check=True) -> np.ndarray:
    """Finite-difference estimate of d E[S] / d theta.

    Each replicate simulates the panel at theta and at theta + h e_k for
    every coordinate with common random numbers (identical child seeds),
    so the difference quotients share their simulation noise.
    """
    if rng is None:
        rng = np.random.default_rng(options.seed)
    n_periods = panel.n_waves - 1
    p = len(theta)
    h = options.derivative_step
    d_sum = np.zeros((p, p))
    for _ in range(options.n1):
        child_seed = int(rng.integers(2**62))
        base, _ = _simulate_stats(theta, panel, model, covs,
                                  np.random.default_rng(child_seed), n_periods)
        for k in range(p):
            pert = theta.copy()
            pert[k] += h
            s_k, _ = _simulate_stats(pert, panel, model, covs,
                                     np.random.default_rng(child_seed), n_periods)
            d_sum[:, k] += (s_k - base) / h
    d = d_sum / options.n1
    if check:
        cond = np.linalg.cond(d)
        if not np.isfinite(cond) or cond > 1e10:
            raise SingularDerivativeError(
                f"derivative matrix is singular (condition number {cond:.3g}); "
                "the model contains collinear or unidentified effects")
    return d


def phase2_update(theta, deriv, panel, model, covs, options: EstimationOptions,
                  rng=None):
    """Robbins-Monro iterations over halving-gain subphases.

    Within a subphase: theta <- theta - a * D^-1 (S_sim - s_obs), one
    simulation per iteration. A subphase ends when the running mean of
    successive deviation inner products turns negative (deviations are
    oscillating around zero, so the remaining error is noise) after a
    minimum number of iterations, or at the hard cap. The gain halves
    between subphases; the estimate is the average of theta over the final
    subphase. Returns (theta_hat, total_iterations).
    """
    if rng is None:
        rng = np.random.default_rng(options.seed)
    n_periods = panel.n_waves - 1
    s_obs = observed_targets(panel, model, covs)
    d_inv = np.linalg.pinv(deriv)
    p = len(theta)
    cap = options.max_subphase_iter or (200 + 10 * p)
    theta = np.asarray(theta, dtype=float).copy()
    gain = options.initial_gain
    total_iter = 0
    trace = []
    for sub in range(options.subphases):
        prev_dev = None
        cross_sum = 0.0
        thetas = []
        for it in range(cap):
            stats, _ = _simulate_stats(theta, panel, model, covs, rng, n_periods)
            dev = stats - s_obs
            theta = theta - gain * (d_inv @ dev)
            theta[:n_periods] = np.maximum(theta[:n_periods], RATE_FLOOR)
            thetas.append(theta.copy())
            trace.append(theta.copy())
            total_iter += 1
            if np.linalg.norm(theta) > DIVERGENCE_NORM:
                raise DivergenceError("parameter vector diverged in phase 2",
                                      np.array(trace))
            if prev_dev is not None:
                cross_sum += float(dev @ prev_dev)
                if it + 1 >= options.min_subphase_iter and cross_sum / it < 0:
                    break
            prev_dev = dev
        if sub == options.subphases - 1:
            theta = np.mean(thetas, axis=0)
        gain *= 0.5
    return theta, total_iter


def phase3_finalize(theta_hat, panel, model, covs, options: EstimationOptions,
                    rng=None, iterations=0) -> EstimationResult:
    """Simulate at the fixed estimate; derive SEs and convergence diagnostics."""
    if rng is None:
        rng = np.random.default_rng(options.seed)
    n_periods = panel.n_waves - 1
    s_obs = observed_targets(panel, model, covs)
    p = len(theta_hat)
    stats = np.empty((options.n3, p))
    finals = []
    for r in range(options.n3):
        stats[r], ends = _simulate_stats(theta_hat, panel, model, covs, rng,
                                         n_periods)
        if options.keep_draws:
            finals.append(ends[-1])
    sigma = np.cov(stats, rowvar=False)
    sigma = np.atleast_2d(sigma)
    ridge = False
    if np.linalg.matrix_rank(sigma) < p or np.linalg.cond(sigma) > 1e12:
        sigma = sigma + 1e-8 * np.eye(p)
        ridge = True
    deriv = phase1_derivative(theta_hat, panel, model, covs, options, rng,
                              check=False)
    d_inv = np.linalg.pinv(deriv)
    cov_theta = d_inv @ sigma @ d_inv.T
    se = np.sqrt(np.maximum(np.diag(cov_theta), 0.0))
    dev = stats - s_obs
    dbar = dev.mean(axis=0)
    sd = dev.std(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        tratios = np.where(sd > 0, dbar / sd, np.inf * np.sign(dbar))
    conv = float(np.sqrt(dbar @ np.linalg.solve(sigma, dbar)))
    rate_labels = [f"rate period {m + 1}" for m in range(n_periods)]
    effect_labels = [eff.label for eff in model.effects]
    return EstimationResult(
        theta=np.asarray(theta_hat, dtype=float),
        se=se,
        rate_labels=rate_labels,
        effect_labels=effect_labels,
        derivative=deriv,
        covariance=sigma,
        tratios=tratios,
        conv_ratio=conv,
        iterations=iterations,
        seed=options.seed,
        ridge_applied=ridge,
        draws_stats=stats,
        draws_final_networks=finals,
        targets=s_obs,
    )


def estimate(panel: BinaryNetSeries, model: ModelSpec, covs: CovariateSet = None,
             options: EstimationOptions = None) -> EstimationResult:
    """Full three-phase estimation from default starting values."""
    options = options or EstimationOptions()
    covs = covs or CovariateSet()
    rng1, rng2, rng3 = (np.random.default_rng(s)
                        for s in np.random.SeedSequence(options.seed).spawn(3))
    theta0 = initialize(panel, model, covs)
    deriv = None
    for attempt in range(3):
        try:
            # noise can make a small-n1 finite-difference estimate singular;
            # retry with more replicates before giving up on the model
            opts1 = replace(options, n1=options.n1 * 2 ** attempt)
            deriv = phase1_derivative(theta0, panel, model, covs, opts1, rng1)
            break
        except SingularDerivativeError:
            if attempt == 2:
                raise
    theta_hat, iters = phase2_update(theta0, deriv, panel, model, covs, options,
                                     rng2)
    result = phase3_finalize(theta_hat, panel, model, covs, options, rng3,
                             iterations=iters)
    # if the deviations have not levelled off, restart phase 2 from the
    # current estimate (the usual remedy for an unconverged run)
    for _ in range(options.restarts):
        if result.conv_ratio <= options.t_max:
            break
        try:
            deriv = phase1_derivative(result.theta, panel, model, covs,
                                      options, rng1, check=False)
            theta_hat, more = phase2_update(result.theta, deriv, panel, model,
                                            covs, options, rng2)
            candidate = phase3_finalize(theta_hat, panel, model, covs, options,
                                        rng3, iterations=iters + more)
        except DivergenceError:
            break
        if candidate.conv_ratio >= result.conv_ratio:
            break
        iters += more
        result = candidate
    return result


def p_value(est: float, se: float) -> float:
    """Two-sided normal p-value from an estimate and its standard error."""
    if se <= 0:
        raise EstimationError("p-value undefined for SE <= 0")
    return float(2.0 * (1.0 - _norm.cdf(abs(est / se))))


def stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def p_values(result: EstimationResult) -> list:
    """Per-effect (label, estimate, se, p, stars) rows, Table-style."""
    rows = []
    for label, est, se in zip(result.effect_labels, result.beta, result.beta_se):
        p = p_value(est, se)
        rows.append((label, float(est), float(se), p, stars(p)))
    return rows
