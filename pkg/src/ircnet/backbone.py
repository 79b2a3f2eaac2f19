"""Disparity-filter significance scores and binary backbone extraction.

For each actor i with strength s_i = sum_j w_ij and degree k_i, the
directed score of edge (i, j) is alpha(i->j) = (1 - w_ij / s_i)^(k_i - 1)
for k_i >= 2, and 1 for k_i <= 1. An undirected edge keeps the smaller of
its two directed scores and survives when that score falls below the
significance level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .panel import ActorSet, BinaryNetwork, WeightedNetwork


class BackboneError(ValueError):
    pass


@dataclass(frozen=True)
class BackboneScores:
    actors: ActorSet
    year: int
    alpha: np.ndarray     # symmetric min-of-directed-scores, 1 where w == 0
    p: np.ndarray         # row-normalized weights, asymmetric
    k: np.ndarray         # degree vector
    s: np.ndarray         # strength vector


def disparity_scores(net: WeightedNetwork) -> BackboneScores:
    """Directed disparity scores merged to a symmetric significance matrix."""
    w = net.w.astype(float)
    n = w.shape[0]
    s = w.sum(axis=1)
    k = (w > 0).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(s[:, None] > 0, w / np.where(s[:, None] > 0, s[:, None], 1.0), 0.0)
    scored = (k[:, None] >= 2) & (w > 0)
    full = (1.0 - p) ** np.maximum(k[:, None] - 1.0, 0.0)
    directed = np.where(scored, full, 1.0)
    alpha = np.minimum(directed, directed.T)
    np.fill_diagonal(alpha, 1.0)
    return BackboneScores(actors=net.actors, year=net.year, alpha=alpha, p=p,
                          k=k.astype(np.int64), s=s)


@dataclass
class BackboneReport:
    positive_edges: int
    retained_edges: int

    @property
    def trimming_fraction(self) -> float:
        if self.positive_edges == 0:
            return 0.0
        return 1.0 - self.retained_edges / self.positive_edges


def extract_backbone(net: WeightedNetwork, alpha_level: float = 0.05,
                     scores: BackboneScores = None):
    """(BinaryNetwork, BackboneReport): edges with score < alpha_level survive."""
    if not (0 < alpha_level <= 1):
        raise BackboneError(f"alpha level must be in (0, 1], got {alpha_level}")
    if scores is None:
        scores = disparity_scores(net)
    # alpha_level == 1 keeps every positive-weight edge (degenerate sweep end)
    keep = (net.w > 0) & ((scores.alpha < alpha_level) | (alpha_level >= 1.0))
    x = keep.astype(np.int8)
    positive = int(np.count_nonzero(net.w > 0)) // 2
    retained = int(x.sum()) // 2
    return (BinaryNetwork(net.actors, net.year, x),
            BackboneReport(positive_edges=positive, retained_edges=retained))
