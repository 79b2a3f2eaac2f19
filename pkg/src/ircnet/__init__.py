"""ircnet: longitudinal co-authorship network analysis.

Pipeline: yearly weighted co-authorship networks from publication records,
disparity-filter binary backbones, actor-oriented models of network
evolution estimated by stochastic approximation, and simulation-based
goodness of fit.
"""

from .panel import (ActorSet, WeightedNetwork, BinaryNetwork,
                    WeightedNetSeries, BinaryNetSeries, ActorCovariate,
                    DyadCovariate, CovariateSet, degree_sequence, density,
                    isolate_count)
from .ingest import (ArticleRecord, DisambiguationDictionary, disambiguate,
                     expand_pairs, aggregate, describe)
from .backbone import disparity_scores, extract_backbone
from .effects import EffectSpec, ModelSpec, statistic, change_statistic, \
    target_statistics
from .simulate import ministep, simulate_period, simulate_panel
from .estimate import (EstimationOptions, EstimationResult, estimate,
                       initialize, phase1_derivative, phase2_update,
                       phase3_finalize, p_value, p_values, stars)
from .gof import degree_distribution_aux, triad_census_undirected, gof_test

__version__ = "0.1.0"
