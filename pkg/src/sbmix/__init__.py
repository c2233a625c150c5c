"""sbmix: model-based clustering of collections of directed binary networks.

Fits a finite mixture of stochastic block models by greedy maximization of
the integrated classification likelihood, using hierarchical agglomeration
over an initial fine clustering. Networks in a collection may have different
vertex counts; fitted components are compared through their graphon
representations.
"""

from .estimator import SbmMixtureClustering, as_collection
from .evaluation import (Scenario, SimulationResult, SizeLaw,
                         adjusted_rand_index, gsc_baseline,
                         matched_distance_matrix, run_experiment, simulate,
                         write_report)
from .graphon import (StepGraphon, apply_to_labels, block_degrees,
                      canonical_permutation, graphon_distance, graphon_of,
                      match_blocks, step_graphon_distance)
from .graphs import Network, NetworkCollection, load_collection, save_collection
from .initializer import InitConfig, InitResult, init_collection, init_network
from .mixture import (Dendrogram, FitOptions, MergeEvent, fit, icl_mix,
                      merge_gain)
from .sbm import (CountStats, Hyperparams, SbmParams, SbmState, count_stats,
                  icl_penalty, icl_sbm, map_estimate, maximize_icl_labels,
                  sample_network, swap_delta)

__version__ = "0.1.0"

__all__ = [
    "Network", "NetworkCollection", "load_collection", "save_collection",
    "SbmParams", "Hyperparams", "CountStats", "SbmState",
    "sample_network", "count_stats", "icl_sbm", "icl_penalty",
    "map_estimate", "swap_delta", "maximize_icl_labels",
    "StepGraphon", "graphon_of", "graphon_distance", "step_graphon_distance",
    "block_degrees", "canonical_permutation", "match_blocks",
    "apply_to_labels",
    "FitOptions", "MergeEvent", "Dendrogram", "fit", "icl_mix", "merge_gain",
    "InitConfig", "InitResult", "init_network", "init_collection",
    "Scenario", "SizeLaw", "SimulationResult", "simulate",
    "adjusted_rand_index", "matched_distance_matrix", "gsc_baseline",
    "run_experiment", "write_report",
    "SbmMixtureClustering", "as_collection",
    "__version__",
]
