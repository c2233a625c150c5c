"""Scikit-learn style front end for the whole pipeline.

SbmMixtureClustering.fit(X) accepts a NetworkCollection, a sequence of
Network objects, or a sequence of dense adjacency matrices, runs the
per-network initialization followed by the agglomerative ICL clustering,
and exposes the result through the usual fitted attributes (labels_,
n_clusters_, ...). The class plays by the scikit-learn estimator rules
(get_params/set_params/clone), so it drops into pipelines and model
selection utilities that work with clusterers.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .graphs import Network, NetworkCollection
from .initializer import InitConfig, init_collection
from .mixture import FitOptions, fit
from .sbm import Hyperparams

__all__ = ["SbmMixtureClustering", "as_collection"]


def as_collection(X) -> NetworkCollection:
    """Coerce fit input to a NetworkCollection: pass one through, wrap a
    sequence of Network objects, or build networks from dense adjacency
    matrices."""
    if isinstance(X, NetworkCollection):
        return X
    items = list(X)
    if not items:
        raise ValueError("need at least one network")
    if all(isinstance(g, Network) for g in items):
        return NetworkCollection(items)
    return NetworkCollection([g if isinstance(g, Network)
                              else Network.from_dense(np.asarray(g))
                              for g in items])


class SbmMixtureClustering(ClusterMixin, BaseEstimator):
    """Cluster a collection of directed binary networks by greedy ICL
    maximization over a finite SBM mixture.

    Parameters mirror the library defaults: Dirichlet/Beta prior
    hyperparameters (alpha, eta, zeta, lam), the per-network block-count
    search (k_min, k_max, restarts), and the merge options. Unlike feature
    clusterers, X holds networks, not a feature matrix.

    Fitted attributes: labels_ (cluster index per network, contiguous from
    0), n_clusters_, icl_, components_ (MAP SbmParams per cluster),
    node_labels_ (block labels per network), dendrogram_, state_.
    """

    def __init__(self, alpha=1.0, eta=1.0, zeta=1.0, lam=1.0,
                 k_min=1, k_max=None, restarts=10, max_sweeps=100,
                 force_merge_all=False, match_budget=50_000,
                 threads=1, verify=False, random_state=0):
        self.alpha = alpha
        self.eta = eta
        self.zeta = zeta
        self.lam = lam
        self.k_min = k_min
        self.k_max = k_max
        self.restarts = restarts
        self.max_sweeps = max_sweeps
        self.force_merge_all = force_merge_all
        self.match_budget = match_budget
        self.threads = threads
        self.verify = verify
        self.random_state = random_state

    def fit(self, X, y=None):
        """Run the full pipeline on a collection of networks."""
        collection = as_collection(X)
        seed = 0 if self.random_state is None else int(self.random_state)
        hyper = Hyperparams(alpha=self.alpha, eta=self.eta, zeta=self.zeta,
                            lam=self.lam)
        cfg = InitConfig(k_min=self.k_min, k_max=self.k_max,
                         restarts=self.restarts, seed=seed,
                         max_sweeps=self.max_sweeps)
        opts = FitOptions(force_merge_all=self.force_merge_all,
                          match_budget=self.match_budget,
                          max_sweeps=self.max_sweeps, verify=self.verify,
                          seed=seed)
        inits = init_collection(collection, hyper, cfg,
                                threads=int(self.threads))
        state, dendro = fit(collection, hyper, [r.labels for r in inits],
                            opts)

        ids = sorted(state.clusters)
        dense_of = {cid: t for t, cid in enumerate(ids)}
        self.labels_ = np.array([dense_of[c] for c in state.U],
                                dtype=np.int64)
        self.n_clusters_ = state.C
        self.icl_ = state.icl
        self.components_ = [state.clusters[cid].params for cid in ids]
        node_labels = [None] * collection.m_count
        for cl in state.clusters.values():
            for mm, z in zip(cl.members, cl.labels):
                node_labels[mm] = z
        self.node_labels_ = node_labels
        self.dendrogram_ = dendro
        self.state_ = state
        return self
