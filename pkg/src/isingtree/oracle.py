"""Exhaustive-enumeration reference for small trees.

Everything here is deliberately naive: sum over all 2^|V| spin
configurations, no message passing, no factorization.  The closed-form
inference code is tested against these numbers, never the other way
round.  Enumeration is vectorized over the configuration axis and capped
at 20 vertices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .couplings import CouplingAssignment
from .topology import TreeTopology, VertexLabel

_MAX_VERTICES = 20


class OracleError(ValueError):
    pass


@dataclass
class BruteForce:
    """All moments of the measure on one small tree, from full enumeration.

    `configs` is the (2^V, V) table of +-1 configurations; `log_weights`
    the unnormalized log-masses; `probs` the normalized distribution.
    """

    topology: TreeTopology
    fields: np.ndarray
    configs: np.ndarray
    log_weights: np.ndarray
    log_z: float
    probs: np.ndarray

    def mean(self, v: VertexLabel) -> float:
        return float(self.probs @ self.configs[:, self.topology.index[v]])

    def means(self) -> np.ndarray:
        return self.probs @ self.configs

    def covariance(self, u: VertexLabel, v: VertexLabel) -> float:
        iu, iv = self.topology.index[u], self.topology.index[v]
        su, sv = self.configs[:, iu], self.configs[:, iv]
        return float(self.probs @ (su * sv) - (self.probs @ su) * (self.probs @ sv))

    def covariance_matrix(self) -> np.ndarray:
        m = self.means()
        second = self.configs.T @ (self.probs[:, None] * self.configs)
        return second - np.outer(m, m)

    def pair_covariance_with(self, u: VertexLabel, up: VertexLabel,
                             v: VertexLabel) -> float:
        """Cov(sigma_u sigma_u', sigma_v): covariance of an edge product
        with a single spin."""
        t = self.topology
        prod = self.configs[:, t.index[u]] * self.configs[:, t.index[up]]
        sv = self.configs[:, t.index[v]]
        return float(self.probs @ (prod * sv) - (self.probs @ prod) * (self.probs @ sv))

    def restricted_marginal(self, subset: list[VertexLabel]) -> tuple[np.ndarray, np.ndarray]:
        """Marginal over `subset`: (2^k, k) configuration table and
        matching probabilities, configurations in lexicographic spin order."""
        cols = [self.topology.index[v] for v in subset]
        k = len(cols)
        sub = self.configs[:, cols]
        # map each +-1 row to an integer code, bit i from vertex subset[i]
        codes = ((sub > 0).astype(int) * (1 << np.arange(k))).sum(axis=1)
        marg = np.bincount(codes, weights=self.probs, minlength=1 << k)
        table = np.empty((1 << k, k))
        for c in range(1 << k):
            table[c] = [1.0 if (c >> i) & 1 else -1.0 for i in range(k)]
        return table, marg


def brute_force(topo: TreeTopology, couplings: CouplingAssignment,
                fields: np.ndarray) -> BruteForce:
    """Enumerate the full measure exp(sum beta_e s_u s_v + sum x_v s_v)."""
    V = topo.n_vertices
    if V > _MAX_VERTICES:
        raise OracleError(f"{V} vertices exceeds the enumeration cap {_MAX_VERTICES}")
    fields = np.asarray(fields, dtype=float)
    if fields.shape != (V,):
        raise OracleError(f"fields shape {fields.shape} != ({V},)")

    grid = np.arange(1 << V)
    configs = np.where((grid[:, None] >> np.arange(V)) & 1, 1.0, -1.0)
    log_w = configs @ fields
    for u, v in topo.edges():
        b = couplings.beta_of(topo, u, v)
        log_w += b * configs[:, topo.index[u]] * configs[:, topo.index[v]]
    log_z = float(logsumexp(log_w))
    probs = np.exp(log_w - log_z)
    return BruteForce(topology=topo, fields=fields, configs=configs,
                      log_weights=log_w, log_z=log_z, probs=probs)
