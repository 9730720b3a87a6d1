"""Exact samplers and Glauber dynamics for the tree model.

Spin configurations are +-1 arrays aligned with a topology's BFS vertex
order.  All samplers are deterministic functions of (seed, keys): repeat
runs are bit-identical, and adding replicas or vertices never perturbs
existing draws.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .couplings import CouplingAssignment
from .inference import compute_messages
from .rng import RngStream
from .topology import TreeTopology


class SamplerError(ValueError):
    pass


def sample_broadcast(topo: TreeTopology, theta: float, rng: RngStream,
                     n_samples: int = 1) -> np.ndarray:
    """Top-down broadcast sample: uniform root, each child copies its parent
    with probability (1 + theta)/2, independently per edge.

    Returns an (n_samples, |V|) array of +-1 spins.
    """
    if not 0.0 <= theta < 1.0:
        raise SamplerError(f"theta={theta} outside [0, 1)")
    sub = rng.substream("broadcast")
    reps = np.arange(n_samples, dtype=np.uint64)[:, None]
    spins = np.empty((n_samples, topo.n_vertices))

    u0 = sub.uniform(reps[:, 0], topo.noise_ids[0], 0)
    spins[:, 0] = np.where(u0 < 0.5, 1.0, -1.0)
    keep_p = (1.0 + theta) / 2.0
    for k in range(1, topo.depth + 1):
        idx = topo.levels[k]
        u = sub.uniform(reps, topo.noise_ids[idx][None, :], 0)
        flip = np.where(u < keep_p, 1.0, -1.0)
        spins[:, idx] = spins[:, topo.parent_index[idx]] * flip
    return spins


def sample_conditional(topo: TreeTopology, couplings: CouplingAssignment,
                       fields: np.ndarray, rng: RngStream,
                       n_samples: int = 1) -> np.ndarray:
    """Exact sample from the field-conditional measure.

    The root is drawn from its exact marginal; each child from its
    conditional given the parent, using the upward messages of its subtree.
    """
    mt = compute_messages(topo, couplings, fields)
    sub = rng.substream("conditional")
    reps = np.arange(n_samples, dtype=np.uint64)[:, None]
    spins = np.empty((n_samples, topo.n_vertices))

    m_root = math.tanh(mt.fields[0] + mt._child_sum[0])
    u0 = sub.uniform(reps[:, 0], topo.noise_ids[0], 0)
    spins[:, 0] = np.where(u0 < (1.0 + m_root) / 2.0, 1.0, -1.0)

    for k in range(1, topo.depth + 1):
        idx = topo.levels[k]
        h = mt.fields[idx] + mt._child_sum[idx]
        local = mt.beta_up[idx] * spins[:, topo.parent_index[idx]] + h[None, :]
        p_plus = 1.0 / (1.0 + np.exp(-2.0 * local))
        u = sub.uniform(reps, topo.noise_ids[idx][None, :], 0)
        spins[:, idx] = np.where(u < p_plus, 1.0, -1.0)
    return spins


def _heat_bath_p_plus(beta_sum: float, field: float) -> float:
    return 0.5 * (1.0 + math.tanh(beta_sum + field))


def _neighbor_lists(topo: TreeTopology, couplings: CouplingAssignment):
    """Per vertex: neighbour indices and the matching edge couplings."""
    nbrs, bs = [], []
    for i, v in enumerate(topo.vertices):
        ns = [topo.index[w] for w in topo.neighbors_of(v)]
        nbrs.append(ns)
        bs.append([couplings.beta_of(topo, v, topo.vertices[j]) for j in ns])
    return nbrs, bs


def run_glauber(topo: TreeTopology, couplings: CouplingAssignment,
                initial: np.ndarray, t_end: float, rng: RngStream,
                fields: np.ndarray | None = None,
                replica: int = 0) -> np.ndarray:
    """Continuous-time single-site heat-bath chain up to time t_end.

    Each vertex carries a rate-one Poisson clock realized as exponential
    waits; events merge through a priority queue with ties broken by BFS
    position.  With a field vector the chain is reversible for the
    field-conditional measure.
    """
    if t_end < 0:
        raise SamplerError(f"t_end={t_end} must be >= 0")
    sigma = np.array(initial, dtype=float).copy()
    if sigma.shape != (topo.n_vertices,):
        raise SamplerError("initial configuration has wrong dimension")
    if t_end == 0:
        return sigma
    x = np.zeros(topo.n_vertices) if fields is None else np.asarray(fields, float)
    clock = rng.substream("glauber-clock")
    flip = rng.substream("glauber-flip")
    nbrs, bs = _neighbor_lists(topo, couplings)
    rep = np.uint64(replica)
    ids = topo.noise_ids

    heap = []
    for i in range(topo.n_vertices):
        t0 = float(clock.exponential(rep, ids[i], 0))
        heapq.heappush(heap, (t0, i, 0))
    while heap:
        t, i, k = heapq.heappop(heap)
        if t > t_end:
            break
        loc = sum(b * sigma[j] for b, j in zip(bs[i], nbrs[i]))
        u = float(flip.uniform(rep, ids[i], k))
        sigma[i] = 1.0 if u < _heat_bath_p_plus(loc, x[i]) else -1.0
        t_next = t + float(clock.exponential(rep, ids[i], k + 1))
        heapq.heappush(heap, (t_next, i, k + 1))
    return sigma


@dataclass
class DisagreementRun:
    """Trace of the coupled two-chain dynamics started from a single
    root disagreement."""

    times: list[float]
    sizes: list[int]
    #: updates at an agreeing site with at least one disagreeing neighbour
    transmission_opportunities: int
    #: how many of those updates produced a new disagreement
    transmissions: int


def glauber_disagreement(topo: TreeTopology, couplings: CouplingAssignment,
                         t_end: float, rng: RngStream,
                         replica: int = 0) -> DisagreementRun:
    """Two chains under the optimal single-site coupling (shared clocks and
    shared uniforms), started from a broadcast sample and its root-flipped
    copy; records the disagreement-set size after every update.

    Per update of a neighbour of a disagreeing site, the disagreement
    spreads with probability |p - p'| <= tanh(max beta).
    """
    theta = math.tanh(couplings.interior)
    sigma = sample_broadcast(topo, theta, rng.child("init"), 1)[0].copy()
    sigma2 = sigma.copy()
    sigma2[0] = -sigma2[0]

    clock = rng.substream("glauber-clock")
    flip = rng.substream("glauber-flip")
    nbrs, bs = _neighbor_lists(topo, couplings)
    rep = np.uint64(replica)
    ids = topo.noise_ids

    heap = []
    for i in range(topo.n_vertices):
        heapq.heappush(heap, (float(clock.exponential(rep, ids[i], 0)), i, 0))

    times, sizes = [0.0], [1]
    opportunities = transmissions = 0
    while heap:
        t, i, k = heapq.heappop(heap)
        if t > t_end:
            break
        loc1 = sum(b * sigma[j] for b, j in zip(bs[i], nbrs[i]))
        loc2 = sum(b * sigma2[j] for b, j in zip(bs[i], nbrs[i]))
        agreed = sigma[i] == sigma2[i]
        exposed = agreed and any(sigma[j] != sigma2[j] for j in nbrs[i])
        u = float(flip.uniform(rep, ids[i], k))
        sigma[i] = 1.0 if u < _heat_bath_p_plus(loc1, 0.0) else -1.0
        sigma2[i] = 1.0 if u < _heat_bath_p_plus(loc2, 0.0) else -1.0
        if exposed:
            opportunities += 1
            if sigma[i] != sigma2[i]:
                transmissions += 1
        times.append(t)
        sizes.append(int(np.sum(sigma != sigma2)))
        heapq.heappush(heap, (t + float(clock.exponential(rep, ids[i], k + 1)), i, k + 1))
    return DisagreementRun(
        times=times, sizes=sizes,
        transmission_opportunities=opportunities, transmissions=transmissions,
    )
