"""Euler-Maruyama integration of the drift systems under shared noise.

The state of one system is a vector over the vertices of a truncated tree;
the drift is the exact magnetization map of the inference module, the
noise a counter-based Brownian field keyed by global vertex label.  Because
increments are addressed by (label, step), the depth-(R-1) system, the
depth-R system, and any re-rooted system literally consume the same
increments at shared vertices, which is the coupling all depth- and
root-stability experiments rely on.

Replicas are carried as a leading batch axis; a single integration step is
a handful of vectorized message sweeps regardless of replica count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .couplings import CouplingAssignment, interpolated
from .inference import drift_batch
from .rng import NoiseSource, RngStream
from .samplers import sample_conditional
from .topology import RerootMap, TreeTopology


class SdeError(ValueError):
    pass


@dataclass
class Trajectory:
    """States recorded on a uniform grid.

    `states[k]` is an (n_replicas, |V|) array at time `times[k]`; metadata
    carries whatever provenance the producer wants serialized.
    """

    topology: TreeTopology
    couplings: CouplingAssignment
    dt: float
    times: np.ndarray
    states: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def n_replicas(self) -> int:
        return self.states.shape[1]

    def at(self, t: float) -> np.ndarray:
        k = np.flatnonzero(np.isclose(self.times, t))
        if len(k) != 1:
            raise SdeError(f"time {t} not on the recorded grid")
        return self.states[k[0]]


def _step_grid(t_end: float, dt: float) -> int:
    if dt <= 0:
        raise SdeError(f"dt={dt} must be positive")
    n = round(t_end / dt)
    if not math.isclose(n * dt, t_end, rel_tol=1e-9, abs_tol=1e-12):
        raise SdeError(f"t_end={t_end} is not a multiple of dt={dt}")
    return n


def _record_mask(times: np.ndarray, record) -> np.ndarray:
    if record == "all":
        return np.ones(len(times), dtype=bool)
    if record == "final":
        mask = np.zeros(len(times), dtype=bool)
        mask[-1] = True
        return mask
    wanted = np.asarray(record, dtype=float)
    mask = np.zeros(len(times), dtype=bool)
    for t in wanted:
        k = np.flatnonzero(np.isclose(times, t))
        if len(k) != 1:
            raise SdeError(f"requested record time {t} not on the grid")
        mask[k[0]] = True
    return mask


def integrate(topo: TreeTopology, couplings: CouplingAssignment,
              noise: NoiseSource, t_end: float, dt: float,
              n_replicas: int = 1, record="all",
              x0: np.ndarray | None = None) -> Trajectory:
    """Explicit Euler-Maruyama:
    X_{k+1} = X_k + F(X_k) dt + dW_k, started from x0 (default zero).

    `record` selects which grid times are kept: "all", "final", or an
    explicit list of times (t=0 is recorded only under "all").
    """
    n_steps = _step_grid(t_end, dt)
    times = np.arange(n_steps + 1) * dt
    mask = _record_mask(times, record)
    beta_up = couplings.beta_up(topo)
    V = topo.n_vertices

    if x0 is None:
        x = np.zeros((n_replicas, V))
    else:
        x = np.broadcast_to(np.asarray(x0, float), (n_replicas, V)).copy()
    recorded = []
    if mask[0]:
        recorded.append(x.copy())
    for k in range(n_steps):
        dw = noise.increments(topo.noise_ids, k, dt, n_replicas)
        x = x + drift_batch(topo, couplings, x, beta_up=beta_up) * dt + dw
        if not np.all(np.isfinite(x)):
            raise SdeError(f"non-finite state at step {k + 1}")
        if mask[k + 1]:
            recorded.append(x.copy())
    return Trajectory(
        topology=topo, couplings=couplings, dt=dt,
        times=times[mask], states=np.stack(recorded),
        metadata={"seed": noise.seed, "t_end": t_end, "n_replicas": n_replicas},
    )


def integrate_interpolated(topo: TreeTopology, beta: float, gamma: float,
                           noise: NoiseSource, t_end: float, dt: float,
                           n_replicas: int = 1, record="all") -> Trajectory:
    """Same integrator with boundary coupling gamma in [0, beta].

    At gamma = beta this is the plain depth-R system; at gamma = 0 its
    restriction to the interior is bit-identical to the depth-(R-1) run
    under the same noise.
    """
    traj = integrate(topo, interpolated(beta, gamma), noise, t_end, dt,
                     n_replicas=n_replicas, record=record)
    traj.metadata["gamma"] = gamma
    return traj


def integrate_rerooted(reroot_map: RerootMap, couplings: CouplingAssignment,
                       noise: NoiseSource, t_end: float, dt: float,
                       n_replicas: int = 1, record="all") -> Trajectory:
    """The system on the tree of the same radius around the neighbouring
    root; overlap vertices consume the identical noise streams."""
    return integrate(reroot_map.topology, couplings, noise, t_end, dt,
                     n_replicas=n_replicas, record=record)


@dataclass
class ReferencePair:
    """The explicit weak solution: a spin sample tau plus an independent
    Brownian field, combined as t * tau + B_t on the grid."""

    topology: TreeTopology
    tau: np.ndarray
    times: np.ndarray
    brownian: np.ndarray
    xbar: np.ndarray


def reference_pair(topo: TreeTopology, couplings: CouplingAssignment,
                   seed: int, t_end: float, dt: float,
                   n_replicas: int = 1, record="all") -> ReferencePair:
    """Sample tau from the zero-field measure, lay independent Brownian
    paths over the same grid, and form t * tau + B_t."""
    n_steps = _step_grid(t_end, dt)
    times = np.arange(n_steps + 1) * dt
    mask = _record_mask(times, record)
    stream = RngStream(seed, "reference")
    tau = sample_conditional(topo, couplings, np.zeros(topo.n_vertices),
                             stream, n_samples=n_replicas)
    bnoise = NoiseSource(seed, tag="reference/brownian")

    b = np.zeros((n_replicas, topo.n_vertices))
    rec_b, rec_t = [], []
    if mask[0]:
        rec_b.append(b.copy())
        rec_t.append(0.0)
    for k in range(n_steps):
        b = b + bnoise.increments(topo.noise_ids, k, dt, n_replicas)
        if mask[k + 1]:
            rec_b.append(b.copy())
            rec_t.append(times[k + 1])
    rec_t = np.asarray(rec_t)
    brownian = np.stack(rec_b)
    xbar = rec_t[:, None, None] * tau[None, :, :] + brownian
    return ReferencePair(topology=topo, tau=tau, times=rec_t,
                         brownian=brownian, xbar=xbar)


def finite_diff_H(topo: TreeTopology, beta: float, noise: NoiseSource,
                  gamma: float, dgamma: float, t_end: float, dt: float,
                  n_replicas: int = 1, record="all") -> Trajectory:
    """Derivative of the interpolated system in the boundary coupling, by
    central differences of two strong solutions under identical noise
    (one-sided at the interval endpoints); H_0 = 0."""
    if dgamma <= 0:
        raise SdeError(f"dgamma={dgamma} must be positive")
    lo, hi = gamma - dgamma, gamma + dgamma
    if lo < 0.0:
        lo, hi = gamma, gamma + dgamma
    elif hi > beta:
        lo, hi = gamma - dgamma, gamma
    t_lo = integrate_interpolated(topo, beta, lo, noise, t_end, dt,
                                  n_replicas=n_replicas, record=record)
    t_hi = integrate_interpolated(topo, beta, hi, noise, t_end, dt,
                                  n_replicas=n_replicas, record=record)
    h = (t_hi.states - t_lo.states) / (hi - lo)
    return Trajectory(
        topology=topo, couplings=interpolated(beta, gamma), dt=dt,
        times=t_lo.times, states=h,
        metadata={"seed": noise.seed, "gamma": gamma, "dgamma": dgamma,
                  "stencil": (lo, hi)},
    )


def default_dgamma(beta: float) -> float:
    return min(1e-3, beta / 10.0)


def factor_signs(trajectory: Trajectory, vertices=None) -> np.ndarray:
    """Per-vertex signs of the state at the recorded (dyadic) times;
    sign(0) := +1 by convention.

    Returns an array shaped like the recorded states, restricted to
    `vertices` (labels) when given.
    """
    s = np.where(trajectory.states >= 0.0, 1.0, -1.0)
    if vertices is not None:
        cols = [trajectory.topology.index[v] for v in vertices]
        s = s[:, :, cols]
    return s


def dyadic_times(n_max: int) -> list[float]:
    return [float(2 ** n) for n in range(n_max + 1)]
