"""Per-edge inverse temperatures on a truncated tree.

Interior edges carry one value, boundary (last-level) edges another; any
single edge can be overridden.  Only ferromagnetic couplings (beta >= 0)
are accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .topology import TreeTopology, VertexLabel


class CouplingError(ValueError):
    """Negative or malformed coupling specification."""


def _edge_key(u: VertexLabel, v: VertexLabel) -> tuple[VertexLabel, VertexLabel]:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class CouplingAssignment:
    """Inverse temperatures: `interior` on E_{R-1}, `boundary` on the last level.

    `boundary=None` means the boundary edges carry the interior value (the
    plain homogeneous model); `boundary=gamma` gives the interpolated model.
    `overrides` maps undirected edges (as unordered label pairs) to explicit
    values and wins over both defaults.
    """

    interior: float
    boundary: float | None = None
    overrides: dict[tuple[VertexLabel, VertexLabel], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.interior < 0:
            raise CouplingError(f"interior beta {self.interior} < 0")
        if self.boundary is not None and self.boundary < 0:
            raise CouplingError(f"boundary beta {self.boundary} < 0")
        for e, b in self.overrides.items():
            if b < 0:
                raise CouplingError(f"override beta {b} < 0 on edge {e}")

    def beta_of(self, topo: TreeTopology, u: VertexLabel, v: VertexLabel) -> float:
        key = _edge_key(u, v)
        if key in self.overrides:
            return float(self.overrides[key])
        du = topo.depth_of[topo.index[u]]
        dv = topo.depth_of[topo.index[v]]
        if self.boundary is not None and max(du, dv) == topo.depth:
            return float(self.boundary)
        return float(self.interior)

    def beta_up(self, topo: TreeTopology) -> np.ndarray:
        """beta of the edge (v, tree-parent(v)), per vertex; 0.0 at the root."""
        out = np.zeros(topo.n_vertices)
        for i in range(1, topo.n_vertices):
            out[i] = self.beta_of(
                topo, topo.vertices[i], topo.vertices[topo.parent_index[i]]
            )
        return out


def uniform(beta: float) -> CouplingAssignment:
    return CouplingAssignment(interior=beta)


def interpolated(beta: float, gamma: float) -> CouplingAssignment:
    """Interior beta, boundary gamma; gamma must lie in [0, beta]."""
    if not 0.0 <= gamma <= beta:
        raise CouplingError(f"gamma={gamma} outside [0, beta={beta}]")
    return CouplingAssignment(interior=beta, boundary=gamma)
