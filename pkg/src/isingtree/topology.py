"""Finite d-regular trees truncated at a given depth.

Vertices carry a global address: the sequence of child indices walked from
the canonical root (the root is the empty sequence; the root has d children
indexed 0..d-1, every other vertex has d-1 children indexed 0..d-2).  The
address identifies a vertex of the *infinite* tree, so two truncations, or
two trees rooted at neighbouring vertices, agree on which physical vertex a
label names.  That stability is what lets noise streams keyed by label be
shared across depths and across re-rootings.

Labels serialize as slash-joined child indices: "" for the root, "0/1" for
a grandchild.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

VertexLabel = tuple[int, ...]

ROOT: VertexLabel = ()


class TopologyError(ValueError):
    """Invalid tree parameters or unknown vertex."""


def label_to_str(label: VertexLabel) -> str:
    return "/".join(str(i) for i in label)


def str_to_label(s: str) -> VertexLabel:
    if s == "":
        return ()
    return tuple(int(p) for p in s.split("/"))


def label_id(label: VertexLabel) -> int:
    """Stable 64-bit identifier of a label (used to key noise streams)."""
    h = hashlib.blake2b(label_to_str(label).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def label_distance(u: VertexLabel, v: VertexLabel) -> int:
    """Graph distance in the infinite tree, from the addresses alone."""
    k = 0
    for a, b in zip(u, v):
        if a != b:
            break
        k += 1
    return (len(u) - k) + (len(v) - k)


def label_path(u: VertexLabel, v: VertexLabel) -> list[VertexLabel]:
    """The unique path from u to v in the infinite tree."""
    k = 0
    for a, b in zip(u, v):
        if a != b:
            break
        k += 1
    up = [u[:i] for i in range(len(u), k, -1)]
    down = [v[:i] for i in range(k, len(v) + 1)]
    return up + down


def neighbors(label: VertexLabel, d: int) -> list[VertexLabel]:
    """All infinite-tree neighbours of a vertex, parent first."""
    out: list[VertexLabel] = []
    if label:
        out.append(label[:-1])
    n_children = d if not label else d - 1
    out.extend(label + (i,) for i in range(n_children))
    return out


@dataclass(frozen=True)
class EdgeSet:
    """Undirected edges of a truncated tree, split at the last level.

    Edges are (parent, child) pairs in the tree's own rooting; the child of
    a boundary edge is the depth-R leaf endpoint.
    """

    interior: list[tuple[VertexLabel, VertexLabel]]
    boundary: list[tuple[VertexLabel, VertexLabel]]


class TreeTopology:
    """A finite tree: all vertices within distance R of a root vertex.

    Immutable after construction.  Vertices are stored in breadth-first
    order (children sorted by index), so array positions are reproducible
    and two calls with equal arguments build identical objects.

    Attributes
    ----------
    d : int            branching parameter of the ambient regular tree
    depth : int        truncation radius R
    root : VertexLabel
    vertices : list[VertexLabel]        BFS order; vertices[0] == root
    index : dict[VertexLabel, int]
    parent_index : int64[V]             tree-parent position; -1 at the root
    depth_of : int64[V]                 distance to this tree's root
    levels : list[int64 arrays]         vertex positions grouped by depth
    noise_ids : uint64[V]               stable per-label stream keys
    """

    def __init__(self, d: int, depth: int, root: VertexLabel = ROOT):
        if d < 2:
            raise TopologyError(f"branching parameter d={d} must be >= 2")
        if depth < 0:
            raise TopologyError(f"depth R={depth} must be >= 0")
        self.d = d
        self.depth = depth
        self.root = root

        # BFS ball of radius `depth` around `root` in the infinite tree.
        verts: list[VertexLabel] = [root]
        parent_idx: list[int] = [-1]
        depth_of: list[int] = [0]
        index = {root: 0}
        frontier = [root]
        for level in range(1, depth + 1):
            nxt: list[VertexLabel] = []
            for v in frontier:
                pi = index[v]
                for w in neighbors(v, d):
                    if w in index:
                        continue
                    index[w] = len(verts)
                    verts.append(w)
                    parent_idx.append(pi)
                    depth_of.append(level)
                    nxt.append(w)
            frontier = nxt

        self.vertices = verts
        self.index = index
        self.parent_index = np.asarray(parent_idx, dtype=np.int64)
        self.depth_of = np.asarray(depth_of, dtype=np.int64)
        self.levels = [
            np.flatnonzero(self.depth_of == k) for k in range(depth + 1)
        ]
        # BFS fills one level at a time, so each level is a contiguous range
        self.level_slices = [
            slice(int(lv[0]), int(lv[-1]) + 1) if len(lv) else slice(0, 0)
            for lv in self.levels
        ]
        self.noise_ids = np.asarray(
            [label_id(v) for v in verts], dtype=np.uint64
        )
        # Group each level's vertices by parent for segment sums; BFS order
        # already places siblings contiguously.
        self._level_groups = []
        for k in range(1, depth + 1):
            idx = self.levels[k]
            par = self.parent_index[idx]
            starts = np.flatnonzero(np.r_[True, np.diff(par) != 0])
            self._level_groups.append((idx, par[starts], starts))
        self._parent_gather = [
            self.parent_index[self.level_slices[k]] for k in range(depth + 1)
        ]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def __contains__(self, label: VertexLabel) -> bool:
        return label in self.index

    def _require(self, label: VertexLabel) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise TopologyError(f"vertex {label_to_str(label)!r} not in tree") from None

    def parent_of(self, label: VertexLabel) -> VertexLabel | None:
        i = self.parent_index[self._require(label)]
        return None if i < 0 else self.vertices[i]

    def children_of(self, label: VertexLabel) -> list[VertexLabel]:
        i = self._require(label)
        return [
            self.vertices[j]
            for j in np.flatnonzero(self.parent_index == i)
        ]

    def neighbors_of(self, label: VertexLabel) -> list[VertexLabel]:
        p = self.parent_of(label)
        out = [] if p is None else [p]
        return out + self.children_of(label)

    def distance(self, u: VertexLabel, v: VertexLabel) -> int:
        self._require(u)
        self._require(v)
        return label_distance(u, v)

    def shortest_path(self, u: VertexLabel, v: VertexLabel) -> list[VertexLabel]:
        self._require(u)
        self._require(v)
        path = label_path(u, v)
        for w in path:
            if w not in self.index:  # cannot happen on a tree ball, guard anyway
                raise TopologyError(f"path leaves the tree at {label_to_str(w)!r}")
        return path

    def edges(self) -> list[tuple[VertexLabel, VertexLabel]]:
        """All edges as (parent, child), ordered by the child's BFS position."""
        return [
            (self.vertices[self.parent_index[i]], self.vertices[i])
            for i in range(1, self.n_vertices)
        ]

    def boundary_edges(self) -> EdgeSet:
        """Split the edge set at the last level.

        Boundary edges are those whose deeper endpoint sits at distance
        exactly R from the tree's root; for a depth-0 tree both lists are
        empty.
        """
        interior, boundary = [], []
        for i in range(1, self.n_vertices):
            e = (self.vertices[self.parent_index[i]], self.vertices[i])
            if self.depth_of[i] == self.depth:
                boundary.append(e)
            else:
                interior.append(e)
        return EdgeSet(interior=interior, boundary=boundary)

    def __repr__(self) -> str:
        return (
            f"TreeTopology(d={self.d}, depth={self.depth}, "
            f"root={label_to_str(self.root)!r}, |V|={self.n_vertices})"
        )


def build_tree(d: int, depth: int) -> TreeTopology:
    """Canonical depth-R truncation rooted at the empty label."""
    return TreeTopology(d, depth, ROOT)


@dataclass
class RerootMap:
    """The tree of the same radius around a neighbour of the root.

    `topology` is the ball of radius R around the new root, expressed in
    the same global labels, so overlap vertices are literally the same
    objects in both trees.  `address_map` sends each address of a canonical
    depth-R tree (as if the new root were the canonical root) to the
    physical label, giving the graph isomorphism explicitly.
    """

    source_root: VertexLabel
    target_root: VertexLabel
    topology: TreeTopology
    overlap: list[VertexLabel]
    union: list[VertexLabel]
    address_map: dict[VertexLabel, VertexLabel] = field(repr=False, default_factory=dict)


def reroot(topo: TreeTopology, neighbor_index: int) -> RerootMap:
    """Re-root at the `neighbor_index`-th child of the current root."""
    n_children = topo.d if not topo.root else topo.d - 1
    if not 0 <= neighbor_index < n_children:
        raise TopologyError(
            f"neighbor_index {neighbor_index} out of range 0..{n_children - 1}"
        )
    new_root = topo.root + (neighbor_index,)
    rerooted = TreeTopology(topo.d, topo.depth, new_root)

    overlap = [v for v in topo.vertices if v in rerooted]
    union = list(topo.vertices)
    union += [v for v in rerooted.vertices if v not in topo]

    # Canonical address of each vertex as seen from the new root: replay the
    # BFS and record, per vertex, the child-index path taken from new_root.
    address_map: dict[VertexLabel, VertexLabel] = {(): new_root}
    addr_of = {new_root: ()}
    for i in range(1, rerooted.n_vertices):
        v = rerooted.vertices[i]
        p = rerooted.vertices[rerooted.parent_index[i]]
        siblings = [
            rerooted.vertices[j]
            for j in np.flatnonzero(rerooted.parent_index == rerooted.parent_index[i])
        ]
        child_idx = siblings.index(v)
        addr = addr_of[p] + (child_idx,)
        addr_of[v] = addr
        address_map[addr] = v

    return RerootMap(
        source_root=topo.root,
        target_root=new_root,
        topology=rerooted,
        overlap=overlap,
        union=union,
        address_map=address_map,
    )
