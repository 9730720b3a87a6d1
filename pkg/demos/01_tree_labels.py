"""Tour of the vertex-label addressing scheme.

Vertices of the d-regular tree truncated at depth R are addressed by
tuples of child indices from a canonical root: the root is (), its
children are (0,), ..., (d-1,), and every other vertex appends an index
in 0..d-2.  Addresses are global: the same physical vertex keeps its
label when the tree is truncated at a different depth or re-rooted, which
is what lets two systems share per-vertex noise streams.
"""

from isingtree import build_tree, label_to_str, reroot, str_to_label

topo = build_tree(d=3, depth=2)
print(f"3-regular tree, depth 2: {topo.n_vertices} vertices")
for v in topo.vertices:
    print(f"  {label_to_str(v):8s} depth {len(v)}  "
          f"dist to root {topo.distance(v, ())}")

print("\nSerialization round-trips:")
for v in [(), (2,), (1, 0)]:
    s = label_to_str(v)
    assert str_to_label(s) == v
    print(f"  {v!r} <-> {s!r}")

print("\nTruncation keeps addresses:")
small = build_tree(3, 1)
shared = set(small.vertices) & set(topo.vertices)
print(f"  depth-1 tree has {small.n_vertices} vertices, "
      f"all {len(shared)} shared with the depth-2 tree")

print("\nRe-rooting at the first child:")
rm = reroot(topo, 0)
print(f"  new root label (old coordinates): {label_to_str(rm.target_root)}")
print(f"  overlap with the original vertex set: {len(rm.overlap)} vertices")
print("  canonical address seen from the new root -> physical label:")
for addr in [(), (0,), (0, 0)]:
    print(f"    {label_to_str(addr) or '(root)':8s} -> "
          f"{label_to_str(rm.address_map[addr]) or '(root)'}")
