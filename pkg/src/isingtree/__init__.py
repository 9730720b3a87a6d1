"""Exact inference, samplers, and drift-SDE laboratory for the
ferromagnetic Ising model on regular trees.

The package couples three layers: closed-form belief-propagation inference
on truncated regular trees (marginals, covariances, chain factors), exact
and dynamical samplers (broadcast, conditional, Glauber), and an
Euler-Maruyama integrator whose drift is the magnetization map and whose
noise is keyed by global vertex labels so that systems of different depth
or rooting share their Brownian increments.  A verification harness checks
the closed forms against brute-force enumeration and runs the stability
and distribution experiments.
"""

__version__ = "0.1.0"

from .couplings import CouplingAssignment, CouplingError, interpolated, uniform
from .inference import (
    ChainFactors,
    InferenceError,
    MessageTable,
    boundary_drift_vector,
    boundary_triple_covariance,
    chain_factors,
    compute_messages,
    covariance_matrix,
    drift_batch,
    drift_vector,
    magnetization,
    pair_covariance,
    path_marginal,
    path_partition,
)
from .oracle import BruteForce, OracleError, brute_force
from .rng import CounterRng, NoiseSource, RngStream
from .samplers import (
    DisagreementRun,
    SamplerError,
    glauber_disagreement,
    run_glauber,
    sample_broadcast,
    sample_conditional,
)
from .sde import (
    ReferencePair,
    SdeError,
    Trajectory,
    dyadic_times,
    factor_signs,
    finite_diff_H,
    integrate,
    integrate_interpolated,
    integrate_rerooted,
    reference_pair,
)
from .topology import (
    ROOT,
    RerootMap,
    TopologyError,
    TreeTopology,
    VertexLabel,
    build_tree,
    label_distance,
    label_path,
    label_to_str,
    reroot,
    str_to_label,
)

__all__ = [
    "BruteForce",
    "ChainFactors",
    "CouplingAssignment",
    "CouplingError",
    "CounterRng",
    "DisagreementRun",
    "InferenceError",
    "MessageTable",
    "NoiseSource",
    "OracleError",
    "ROOT",
    "ReferencePair",
    "RerootMap",
    "RngStream",
    "SamplerError",
    "SdeError",
    "TopologyError",
    "Trajectory",
    "TreeTopology",
    "VertexLabel",
    "boundary_drift_vector",
    "boundary_triple_covariance",
    "brute_force",
    "build_tree",
    "chain_factors",
    "compute_messages",
    "covariance_matrix",
    "drift_batch",
    "drift_vector",
    "dyadic_times",
    "factor_signs",
    "finite_diff_H",
    "glauber_disagreement",
    "integrate",
    "integrate_interpolated",
    "integrate_rerooted",
    "interpolated",
    "label_distance",
    "label_path",
    "label_to_str",
    "magnetization",
    "pair_covariance",
    "path_marginal",
    "path_partition",
    "reference_pair",
    "reroot",
    "run_glauber",
    "sample_broadcast",
    "sample_conditional",
    "str_to_label",
    "uniform",
]
