"""Exact verification of shallow ReLU Lyapunov candidates.

The hidden layer of a single-hidden-layer ReLU network partitions the
state space into convex regions on which the network is affine.  Over a
compact box this package enumerates those regions exactly, checks
positivity at their vertices, and decides the decrease condition by a
per-region rotation plus constrained global maximization.
"""

from .arrangement import (
    Box,
    Hyperplane,
    Region,
    RegionSet,
    chebyshev_center,
    enumerate_regions,
    hyperplanes_from_network,
    region_count_oracle,
    vertex_enumeration,
)
from .combinatorics import (
    CharPoly,
    Flat,
    FlatPoset,
    build_flat_poset,
    characteristic_polynomial,
    region_upper_bound,
    zaslavsky_count,
)
from .dynamics import (
    DynamicsModel,
    builtin,
    eval_f,
    jacobian,
    load_dynamics,
    parse_dynamics,
    parse_expression,
)
from .gopt import Budget, OptResult, PolytopeDomain, global_max
from .network import (
    ShallowReluNet,
    activation_pattern,
    eval_v,
    eval_v_dot,
    l1_norm_net,
    load_network,
    region_gradient,
    save_network,
)
from .verifier import (
    Counterexample,
    Rotation,
    VerificationReport,
    VerifyConfig,
    counterexample_valid,
    hole_slabs,
    householder_to_e1,
    test_decrease,
    test_origin,
    test_positivity,
    verify,
)

__version__ = "0.1.0"

__all__ = [
    "Box", "Hyperplane", "Region", "RegionSet",
    "chebyshev_center", "enumerate_regions", "hyperplanes_from_network",
    "region_count_oracle", "vertex_enumeration",
    "CharPoly", "Flat", "FlatPoset", "build_flat_poset",
    "characteristic_polynomial", "region_upper_bound", "zaslavsky_count",
    "DynamicsModel", "builtin", "eval_f", "jacobian", "load_dynamics",
    "parse_dynamics", "parse_expression",
    "Budget", "OptResult", "PolytopeDomain", "global_max",
    "ShallowReluNet", "activation_pattern", "eval_v", "eval_v_dot",
    "l1_norm_net", "load_network", "region_gradient", "save_network",
    "Counterexample", "Rotation", "VerificationReport", "VerifyConfig",
    "counterexample_valid", "hole_slabs", "householder_to_e1",
    "test_decrease", "test_origin", "test_positivity", "verify",
]
