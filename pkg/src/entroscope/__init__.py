"""Entanglement of bipartite subspaces and minimum entropy output of channels.

Core layers:

- :mod:`entroscope.matrices`: dense complex linear algebra and file formats.
- :mod:`entroscope.divdiff`: divided differences and the second-order
  matrix-function perturbation expansion.
- :mod:`entroscope.derivatives`: entanglement entropy, its exact first and
  second directional derivatives, and the singular-case dispatch.
- :mod:`entroscope.subspaces`: subspaces of bipartite matrices, direction
  decompositions, and channel ingestion.
- :mod:`entroscope.optimize`: sphere-constrained local minimization and
  critical-point classification.
- :mod:`entroscope.harness`: seeded experiments and report emission (see the
  ``entroscope`` CLI).
"""

from .derivatives import (
    DerivativeReport,
    DirectionPair,
    StateMatrix,
    curvature_weight,
    curvature_weight_avg,
    curve_entropy,
    divergence_probe,
    entropy,
    first_derivative,
    hadamard_weights,
    kernel_block_partition,
    local_minimum_conditions,
    regularize,
    second_derivative,
    second_derivative_full_rank,
    second_derivative_parts,
    weight_subadditivity_gap,
)
from .matrices import (
    SingularLogError,
    herm_eig,
    hs_inner,
    kron,
    load_matrix,
    log_psd,
    partial_trace,
    save_matrix,
    svd,
)
from .optimize import (
    MinimizationResult,
    MinimizeOptions,
    classify,
    gradient,
    hessian,
    minimize,
    tangent_frame,
)
from .subspaces import (
    Subspace,
    blockwise_basis,
    channel_to_subspace,
    complement,
    kraus_to_isometry,
    load_kraus,
    load_subspace,
    operator_schmidt,
    orthonormalize,
    random_subspace,
    save_subspace,
    split_direction,
    tensor,
)

__version__ = "0.1.0"
