"""Numerics for matrix subspaces: operator-norm distances with trace-class
dual certificates, the vector functional beta with witnesses, distance
constants, conditional expectations, and structural classification."""

from .linalg import (RANK_TOL, InputError, direct_sum, hs_inner, kron,
                     operator_norm, projection_onto_span, svd, trace_norm)
from .spaces import (Functional, MatrixSubspace, action, adjoint_space,
                     annihilator, compression, contains, from_document,
                     from_spanning_set, full_subspace, load_subspace,
                     project_hs, range_projection, save_subspace,
                     subspace_equal, subspace_intersection, subspace_sum,
                     tensor_with_full, tensor_with_scalar, to_document,
                     zero_subspace)
from .metrics import (CertifiedValue, OptimizerOptions, beta,
                      beta_via_rank_one, distance, extremal_witness,
                      kappa_complete_probe, kappa_lower,
                      scaled_kappa_relation)
from .catalog import (AtomOp, DiagConstSpec, NestBimoduleSpec, Scene,
                      TriConstSpec, build_diag_const, build_nest_bimodule,
                      build_tri_const, family_22, get_scene, kappa103_scene,
                      masa_diag, masa_pattern_23, masa_pattern_32,
                      prop_two_scene, small_s_scene, upper_triangular)
from .expectations import (PartitionPair, averaging_bound_check,
                           block_diag_space, expectation_beta_contraction_check,
                           group_expectation, partition_beta,
                           scalartensor_bound_check, sign_expectation)
from .structure import (StructureReport, classify_22, classify_23,
                        detect_structure, is_reflexive, q_commutation_report,
                        reflexive_closure, total_order_check,
                        unital_algebra_classify)

__version__ = "0.1.0"
