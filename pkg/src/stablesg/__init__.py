"""Certified low-dimensional approximations for approximately collinear point sets."""

from .collinearity import (DependenceCertificate, TubeQuery, affine_dependence_certificate,
                           arc_distance, line_distance, projective_dependence_certificate,
                           tube_census)
from .designs import (DesignParams, TripleFamily, collect_triples_affine, collect_triples_arc,
                      design_parameters, prune_to_design, sg_hypothesis_check)
from .errors import (CertificateError, DegenerateInput, DimensionMismatch, GenerationError,
                     HypothesisNotMet, NotOnSphere, SearchExhausted, StableSGError,
                     TheoremViolation)
from .geometry import (PointConfig, Subspace, check_balanced, check_separated, dim_eps_lower,
                       dim_eps_upper, dist_to_subspace, distance, inner, svd)
from .lcc import (DecodingFamily, LccMatrix, RecoveryTuple, build_lcc_matrix, contract_with_R,
                  exhaustive_stable_lcc_check, find_decoding_families, lcc_dimension_pipeline,
                  perturb_stable_lcc, verify_stable_lcc)
from .reductions import (AffineAnalysis, ProjectiveAnalysis, analyze_affine,
                         analyze_affine_simple, analyze_projective, subset_variant)
from .spectral import (DependencyMatrix, SubspaceCertificate, approximate_sg_subspace,
                       build_dependency_matrix, column_distance_sum, extract_subspace,
                       refine_all_points, small_eig_count_bound, transfer_to_rows)

__version__ = "0.1.0"
