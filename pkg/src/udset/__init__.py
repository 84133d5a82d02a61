"""Universal differentiability sets at desk scale: construction, certificates, search."""
from .construction import (ConstructionTables, DepthExceeded, SegmentBudgetExceeded, SetHandle,
                           build_tables, in_M_k, in_O_k, in_S, in_T_lambda, sample_M_k,
                           sample_T_lambda, segments_in_M, segments_in_T)
from .dense_net import EpsNet, build_net, enumerate_R, in_R, net_property_check
from .dimension import (BoxCountSeries, box_count, box_count_series, dimension_fit,
                        hausdorff_sum, projection_interval_length)
from .diffsearch import (DiffReport, LipschitzFunction, condition_ii_margin,
                         directional_quotient, frechet_profile, search_almost_max,
                         test_function_library)
from .geometry import Ball, Segment, dist_point_segment, in_neighborhood
from .kernels import BACKEND
from .lemmas import (CertificateRejected, HypothesisViolation, InsufficientDepth,
                     MainLemmaCertificate, ShiftInstance, crit_alpha, delta0,
                     main_lemma_certify, shift_check)
from .tubes import build_segment_table, cover_sum_certificate, cover_tube, in_O_n

__version__ = "0.1.0"
