"""Numerical verification of almost positive curvature on the quotient
7-sphere of Sp(2) under a two-parameter family of contracted left-invariant
metrics."""

__version__ = "0.1.0"

from .quat import ImQuaternion, Quaternion, ad_rotation, rotation_angle, solve_rotation_mapping
from .sp2 import (AlgebraElement, GroupElement, QMatrix2, bracket, exp,
                  haar_sample, trace_inner, u_action)
from .cheeger import (BI_INVARIANT, CurvatureTensor, MetricParams,
                      curvature_tensor, inner1, inner2, kappa_G, sec_G,
                      tilde, untilde, zero_bracket_residuals)
from .submersion import (HorizontalSpace, VerticalFrame, a_tensor,
                         horizontal_projection, horizontal_space,
                         horizontality_residual_tilded, sec_M, vertical_basis)
from .zeroset import (PlaneTemplate, ZClassification, build_template, classify,
                      construct_zero_horizontal_plane, det_condition,
                      nowhere_horizontal_residual, w_condition)
from .search import (Calibration, MinResult, ScanReport, calibrate_threshold,
                     min_kappa_horizontal, min_sec_M, scan)
