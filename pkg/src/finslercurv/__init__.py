"""Numerical Finsler curvature engine.

Metrics are declared as :class:`MetricSpec` values; everything else is a
pure function of a metric and a :class:`BundlePoint`.
"""

__version__ = "0.1.0"

from .bundle import BundlePoint, TensorValue  # noqa: E402
from .errors import *  # noqa: E402,F401,F403
from .jets import DiffConfig, Jet  # noqa: E402
from .metrics import (MetricSpec, cartan_tensor, eval_F, fundamental_tensor,  # noqa: E402
                      mean_cartan_norm, metric_from_dict)
from .connection import chern_coefficients, delta_derivative, spray  # noqa: E402
from .curvature import (akbar_zadeh_ric, bianchi_residual, einstein_k, einstein_residual,  # noqa: E402
                        hh_curvature, horizontal_covariant_derivative, ricci_h, scal_h,
                        schur_statistic, trace_free_ricci)
from .conformal import (ConformalFactor, bach, classify, cotton_york, deform,  # noqa: E402
                        direct_vs_residual_check, lce_residual, schouten, weyl,
                        weyl_divergence_check)
from .warped import (OdeFamily, WarpFunction, build_warped, warped_connection_blocks, cylinder,  # noqa: E402
                     cylinder_factor, verify_cylinder_case)
