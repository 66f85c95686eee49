"""Iterative bilateral speckle filtering of polarimetric SAR covariance images."""
import numba

# the TBB layer is rarely present; workqueue is always available and the
# kernels need nothing beyond a plain parallel loop
if numba.config.THREADING_LAYER == "default":
    numba.config.THREADING_LAYER = "workqueue"

from .bilateral import FilterConfig, boxcar, filter_iteration, iterate_filter, run_filter  # noqa: E402
from .distances import DistanceKind, d_ai, d_kl, d_le, distance  # noqa: E402
from .field import LEXICOGRAPHIC, PAULI, CovarianceField, Rect  # noqa: E402
from .polarimetry import h_alpha, h_alpha_field, pauli_rgb  # noqa: E402
from .speckle import LabelMap, build_scene, default_scene, rank1_scene  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "CovarianceField",
    "DistanceKind",
    "FilterConfig",
    "LEXICOGRAPHIC",
    "LabelMap",
    "PAULI",
    "Rect",
    "boxcar",
    "build_scene",
    "d_ai",
    "d_kl",
    "d_le",
    "default_scene",
    "distance",
    "filter_iteration",
    "h_alpha",
    "h_alpha_field",
    "iterate_filter",
    "pauli_rgb",
    "rank1_scene",
    "run_filter",
]
