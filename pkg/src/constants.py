"""Frozen numerical constants shared by the pipelines."""

TOOL_VERSION = "0.4.0"

# Orientation of the cosphere components in the topological index.
#
# Provenance: the pure pseudodifferential operator with symbol e^{ix} on the
# xi=+1 component and 1 on the xi=-1 component is the Toeplitz-type operator
# M_{e^{ix}} P_+ + P_-. Its kernel is trivial and its cokernel is spanned by the
# constant mode, so the analytic index is -1. The signed component sum
# sum_{xi=+-1} (+-1) (1/2 pi i) int (sigma^-1 d sigma)_e evaluates to +1 on that
# symbol. The sign below makes both routes agree and is re-derived by
# ``topological.calibrate_orientation`` in the test suite.
ORIENTATION_SIGN = -1

# Cosphere components of S*S^1, in storage order.
COMPONENT_SIGNS = (1, -1)

# operator-realization
SV_THRESHOLD = 1e-7
SV_GAP_RATIO = 10.0
STABLE_RUN = 3
DEFAULT_TRUNCATIONS = (64, 128, 256)

# ellipticity
ELLIPTIC_FLOOR = 1e-6
DRIFT_TOLERANCE = 0.1
ELLIPTIC_TRUNCATIONS = (32, 64, 128, 256)

# uniformization
UNIFORMIZE_TRUNCATIONS = (8, 16, 32)

# index-topological
SNAP_TOLERANCE = 1e-6
MIN_QUADRATURE_NODES = 512
VANISHING_FLOOR = 1e-9

# crossed-symbol
INVERSE_TOLERANCE = 1e-10
INVERSE_MAX_SUPPORT = 128
SYMBOL_GRID = 128
