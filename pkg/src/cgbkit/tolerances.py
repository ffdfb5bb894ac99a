"""Numeric tolerances used across the toolkit.

All comparisons are absolute unless the name says otherwise.
"""

# forms
UNDERFLOW = 1e-300
SKEW = 1e-12

# manifold
METRIC_SYMMETRY = 1e-12
FRAME_ORTHONORMAL = 1e-10
RIEMANN_SYMMETRY_REL = 1e-8
NULLITY_REL = 1e-8

# hypersurface
NORMAL_UNIT = 1e-10
NORMAL_ORTHOGONAL = 1e-8
SHAPE_SYMMETRY = 1e-5
CONVEX = 1e-6
PERIODIC = 1e-10

# gaussbonnet
POINTWISE_SLACK = 1e-8
INTEGRAL_REL = 1e-2
ERROR_FACTOR = 3.0
FIT_SPREAD = 1e-3
FIT_MIN_CORRECTION = 1e-12
FRAME_MATCH = 1e-6
LEMMA_WEDGE = 1e-9

# desk-scale guards
MAX_DIMENSION = 7
MAX_SPHERE_DIM = 6
