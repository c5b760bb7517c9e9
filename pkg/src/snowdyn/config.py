"""Numerical thresholds shared across modules.

Every value here is echoed into CSV headers by the CLI, so changing one
changes the provenance line of every report.
"""

# |denominator component| below this (after max-modulus normalization) is infinity.
INFINITY_THRESHOLD = 1e-14

# Backward error accepted by the root finder, relative to the absolute-value polynomial.
ROOT_TOL = 1e-13
ROOT_MAX_ITER = 500

# Candidate clusters are accepted as one multiple root when the backward error at
# the cluster centroid is below this.
CLUSTER_BACKWARD_TOL = 1e-14
# Roots closer than this (relative to max(1, |z|)) are candidate members of a cluster.
CLUSTER_LINK_RADIUS = 0.05

# Critical points of a map with truncated coefficients closer than this (relative)
# may be pieces of one multiple critical point.
CRITICAL_MERGE_LINK = 0.1

# Chordal snapping tolerance for postcritical portraits.
SNAP_TOL_EXACT = 1e-6
SNAP_TOL_RHAT = 2e-2

# Orbits closer than this (chordal) to a critical point get perturbed.
CRITICAL_GUARD = 1e-12
PERTURBATION = 1e-10

# |Im| threshold deciding the "boundary" itinerary symbol.
BOUNDARY_TOL = 1e-9

# Exclusion radius (chordal) around the postcritical set for density sampling.
EXCLUSION_RADIUS = 1e-3

# Default cap on the fiber depth j for kappa_j, keyed by degree.
J_CAP = {29: 3, 4: 7}
J_CAP_DEFAULT = 4

# Cylinder budget for snowsphere subdivisions.
CYLINDER_BUDGET = 5_000_000


def as_dict():
    return {
        k: v
        for k, v in globals().items()
        if k.isupper() and isinstance(v, (int, float))
    }
