"""QMC point sets from balanced colorings of weighted dyadic incidence systems.

The construction oversamples a target point count, repeatedly halves the
population with balanced colorings produced by a self-balancing walk on
weighted dyadic-box incidence vectors, and returns the leaf sets together
with a full audit trail.  Product weights, a truncation mode (leading
coordinates only), and a superposition mode (bounded interaction order)
adapt the incidence system to what is known about the integrand.
"""

from ._backend import BACKEND
from .balance import Coloring, WalkConfig, WalkFailure, balanced_coloring, self_balancing_walk
from .dyadic import (
    DyadicBox,
    Mode,
    SparseIncidence,
    WeightProfile,
    box_count,
    box_weight,
    enumerate_boxes,
    incidence,
    locate,
)
from .metrics import (
    DiscrepancyReport,
    FourierPolynomial,
    grid_star_discrepancy,
    integration_error,
    so_variation,
    star_discrepancy_exact,
    summarize,
    transference_audit,
    wso_variation,
)
from .pointset import PointSet, PointSetMeta, read_pointset, write_pointset
from .regions import Region
from .sampling import (
    DigitalShift,
    Owen,
    Rng,
    SobolSpec,
    iid_uniform,
    inverse_normal_cdf,
    sobol,
)
from .transference import (
    ExternalInit,
    IIDInit,
    SobolInit,
    TransferenceConfig,
    TransferenceTrail,
    combinatorial_disc,
    fold_points,
    incidence_block,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Coloring",
    "DigitalShift",
    "DiscrepancyReport",
    "DyadicBox",
    "ExternalInit",
    "FourierPolynomial",
    "IIDInit",
    "Mode",
    "Owen",
    "PointSet",
    "PointSetMeta",
    "Region",
    "Rng",
    "SobolInit",
    "SobolSpec",
    "SparseIncidence",
    "TransferenceConfig",
    "TransferenceTrail",
    "WalkConfig",
    "WalkFailure",
    "WeightProfile",
    "balanced_coloring",
    "box_count",
    "box_weight",
    "combinatorial_disc",
    "enumerate_boxes",
    "fold_points",
    "grid_star_discrepancy",
    "incidence",
    "incidence_block",
    "integration_error",
    "iid_uniform",
    "inverse_normal_cdf",
    "locate",
    "read_pointset",
    "run",
    "self_balancing_walk",
    "sobol",
    "so_variation",
    "star_discrepancy_exact",
    "summarize",
    "transference_audit",
    "write_pointset",
    "wso_variation",
]
