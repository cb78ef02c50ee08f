"""chainlab: generic-chaining bounds, certified at desk scale.

Finite metric spaces, entropy numbers, admissible partition sequences built
by the contraction-principle construction, interpolation K-functionals,
lattice/convexity closed forms, Gaussian-process width pipelines, and
structured random-matrix bounds, all validated against brute-force oracles
and Monte Carlo.
"""

from .metric import FiniteMetricSpace, SubsetView, build_space, check_metric, diam
from .entropy import EntropyResult, entropy_number, exact_kcenter, greedy_packing, local_entropy, proper_net
from .partitions import (
    AdmissibleSequence,
    ControlMatrix,
    contraction_build,
    gamma_exact,
    nets_partition_convert,
    value,
)
from .interpolation import (
    InterpolationProblem,
    ellipsoid_closed_form,
    interpolation_set,
    k_functional,
    projection_check,
    telescoping_check,
)
from .geometry import (
    GaugeSpec,
    estimate_geometry_constants,
    lattice_split_point,
    renorm_lower_q,
)
from .bounds import classical_bounds, closed_form_bounds, constructive_pipeline, interpolation_bound
from .gaussian import (
    BallWidthCache,
    GaussianProcess,
    ball_k_functional,
    mc_sup,
    mm_pipeline,
    natural_metric,
    sudakov_minoration_gap,
)
from .matrices import (
    CoefficientEnsemble,
    build_ensemble,
    gordon_bound,
    latala_variants,
    matrix_closed_bounds,
    mc_spectral_norm,
    mixed_norms,
    row_norm_lower,
)
from .report import BoundReport

__version__ = "0.1.0"
