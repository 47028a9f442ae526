"""kinklab: numerical laboratory for coupled stochastic Allen-Cahn fronts."""

__version__ = "0.1.0"

from .center import CenterEstimate, center_residual, find_center, linearized_center, track_center
from .experiments import (
    DiffusionEstimate,
    GaussianityReport,
    NoiseProjectionReport,
    compute_d_epsilon,
    estimate_diffusion,
    gaussianity_report,
    noise_projection_check,
    run_barrier_experiment,
    run_boundedness_experiment,
    run_comparison_experiment,
)
from .grid import (
    Field,
    Grid1D,
    apply_heat_semigroup,
    build_grid,
    heat_step_matrix,
    inner_product,
    laplacian_neumann,
    reflect_extend,
)
from .linear import (
    LinearOperator,
    SpectrumResult,
    assemble_operator,
    eigen_spectrum,
    evolve_linear_pair,
    fit_decay_rate,
    semigroup_contraction_check,
)
from .model import (
    instanton_derivative_field,
    instanton_field,
    potential_derivatives,
    stationarity_residual,
)
from .spde import (
    BlowUpError,
    ConstantInitial,
    CoupledState,
    FieldPairInitial,
    InstantonInitial,
    NoiseSlice,
    SimConfig,
    Trajectory,
    sample_noise,
    simulate,
    simulate_pair_same_noise,
    step,
)
