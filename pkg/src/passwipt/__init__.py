"""Joint pinching-beamforming and antenna-placement optimization for MIMO
SWIPT downlinks, with WMMSE beam updates, linearized energy constraints,
and Gauss-Seidel position search, plus benchmark schemes and a sweep harness."""

from .baselines import (
    BaselineKind,
    BaselineResult,
    conventional_mimo_channels,
    fixed_uniform_layout,
    run_baseline,
    zf_beamformer,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateChannelError,
    InfeasibleScenarioError,
    InfeasibleSubproblemError,
    InternalSolverError,
    LayoutError,
    MaxIterationsError,
)
from .harness import (
    ALL_SCHEMES,
    PROPOSED,
    Scenario,
    SchemeRun,
    SolveResult,
    run_scheme,
    sample_scenario,
    solve_scenario,
    sweep,
)
from .inner import (
    InnerStep,
    QpSolution,
    SolveSettings,
    feasible_init_beams,
    solve_beam_qp,
    total_power,
    wmmse_inner_loop,
)
from .io import load_config, write_summary_csv, write_sweep_csv, write_trace_csv
from .metrics import (
    all_harvested,
    harvested_energy,
    linearized_energy,
    matched_filters_weights,
    mmse_filter,
    mse_matrix,
    mse_weight,
    optimal_mse,
    rate_surrogate,
    sum_rate,
    sum_surrogate,
    user_rate,
)
from .model import (
    ChannelMatrixSet,
    LayoutViolation,
    Receivers,
    SystemConfig,
    antenna_points,
    build_channels,
    channel_coefficient,
    dbm_to_watts,
    derive_constants,
    distance,
    effective_channel,
    pa_point,
    validate_layout,
    validate_receivers,
    watts_to_dbm,
)
from .positions import (
    PaUpdate,
    SweepReport,
    candidate_energy_feasible,
    candidate_objective,
    gauss_seidel_sweep,
    position_grid,
    update_pa,
)
from .trace import POSITION_STEP, SolveTrace, TraceRow, layout_hash

__version__ = "0.1.0"
