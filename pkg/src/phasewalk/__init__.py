"""Random-walk Bayesian phase estimation.

Deterministic online estimation of an eigenphase from single-bit
measurements: the posterior is kept normal, each optimally-chosen
measurement moves the mean by a fixed step and contracts the deviation by a
fixed factor, and consistency checks unwind the walk when the normal
approximation breaks.  Includes a simulated measurement oracle, a Liu-West
particle-filter baseline for postprocessing the same records, and a seeded
risk/benchmark harness.

The per-measurement hot loop runs in a compiled extension when available
(``phasewalk.backend_name()`` tells you which); a pure-Python kernel with
identical, bit-for-bit output is selected as fallback at import time.
"""

from ._backend import BACKEND as _BACKEND_NAME
from ._backend import available_backends, get_backend
from .gaussian import (
    SIGMA_CONTRACT,
    SIGMA_GROW,
    STEP_SCALE,
    WALK_RANGE,
    DegenerateUpdate,
    ExperimentParams,
    GaussianState,
    QuadratureFailure,
    bayes_oracle,
    check_experiment,
    check_pass_probability,
    likelihood,
    optimal_experiment,
    update_general,
    update_optimal,
)
from .oracles import (
    RNG_ALGORITHM,
    ReplayExhausted,
    ReplayMismatch,
    ReplayOracle,
    SimulatedOracle,
    make_stream,
    sample_true_omega,
)
from .particle import (
    LiuWestConfig,
    ParticleCloud,
    ZeroPosterior,
    initial_cloud,
    liu_west_resample,
    pf_replay_ensemble,
    pf_run,
    pf_update,
)
from .records import TrialRecord, read_records, write_records
from .risk import (
    RiskSummary,
    fisher_information,
    frequentist_profile,
    run_ensemble,
    summarize,
    van_trees_bound,
)
from .walker import (
    BudgetExhausted,
    UnwindOutcome,
    WalkerConfig,
    WalkerState,
    consistency_check_and_unwind,
    new_state,
    run,
    step,
)

__version__ = "0.1.0"


def backend_name() -> str:
    """Which walker kernel was selected at import: 'compiled' or 'python'."""
    return _BACKEND_NAME
