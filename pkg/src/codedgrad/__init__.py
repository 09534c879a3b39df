"""Straggler-tolerant coded gradient computation.

Schedules for three task-assignment schemes (MDS coded, uncoded cyclic and
column-distinct pair-coded), an exact rational decoder, exhaustive
completion-time analysis for small clusters, a Monte Carlo engine for large
ones and a gradient-descent demo on a linear-regression problem.
"""

from .analysis import (
    CumulativeType,
    all_types,
    completion_cdf,
    count_recoverable_by_type,
    expected_completion_time,
    type_probability,
)
from .decoder import RecoveryReport, decode, meets_threshold, peel, recover_from_schedule
from .errors import (
    CodedGradError,
    ConfigError,
    DimensionError,
    EnumerationBudgetExceeded,
    InfeasibleError,
    ParameterError,
    UnsupportedConfiguration,
)
from .gd import RegressionProblem, centralized_gd, gd_step, run_gd
from .kernel import COMPILED, backend_name
from .schedule import (
    Codeword,
    Delivery,
    Partition,
    ScheduleMatrix,
    Scheme,
    build_cpgc,
    build_mcc,
    build_schedule,
    build_uc_mmc,
    validate_schedule,
)
from .simulation import SimConfig, run_experiment, simulate_iteration, sweep_tolerance
from .straggler import StragglerParams, p_exact, sample_completion_times

__version__ = "0.1.0"
