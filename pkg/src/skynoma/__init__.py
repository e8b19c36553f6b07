"""Energy-efficiency simulator for aerial NOMA downlinks under imperfect CSI.

The pipeline: drop a topology, draw estimated channels, harden rate targets
against estimation error through an outage transform, match users onto
subchannels with DC-scored pairing, split pair power, allocate subchannel
powers by successive convex approximation, and account per-user energy
efficiency.  Baseline schemes and slow verification oracles ride along.
"""

from ._backend import COMPILED, backend_name
from .baselines import (
    SCHEMES,
    SchemeResult,
    exhaustive_schedule,
    ftpa_scheme,
    noma_dc_power,
    noma_dc_scheme,
    ofdma_scheme,
    proposed_scheme,
)
from .channel import ChannelSet, build_channel_set
from .errors import ConfigError, DomainError, SizeGuardError, SkynomaError
from .harness import (
    PRESETS,
    ExperimentResult,
    ExperimentSpec,
    OracleStats,
    ValidationReport,
    make_spec,
    oracle_compare,
    run_experiment,
    score_matching,
    validate,
)
from .metrics import EEReport, pair_coefficients, total_ee
from .outage import (
    OutageContext,
    fading_cdf,
    fading_quantile,
    make_outage_context,
    marcum_q1,
    outage_sinr,
)
from .power import (
    PowerResult,
    allocate_power,
    build_power_constraints,
    build_power_terms,
    ee_power_objective,
    project_feasible,
    sca_surrogate,
    solve_convex_subproblem,
)
from .scenario import ScenarioConfig, Topology, generate_topology, load_config
from .scheduling import Assignment, optimize_power_split, schedule_users

__version__ = "0.1.0"

__all__ = [
    "COMPILED",
    "backend_name",
    "SCHEMES",
    "SchemeResult",
    "exhaustive_schedule",
    "ftpa_scheme",
    "noma_dc_power",
    "noma_dc_scheme",
    "ofdma_scheme",
    "proposed_scheme",
    "ChannelSet",
    "build_channel_set",
    "ConfigError",
    "DomainError",
    "SizeGuardError",
    "SkynomaError",
    "PRESETS",
    "ExperimentResult",
    "ExperimentSpec",
    "OracleStats",
    "ValidationReport",
    "make_spec",
    "oracle_compare",
    "run_experiment",
    "score_matching",
    "validate",
    "EEReport",
    "pair_coefficients",
    "total_ee",
    "OutageContext",
    "fading_cdf",
    "fading_quantile",
    "make_outage_context",
    "marcum_q1",
    "outage_sinr",
    "PowerResult",
    "allocate_power",
    "build_power_constraints",
    "build_power_terms",
    "ee_power_objective",
    "project_feasible",
    "sca_surrogate",
    "solve_convex_subproblem",
    "ScenarioConfig",
    "Topology",
    "generate_topology",
    "load_config",
    "Assignment",
    "optimize_power_split",
    "schedule_users",
    "__version__",
]
