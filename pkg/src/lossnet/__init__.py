"""Two-moment GI/G/c/0 overflow loss network models for neonatal cot planning."""

from .distributions import (
    Family,
    MomentSummary,
    RenewalDistribution,
    erlang2,
    exponential,
    from_mean_scv,
    hyper2,
    moments,
    sample,
)
from .config import NetworkConfig, bundled_config_path, dump_config, parse_config, parse_config_text
from .loss_core import build_coefficients, erlang_b, rejection_single, steady_state
from .network import (
    Level,
    OverflowState,
    Stream,
    UnitEvaluation,
    UnitModel,
    enumerate_states,
    evaluate,
    evaluate_level1,
    evaluate_level1_itu,
    evaluate_level32,
    markovian_closed_form,
)
from .planner import ape, build_report, min_cots, render_report
from .simulator import RoutingPolicy, default_policy, place, simulate_unit

__version__ = "0.1.0"
