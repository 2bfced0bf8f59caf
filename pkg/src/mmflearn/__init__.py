"""
    Online learning of unknown demands inside a max-min fair allocator.
"""

__version__ = '0.1.0'

from .mmf import (AllocationProblem, AllocationVector, ValidationError, max_min_fairness,
                  mmf_allocate)
from .payoffs import (AgentProfile, FeedbackSample, PayoffSpec, ReportPolicy, apply_policy,
                      payoff_eval, sample_load, sample_reward, unit_demand, utility_eval)
from .metrics import (LossComponents, MetricSeries, coverage_rate, fairness_gap,
                      loss_components, strategy_gap)
from .mechanisms import (MechanismKind, RoundRecord, SimulationTrace, run_baseline, run_nsp,
                         run_sp, simulate)
from .config import ConfigError, ExperimentConfig, parse_config
