"""Rate regions and optimal quantize-forward relaying for a massive-MIMO
two-tier uplink."""
from .kernels import BACKEND
from .quantopt import (TOLERANCES, QuantAllocation, Tolerances, grid_oracle, kkt_residuals,
                       optimize_k_ue, optimize_two_ue, waterfill_bisection)
from .region import max_weighted_sum, qf_jd_constraints, qf_wztd_rates
from .scenario import (LinkGains, Scenario, ScenarioError, link_gains, load_scenario,
                       reference_three_ue, reference_two_ue, sample_zf_noise_gains)
from .wztd import allocate_phases, equivalence_report

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "LinkGains",
    "QuantAllocation",
    "Scenario",
    "ScenarioError",
    "TOLERANCES",
    "Tolerances",
    "allocate_phases",
    "equivalence_report",
    "grid_oracle",
    "kkt_residuals",
    "link_gains",
    "load_scenario",
    "max_weighted_sum",
    "optimize_k_ue",
    "optimize_two_ue",
    "reference_three_ue",
    "reference_two_ue",
    "qf_jd_constraints",
    "qf_wztd_rates",
    "sample_zf_noise_gains",
    "waterfill_bisection",
]
