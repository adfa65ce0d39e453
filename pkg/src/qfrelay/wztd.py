"""Phase durations and relay powers for QF-WZTD, and its equivalence with QF-JD."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quantopt import QuantAllocation, optimize_k_ue
from .region import (as_gains, bin_rates, check_weights, max_weighted_sum,
                     phase_capacity, qf_jd_constraints, qf_wztd_rates)
from .scenario import LN2, LinkGains, Scenario

__all__ = ["WztdAllocation", "EquivalenceReport", "allocate_phases", "equivalence_report"]


@dataclass(frozen=True)
class WztdAllocation:
    """Phase fractions ``beta``, phase powers ``rho`` and what each phase carries.

    ``phase_capacity`` is in bits/cu over the whole block and
    ``log_lambda_sk`` in nats; unrelayed UEs have an explicit zero phase.
    """

    beta: np.ndarray
    rho: np.ndarray
    phase_capacity: np.ndarray
    log_lambda_sk: np.ndarray

    def to_dict(self) -> dict:
        return {
            "beta": self.beta.tolist(),
            "rho": self.rho.tolist(),
            "phase_capacity": self.phase_capacity.tolist(),
            "log_lambda_sk": self.log_lambda_sk.tolist(),
        }


def allocate_phases(alloc: QuantAllocation, gains: Scenario | LinkGains) -> WztdAllocation:
    """``beta_k = ln lambda_k / ln lambda_s`` and ``rho_k = beta_k P_r``, so
    every phase is sent at the full SCBS power."""
    g = as_gains(gains)
    beta = np.asarray(alloc.log_lambda, dtype=float) / g.log_lambda_s
    rho = beta * g.P_r
    cap = phase_capacity(g, beta, rho)
    lsk = np.zeros_like(beta)
    on = beta > 0
    lsk[on] = beta[on] * g.N * np.log1p(g.relay_snr * rho[on] / (beta[on] * g.P_r))
    return WztdAllocation(beta=beta, rho=rho, phase_capacity=cap, log_lambda_sk=lsk)


@dataclass(frozen=True)
class EquivalenceReport:
    """Both schemes' weighted sums at the shared optimum, with every
    relay-phase inequality written out."""

    jd_value: float
    wztd_value: float
    alloc: QuantAllocation
    phases: WztdAllocation
    rb: np.ndarray
    rate_identity: np.ndarray  # |R_bk - log2 lambda_k|
    feasible: np.ndarray

    @property
    def relative_gap(self) -> float:
        return abs(self.jd_value - self.wztd_value) / max(1.0, abs(self.jd_value))

    @property
    def slack(self) -> np.ndarray:
        return self.phases.phase_capacity - self.rb

    def ok(self, tol: float = 1e-9) -> bool:
        return (self.relative_gap <= tol and bool(np.all(self.feasible))
                and bool(np.all(self.rate_identity <= tol * np.maximum(1.0, self.rb))))

    def to_dict(self) -> dict:
        return {
            "jd_value": self.jd_value,
            "wztd_value": self.wztd_value,
            "beta": self.phases.beta.tolist(),
            "rho": self.phases.rho.tolist(),
            "rb": self.rb.tolist(),
            "phase_capacity": self.phases.phase_capacity.tolist(),
        }


def equivalence_report(scenario: Scenario | LinkGains, mu, alloc: QuantAllocation | None = None,
                       tol: float = 1e-9) -> EquivalenceReport:
    """Evaluate QF-JD and QF-WZTD at the optimal variances.

    With separate decoding every UE sits at its own cap ``I_k``, so the
    WZTD weighted sum is ``sum mu_k I_k`` provided each bin rate fits its
    phase; the JD value comes from the region LP.
    """
    g = as_gains(scenario)
    mu = check_weights(mu, g.K)
    if alloc is None:
        alloc = optimize_k_ue(g, mu)
    phases = allocate_phases(alloc, g)
    jd = max_weighted_sum(qf_jd_constraints(g, alloc.Q), mu).value
    wz = qf_wztd_rates(g, alloc.Q, phases.beta, phases.rho, tol=tol)
    wztd_value = float(mu @ wz.I) if np.all(wz.feasible) else -math.inf
    rb = bin_rates(g, alloc.Q)
    identity = np.abs(rb - np.asarray(alloc.log_lambda) / LN2)
    return EquivalenceReport(jd_value=jd, wztd_value=wztd_value, alloc=alloc, phases=phases,
                             rb=rb, rate_identity=identity, feasible=wz.feasible)
