"""Validation harness: analytic solvers against independent references.

Every check records the value under test, the reference, the tolerance and
where the reference came from. A failing or crashing check is recorded and
the suite moves on.
"""
from __future__ import annotations

import dataclasses
import math
import traceback
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._json import dumps
from .quantopt import (TOLERANCES, Tolerances, closed_form_value, grid_oracle, kkt_residuals,
                       optimize_k_ue, optimize_two_ue, waterfill_bisection)
from .region import (max_weighted_sum, qf_jd_constraints, two_ue_case_value,
                     weights_from_mu1)
from .scenario import (LN2, Scenario, link_gains, sample_zf_noise_gains, scenario_to_dict,
                       validate)
from .wztd import equivalence_report

__all__ = ["PROVENANCES", "Check", "ValidationReport", "SuiteConfig", "run_suite",
           "two_ue_bound_terms"]

PROVENANCES = ("grid", "cross-solver", "identity", "monte-carlo")


@dataclass(frozen=True)
class Check:
    """One comparison. ``target`` is the solver output, ``reference`` the
    independent value; ``target`` is typically a residual when the
    reference is 0."""

    name: str
    target: float
    reference: float
    tolerance: float
    passed: bool
    provenance: str
    detail: str = ""

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ValidationReport:
    scenario: dict
    config: dict
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_checks": len(self.checks),
            "n_failed": len(self.failures),
            "scenario": self.scenario,
            "config": self.config,
            "checks": [c.to_dict() for c in self.checks],
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def summary(self) -> str:
        lines = [f"{'PASS' if c.passed else 'FAIL'} [{c.provenance}] {c.name}" for c in self.checks]
        lines.append(f"{len(self.checks) - len(self.failures)}/{len(self.checks)} checks passed")
        return "\n".join(lines)


@dataclass(frozen=True)
class SuiteConfig:
    """Suite inputs.

    ``mu1`` values are expanded with :func:`weights_from_mu1` using ``split``
    for the remaining UEs. ``grid_points`` applies to two UEs and
    ``grid_points_3ue`` to three. ``mc_approx_tol`` bounds the gap between
    the sampled mean and the large-array approximation; ``None`` skips it.
    """

    mu1: Sequence[float] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    split: Sequence[float] | None = None
    grid_points: int = 200
    grid_points_3ue: int = 150
    trials: int = 10_000
    seed: int = 0
    mc_sides: Sequence[str] = ("SCBS",)
    mc_approx_tol: float | None = 0.1
    sweep_points: int = 20
    sweep_span: tuple[float, float] = (0.5, 1.5)
    reduction_draws: int = 200
    reduction_tol: float = 1e-12
    tol: Tolerances = TOLERANCES

    def mu_grid(self, K: int) -> list[np.ndarray]:
        return [weights_from_mu1(m, K, self.split) for m in self.mu1]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["mu1"] = list(self.mu1)
        d["split"] = None if self.split is None else list(self.split)
        d["mc_sides"] = list(self.mc_sides)
        d["sweep_span"] = list(self.sweep_span)
        return d


def _rel(x: float, ref: float) -> float:
    return abs(x - ref) / max(1.0, abs(ref))


def _label(mu) -> str:
    return "mu=(" + ",".join(f"{m:.4g}" for m in mu) + ")"


def two_ue_bound_terms(s: Scenario, Q) -> tuple[float, float, float, float, float]:
    """Two-UE region bounds written out term by term with scalar math."""
    M, N, al = s.M, s.N, s.alpha
    P1, P2 = s.P
    Q1, Q2 = (float(q) for q in Q)
    e1 = s.d_r[0] ** al / N
    e2 = s.d_r[1] ** al / N
    s1 = P1 * (M - N) / s.d_d[0] ** al
    s2 = P2 * (M - N) / s.d_d[1] ** al
    relay = N * math.log2(1.0 + s.P_r * (M - N) / (N * s.d_dr ** al))
    c1 = math.log2(1.0 + e1 / Q1)
    c2 = math.log2(1.0 + e2 / Q2)
    I1 = math.log2(1.0 + s1 + P1 / (e1 + Q1))
    I2 = math.log2(1.0 + s1) + relay - c1 - c2
    I3 = math.log2(1.0 + s2 + P2 / (e2 + Q2))
    I4 = math.log2(1.0 + s2) + relay - c1 - c2
    I5 = math.log2(1.0 + s1) + math.log2(1.0 + s2) + relay - c1 - c2
    return I1, I2, I3, I4, I5


class _Suite:
    def __init__(self, scenario: Scenario, cfg: SuiteConfig):
        self.s = scenario
        self.cfg = cfg
        self.tol = cfg.tol
        self.g = link_gains(scenario)
        self.checks: list[Check] = []
        self._alloc_cache: dict[tuple, object] = {}

    def add(self, name, target, reference, tolerance, passed, provenance, detail=""):
        self.checks.append(Check(name, float(target), float(reference), float(tolerance),
                                 bool(passed), provenance, detail))

    def guarded(self, name: str, provenance: str, fn: Callable[[], None]) -> None:
        try:
            fn()
        except Exception as exc:  # recorded, never raised
            last = traceback.format_exception_only(type(exc), exc)[-1].strip()
            self.add(name, math.nan, math.nan, math.nan, False, provenance, f"error: {last}")

    def alloc(self, mu):
        key = tuple(mu)
        if key not in self._alloc_cache:
            self._alloc_cache[key] = optimize_k_ue(self.g, mu, self.tol)
        return self._alloc_cache[key]

    # (a)
    def grid(self, mu):
        K = self.g.K
        pts = self.cfg.grid_points if K <= 2 else self.cfg.grid_points_3ue
        alloc = optimize_two_ue(self.g, mu, self.tol) if K == 2 else self.alloc(mu)
        closed = closed_form_value(self.g, mu, alloc)
        res = grid_oracle(self.g, mu, points_per_dim=pts)
        excess = res.value - closed
        self.add(f"grid.excess {_label(mu)}", res.value, closed, self.tol.grid_excess,
                 excess <= self.tol.grid_excess, "grid",
                 f"{pts} points per axis, grid best Q={res.Q.tolist()}")
        gap = (closed - res.value) / max(abs(closed), 1e-300)
        self.add(f"grid.gap {_label(mu)}", res.value, closed, self.tol.grid_rel,
                 gap <= self.tol.grid_rel, "grid", f"relative gap {gap!r}")

    # (b)
    def cross(self, mu):
        a = self.alloc(mu)
        b = waterfill_bisection(self.g, mu, self.tol)
        d = float(np.max(np.abs(a.log_lambda - b.log_lambda)))
        self.add(f"cross.bisection {_label(mu)}", d, 0.0, self.tol.cross_solver,
                 d <= self.tol.cross_solver, "cross-solver",
                 f"upsilon {a.upsilon} vs {b.upsilon}")
        kkt = kkt_residuals(self.g, mu, a)
        self.add(f"cross.kkt {_label(mu)}", kkt.max_residual, 0.0, self.tol.kkt,
                 kkt.ok(self.tol.kkt), "cross-solver")
        if self.g.K == 2:
            t = optimize_two_ue(self.g, mu, self.tol)
            d2 = float(np.max(np.abs(a.log_lambda - t.log_lambda)))
            self.add(f"cross.two_ue {_label(mu)}", d2, 0.0, self.tol.identity,
                     d2 <= self.tol.identity, "cross-solver")

    # (c)
    def identities(self, mu):
        a = self.alloc(mu)
        cs = qf_jd_constraints(self.g, a.Q)
        c = np.log1p(self.g.relay_noise / a.Q) / LN2
        resid = cs.I - self.g.direct - a.log_lambda / LN2 + c
        r = float(np.max(np.abs(resid) / np.maximum(1.0, np.abs(cs.I))))
        self.add(f"identity.per_ue {_label(mu)}", r, 0.0, self.tol.identity,
                 r <= self.tol.identity, "identity")
        budget = abs(float(a.log_lambda.sum()) - self.g.log_lambda_s) / self.g.log_lambda_s
        self.add(f"identity.budget {_label(mu)}", budget, 0.0, self.tol.identity,
                 budget <= self.tol.identity, "identity")
        JK = cs.J_subset(range(self.g.K))
        rs = _rel(float(cs.I.sum()), JK)
        self.add(f"identity.sum_cap {_label(mu)}", float(cs.I.sum()), JK, self.tol.identity,
                 rs <= self.tol.identity, "identity")

    # (d)
    def equivalence(self, mu):
        rep = equivalence_report(self.g, mu, self.alloc(mu), tol=self.tol.identity)
        self.add(f"wztd.value {_label(mu)}", rep.wztd_value, rep.jd_value, self.tol.identity,
                 rep.relative_gap <= self.tol.identity and bool(np.all(rep.feasible)), "identity",
                 f"beta={rep.phases.beta.tolist()}")
        ident = float(np.max(rep.rate_identity / np.maximum(1.0, rep.rb)))
        self.add(f"wztd.bin_rate {_label(mu)}", ident, 0.0, self.tol.identity,
                 ident <= self.tol.identity, "identity")
        slack = float(np.max(np.abs(rep.slack) / np.maximum(1.0, rep.rb)))
        self.add(f"wztd.phase_fit {_label(mu)}", slack, 0.0, self.tol.identity,
                 slack <= self.tol.identity, "identity")

    # (e)
    def montecarlo(self, side):
        mc = sample_zf_noise_gains(self.s, side, self.cfg.trials, self.cfg.seed)
        z = mc.z_scores()
        for k in range(self.g.K):
            self.add(f"montecarlo.{side}.mean ue{k + 1}", mc.mean[k], mc.exact[k],
                     self.tol.mc_sigmas * mc.stderr[k], abs(z[k]) <= self.tol.mc_sigmas,
                     "monte-carlo", f"z={float(z[k])!r}, stderr={float(mc.stderr[k])!r}, trials={mc.trials}")
            if self.cfg.mc_approx_tol is not None:
                r = abs(float(mc.mean[k] / mc.approx[k]) - 1.0)
                self.add(f"montecarlo.{side}.approx ue{k + 1}", mc.mean[k], mc.approx[k],
                         self.cfg.mc_approx_tol, r <= self.cfg.mc_approx_tol, "monte-carlo",
                         f"relative gap {r!r}")

    # (f)
    def refinement(self, k):
        lo, hi = self.cfg.sweep_span
        base = self.s.d_r[k]
        dists = np.linspace(lo * base, hi * base, self.cfg.sweep_points)
        mu = np.full(self.g.K, 1.0 / self.g.K)
        Qk = []
        for d in dists:
            d_r = list(self.s.d_r)
            d_r[k] = float(d)
            sk = dataclasses.replace(self.s, d_r=tuple(d_r))
            Qk.append(optimize_k_ue(link_gains(sk), mu, self.tol).Q[k])
        # Q_k must not grow as d_rk shrinks: Q(d_i) <= Q(d_{i+1})
        worst = 0.0
        for near, far in zip(Qk[:-1], Qk[1:]):
            if math.isinf(far):
                continue
            worst = max(worst, math.inf if math.isinf(near) else (near - far) / far)
        self.add(f"refinement.d_r ue{k + 1}", worst, 0.0, self.tol.identity,
                 worst <= self.tol.identity, "identity",
                 f"d_r from {dists[0]!r} to {dists[-1]!r}, {dists.size} points")

    # (g)
    def reduction(self):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.cfg.seed, spawn_key=(7,))))
        worst = 0.0
        worst_case = 0.0
        cases = 0
        for _ in range(self.cfg.reduction_draws):
            Q = 10.0 ** rng.uniform(-3, 3, size=2)
            m1 = rng.uniform()
            mu = np.array([m1, 1.0 - m1])
            cs = qf_jd_constraints(self.g, Q)
            ref = two_ue_bound_terms(self.s, Q)
            got = cs.two_ue_terms()
            worst = max(worst, max(_rel(x, r) for x, r in zip(got, ref)))
            if cs.xi >= 0 and np.all(cs.caps >= 0):
                lp = max_weighted_sum(cs, mu, method="lp").value
                worst_case = max(worst_case, _rel(lp, two_ue_case_value(cs, mu)))
                cases += 1
        tol = self.cfg.reduction_tol
        self.add("reduction.terms", worst, 0.0, tol, worst <= tol, "identity",
                 f"{self.cfg.reduction_draws} random (Q, mu)")
        self.add("reduction.four_case", worst_case, 0.0, self.tol.identity,
                 worst_case <= self.tol.identity, "identity", f"{cases} draws with xi >= 0")


def run_suite(scenario: Scenario, config: SuiteConfig | None = None) -> ValidationReport:
    """Run checks (grid, cross-solver, identities, WZTD equivalence, Monte
    Carlo, monotone refinement, two-UE reduction) in a fixed order.

    Grid checks run only for ``K <= 3``, the reduction check only for
    ``K == 2``. The report depends only on ``scenario`` and ``config``.
    """
    cfg = config or SuiteConfig()
    s = validate(scenario)
    suite = _Suite(s, cfg)
    mus = cfg.mu_grid(s.K)
    if s.K <= 3:
        for mu in mus:
            suite.guarded(f"grid {_label(mu)}", "grid", lambda mu=mu: suite.grid(mu))
    for mu in mus:
        suite.guarded(f"cross {_label(mu)}", "cross-solver", lambda mu=mu: suite.cross(mu))
    for mu in mus:
        suite.guarded(f"identity {_label(mu)}", "identity", lambda mu=mu: suite.identities(mu))
    for mu in mus:
        suite.guarded(f"wztd {_label(mu)}", "identity", lambda mu=mu: suite.equivalence(mu))
    for side in cfg.mc_sides:
        suite.guarded(f"montecarlo.{side}", "monte-carlo", lambda side=side: suite.montecarlo(side))
    for k in range(s.K):
        suite.guarded(f"refinement.d_r ue{k + 1}", "identity", lambda k=k: suite.refinement(k))
    if s.K == 2:
        suite.guarded("reduction", "identity", suite.reduction)
    return ValidationReport(scenario=scenario_to_dict(s), config=cfg.to_dict(), checks=suite.checks)
