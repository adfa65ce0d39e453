"""QF-JD and QF-WZTD rate constraints and weighted-sum-rate maximisation.

A quantization noise variance of ``numpy.inf`` means the UE is not relayed;
every formula below takes that limit explicitly.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .lp import simplex_max
from .scenario import LN2, LinkGains, Scenario, link_gains

__all__ = [
    "InfeasibleRegion",
    "RateConstraintSet",
    "RatePoint",
    "WztdRates",
    "SweepPoint",
    "as_gains",
    "check_weights",
    "weights_from_mu1",
    "quant_rates",
    "bin_rates",
    "qf_jd_constraints",
    "max_weighted_sum",
    "two_ue_case_value",
    "direct_point",
    "phase_capacity",
    "qf_wztd_rates",
    "boundary_sweep",
    "format_float",
    "write_sweep_csv",
    "write_region_csv",
    "CSV_VERSION",
]

CSV_VERSION = "qfrelay-sweep-v1"
LP_MAX_K = 16
LP_AUTO_K = 12


class InfeasibleRegion(ValueError):
    """Some rate bound is negative, so not even the origin is achievable."""


def as_gains(obj: Scenario | LinkGains) -> LinkGains:
    return obj if isinstance(obj, LinkGains) else link_gains(obj)


def _variances(Q, K: int) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (K,):
        raise ValueError(f"expected {K} quantization variances, got shape {Q.shape}")
    if np.any(np.isnan(Q)) or np.any(Q <= 0):
        raise ValueError("quantization variances must be > 0 (inf allowed)")
    return Q


def check_weights(mu, K: int, tol: float = 1e-9) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (K,):
        raise ValueError(f"expected {K} weights, got shape {mu.shape}")
    if not np.all(np.isfinite(mu)) or np.any(mu < 0) or np.any(mu > 1) or abs(mu.sum() - 1.0) > tol:
        raise ValueError(f"weights must lie in [0, 1] and sum to 1, got {mu.tolist()}")
    return mu


def weights_from_mu1(mu1: float, K: int, split: Sequence[float] | None = None) -> np.ndarray:
    """``(mu1, (1 - mu1) * split)``; ``split`` defaults to equal shares."""
    if K == 1:
        return np.array([1.0])
    split = np.full(K - 1, 1.0 / (K - 1)) if split is None else np.asarray(split, dtype=float)
    if split.shape != (K - 1,) or abs(split.sum() - 1.0) > 1e-12:
        raise ValueError("split needs K - 1 entries summing to 1")
    return np.concatenate([[mu1], (1.0 - mu1) * split])


def _c2(x):
    """C(x) = log2(1 + x)."""
    return np.log1p(x) / LN2


def quant_rates(gains: LinkGains, Q) -> np.ndarray:
    """Rates of the quantization indices, ``C((1 + b_k) d_rk^alpha / (N Q_k))``."""
    g = as_gains(gains)
    Q = _variances(Q, g.K)
    return _c2((1.0 + g.b) * g.relay_noise / Q)


def bin_rates(gains: LinkGains, Q) -> np.ndarray:
    """Rates of the Wyner-Ziv bin indices, ``C((d_rk^alpha/N + P_k/a_k) / Q_k)``."""
    g = as_gains(gains)
    Q = _variances(Q, g.K)
    return _c2((g.relay_noise + g.power / g.a) / Q)


@dataclass(frozen=True)
class RateConstraintSet:
    """Constraint data of the K-UE QF-JD region.

    Every subset bound follows from ``xi`` and the direct rates:
    ``J_Lambda = xi + sum_{k in Lambda} direct_k``.
    """

    I: np.ndarray
    xi: float
    direct: np.ndarray

    @property
    def K(self) -> int:
        return int(self.I.size)

    @property
    def J(self) -> np.ndarray:
        return self.direct + self.xi

    def J_subset(self, subset: Iterable[int]) -> float:
        return self.xi + float(sum(self.direct[k] for k in subset))

    @property
    def caps(self) -> np.ndarray:
        return np.minimum(self.I, self.J)

    def two_ue_terms(self) -> tuple[float, float, float, float, float]:
        """``(I1, I2, I3, I4, I5)`` of the two-UE region."""
        if self.K != 2:
            raise ValueError("two-UE terms need K == 2")
        d1, d2 = self.direct
        return (float(self.I[0]), float(d1 + self.xi), float(self.I[1]),
                float(d2 + self.xi), float(d1 + d2 + self.xi))


@dataclass(frozen=True)
class RatePoint:
    R: np.ndarray
    value: float
    mu: np.ndarray


def qf_jd_constraints(scenario: Scenario | LinkGains, Q) -> RateConstraintSet:
    """Per-UE caps ``I_k`` and the shared relay term ``xi`` for variances ``Q``."""
    g = as_gains(scenario)
    Q = _variances(Q, g.K)
    # log2(a + P/(e + Q)) split as direct + C(.) so Q = inf gives direct exactly
    I = g.direct + _c2(g.power / (g.a * (g.relay_noise + Q)))
    xi = g.log2_lambda_s - float(np.sum(_c2(g.relay_noise / Q)))
    return RateConstraintSet(I=I, xi=xi, direct=g.direct.copy())


def _greedy(cs: RateConstraintSet, mu: np.ndarray) -> np.ndarray:
    # R_k = direct_k + t_k with sum_{Lambda} t_k <= xi for every nonempty Lambda
    if cs.xi < 0:
        return cs.direct + cs.xi
    t = np.zeros(cs.K)
    budget = cs.xi
    room = cs.I - cs.direct
    for k in np.argsort(-mu, kind="stable"):
        t[k] = min(room[k], max(budget, 0.0))
        budget -= t[k]
    return cs.direct + t


def _lp(cs: RateConstraintSet, mu: np.ndarray) -> np.ndarray:
    K = cs.K
    rows, rhs = [], []
    for mask in range(1, 2**K):
        members = [k for k in range(K) if mask >> k & 1]
        row = np.zeros(K)
        row[members] = 1.0
        rows.append(row)
        rhs.append(cs.J_subset(members))
    rows.extend(np.eye(K))
    rhs.extend(cs.I)
    res = simplex_max(mu, np.array(rows), np.array(rhs))
    return res.x


def _lift(cs: RateConstraintSet, R: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Push an optimal point onto the Pareto boundary. Any remaining slack
    belongs to zero-weight UEs, so the weighted value is unchanged."""
    R = R.copy()
    K = cs.K
    for k in np.argsort(-mu, kind="stable"):
        room = cs.I[k] - R[k]
        for mask in range(1, 2**K):
            if mask >> k & 1:
                members = [j for j in range(K) if mask >> j & 1]
                room = min(room, cs.J_subset(members) - float(R[members].sum()))
        R[k] += max(room, 0.0)
    return R


def max_weighted_sum(constraints: RateConstraintSet, mu, method: str = "auto",
                     tol: float = 1e-12) -> RatePoint:
    """Maximise ``sum mu_k R_k`` over the QF-JD region.

    Parameters
    ----------
    method : {"auto", "lp", "greedy"}
        ``"lp"`` runs the dense simplex on all ``2^K - 1`` subset rows plus
        ``K`` per-UE caps (``K <= 16``), then takes up any slack left on
        zero-weight UEs so the point is Pareto-optimal. ``"greedy"`` uses the additive form
        of the subset bounds: with ``xi >= 0`` the excess over the direct
        rates is a fractional knapsack filled in decreasing weight order;
        with ``xi < 0`` every UE sits at ``J_k``. ``"auto"`` is ``"lp"`` up
        to ``K = 12``.

    Raises
    ------
    InfeasibleRegion
        If a per-UE bound ``min(I_k, J_k)`` is negative.
    """
    cs = constraints
    mu = check_weights(mu, cs.K)
    caps = cs.caps
    if np.any(caps < -tol):
        raise InfeasibleRegion(f"negative rate bound: {caps.tolist()}")
    if method == "auto":
        method = "lp" if cs.K <= LP_AUTO_K else "greedy"
    if method == "lp":
        if cs.K > LP_MAX_K:
            raise ValueError(f"exact LP limited to K <= {LP_MAX_K}")
        R = _lift(cs, _lp(cs, mu), mu)
    elif method == "greedy":
        R = _greedy(cs, mu)
    else:
        raise ValueError(f"unknown method {method!r}")
    R = np.maximum(R, 0.0)
    return RatePoint(R=R, value=float(mu @ R), mu=mu)


def two_ue_case_value(constraints: RateConstraintSet, mu) -> float:
    """Weighted sum from the four-case split of the two-UE region.

    For ``mu_1 >= mu_2`` the value is
    ``(mu_1 - mu_2) min(I1, I2) + mu_2 min(I1 + I3, I5)``; the roles swap
    otherwise. Valid when ``xi >= 0``, where ``I1 + I4 >= I5`` and
    ``I2 + I3 >= I5`` make the other two sum combinations redundant.
    """
    mu = check_weights(mu, 2)
    I1, I2, I3, I4, I5 = constraints.two_ue_terms()
    m1, m2 = mu
    if m1 < m2:
        I1, I2, I3, I4 = I3, I4, I1, I2
        m1, m2 = m2, m1
    cases = []
    if I1 <= I2 and I1 + I3 <= I5:
        cases.append(m1 * I1 + m2 * I3)
    if I1 > I2 and I1 + I3 > I5:
        cases.append((m1 - m2) * I2 + m2 * I5)
    if I1 > I2 and I1 + I3 <= I5:
        cases.append((m1 - m2) * I2 + m2 * (I1 + I3))
    if I1 <= I2 and I1 + I3 > I5:
        cases.append((m1 - m2) * I1 + m2 * I5)
    return max(cases)


def direct_point(gains: Scenario | LinkGains, mu) -> RatePoint:
    """Corner of the direct-transmission rectangle (no relay)."""
    g = as_gains(gains)
    mu = check_weights(mu, g.K)
    return RatePoint(R=g.direct.copy(), value=float(mu @ g.direct), mu=mu)


def phase_capacity(gains: LinkGains, beta, rho) -> np.ndarray:
    """Bits/cu the SCBS delivers in each TD phase,
    ``beta_k N C(rho_k (M - N) / (beta_k N d_dr^alpha))``; zero when
    ``beta_k = 0``."""
    g = gains
    beta = np.asarray(beta, dtype=float)
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(beta)
    on = beta > 0
    snr = g.relay_snr * rho[on] / (beta[on] * g.P_r)
    out[on] = beta[on] * g.N * np.log1p(snr) / LN2
    return out


@dataclass(frozen=True)
class WztdRates:
    """QF-WZTD per-UE caps with both sides of each relay-phase inequality."""

    I: np.ndarray
    rb: np.ndarray
    phase_capacity: np.ndarray
    feasible: np.ndarray

    @property
    def slack(self) -> np.ndarray:
        return self.phase_capacity - self.rb


def qf_wztd_rates(scenario: Scenario | LinkGains, Q, beta, rho,
                  tol: float = 1e-9) -> WztdRates:
    """Evaluate the QF-WZTD region for given phase durations and powers.

    ``beta`` must be a point of the simplex and ``rho`` must sum to ``P_r``
    (relative tolerance ``tol``). A zero-duration phase carries nothing, so
    only ``Q_k = inf`` is feasible there.
    """
    g = as_gains(scenario)
    Q = _variances(Q, g.K)
    beta = np.asarray(beta, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if beta.shape != (g.K,) or rho.shape != (g.K,):
        raise ValueError("beta and rho need one entry per UE")
    if np.any(beta < 0) or abs(beta.sum() - 1.0) > tol:
        raise ValueError(f"phase durations must be >= 0 and sum to 1, got {beta.tolist()}")
    if np.any(rho < 0) or abs(rho.sum() - g.P_r) > tol * g.P_r:
        raise ValueError(f"relay powers must be >= 0 and sum to P_r={g.P_r}")
    cs = qf_jd_constraints(g, Q)
    rb = bin_rates(g, Q)
    cap = phase_capacity(g, beta, rho)
    feasible = rb <= cap + tol * np.maximum(1.0, cap)
    return WztdRates(I=cs.I, rb=rb, phase_capacity=cap, feasible=feasible)


@dataclass(frozen=True)
class SweepPoint:
    mu: np.ndarray
    Q: np.ndarray
    point: RatePoint


def boundary_sweep(scenario: Scenario, mu_grid: Sequence[Sequence[float]],
                   solver=None) -> list[SweepPoint]:
    """Trace the region boundary: optimal variances, then the best rate point,
    for each weight vector."""
    if solver is None:
        from .quantopt import optimize_k_ue as solver
    g = link_gains(scenario)
    out = []
    for mu in mu_grid:
        mu = check_weights(mu, g.K)
        alloc = solver(scenario, mu)
        point = max_weighted_sum(qf_jd_constraints(g, alloc.Q), mu)
        out.append(SweepPoint(mu=mu, Q=alloc.Q, point=point))
    return out


def format_float(x: float) -> str:
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_sweep_csv(points: Sequence[SweepPoint], fh: IO[str], K: int,
                    scheme: str | None = None, write_header: bool = True) -> None:
    """One row per sweep point: mu_1..mu_K, Q_1..Q_K, R_1..R_K, value.

    A leading comment line carries the schema version; ``scheme`` adds a
    first column naming the transmission scheme.
    """
    w = csv.writer(fh, lineterminator="\n")
    cols = list(itertools.chain(
        (f"mu_{k + 1}" for k in range(K)),
        (f"Q_{k + 1}" for k in range(K)),
        (f"R_{k + 1}" for k in range(K)),
        ["value"],
    ))
    if write_header:
        fh.write(f"# {CSV_VERSION}\n")
        w.writerow((["scheme"] if scheme is not None else []) + cols)
    for p in points:
        row = [format_float(v) for v in itertools.chain(p.mu, p.Q, p.point.R)]
        row.append(format_float(p.point.value))
        w.writerow(([scheme] if scheme is not None else []) + row)


def write_region_csv(points: Sequence[SweepPoint], direct: np.ndarray, fh: IO[str]) -> None:
    """Boundary rows as in :func:`write_sweep_csv` followed by the
    direct-transmission rates and their weighted sum at the same weights."""
    K = direct.size
    w = csv.writer(fh, lineterminator="\n")
    fh.write(f"# {CSV_VERSION}\n")
    w.writerow(list(itertools.chain(
        (f"mu_{k + 1}" for k in range(K)),
        (f"Q_{k + 1}" for k in range(K)),
        (f"R_{k + 1}" for k in range(K)),
        ["value"],
        (f"direct_R_{k + 1}" for k in range(K)),
        ["direct_value"],
    )))
    for p in points:
        vals = itertools.chain(p.mu, p.Q, p.point.R, [p.point.value], direct, [float(p.mu @ direct)])
        w.writerow([format_float(v) for v in vals])
