"""Optimal quantization-noise variances at the SCBS.

The relay-link budget ``ln lambda_s`` is split into per-UE shares
``ln lambda_k >= 0``; a UE's variance follows from its share as

    Q_k = (d_rk^alpha/N) (a_k + b_k) / (a_k (lambda_k - 1)),

with ``Q_k = inf`` for a zero share. Shares minimise
``sum_k mu_k ln(a_k + b_k / lambda_k)`` on the budget manifold.

Two-UE problems have a closed form through a quadratic in ``lambda_1``;
the K-UE water-filling sorts UEs by the threshold
``omega_k = (a_k + b_k) / (mu_k b_k)`` and finds the water level as the
single positive root certified by a sign-change count. A bisection on the
KKT water level and an exhaustive grid serve as independent cross-checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .region import as_gains, check_weights, qf_jd_constraints, max_weighted_sum
from .scenario import LN2, LinkGains, Scenario

__all__ = [
    "Tolerances",
    "TOLERANCES",
    "QuantAllocation",
    "TwoUeQuadratic",
    "KktReport",
    "GridResult",
    "SolverError",
    "variances_from_shares",
    "two_ue_quadratic",
    "optimize_two_ue",
    "order_omegas",
    "find_upsilon",
    "descartes_certificate",
    "solve_xs",
    "optimize_k_ue",
    "waterfill_bisection",
    "kkt_residuals",
    "grid_oracle",
    "weighted_objective",
    "closed_form_value",
    "DescartesCertificate",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical constants shared by solvers and checks."""

    identity: float = 1e-9  # relative, exact identities
    cross_solver: float = 1e-8  # |delta ln lambda| between solvers
    kkt: float = 1e-8
    grid_rel: float = 1e-3  # grid-resolution value gap
    grid_excess: float = 1e-6  # grid may not beat the closed form by more
    mc_sigmas: float = 3.0
    snap: float = 1e-12  # ln lambda below this is an unrelayed UE
    root: float = 1e-12
    bisection: float = 1e-12
    max_iter: int = 200

    def override(self, **kw) -> "Tolerances":
        unknown = set(kw) - set(self.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown tolerance(s): {sorted(unknown)}")
        return replace(self, **kw)


TOLERANCES = Tolerances()


class SolverError(RuntimeError):
    pass


@dataclass
class QuantAllocation:
    """Split of the relay-link budget and the resulting variances.

    Attributes
    ----------
    log_lambda : ndarray
        Per-UE shares ``ln lambda_k`` in nats, original UE order.
    Q : ndarray
        Quantization variances; ``inf`` where the share is zero.
    upsilon : int
        Number of relayed UEs.
    x_s : float
        Root of the shifted water-level equation, ``water_level - omega_upsilon``.
    water_level : float
        ``1 / eta_s`` of the KKT system; UE k is relayed iff it exceeds omega_k.
    """

    log_lambda: np.ndarray
    Q: np.ndarray
    upsilon: int
    x_s: float
    water_level: float
    mu: np.ndarray
    log_lambda_s: float
    order: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    method: str = ""

    @property
    def relayed(self) -> np.ndarray:
        return self.log_lambda > 0


def variances_from_shares(gains: LinkGains, log_lambda, snap: float = TOLERANCES.snap) -> np.ndarray:
    """``Q_k`` from ``ln lambda_k`` in log form; ``expm1`` keeps shares near
    zero accurate and shares ``<= snap`` map to ``inf``."""
    g = gains
    ll = np.asarray(log_lambda, dtype=float)
    Q = np.full(g.K, np.inf)
    on = ll > snap
    num = np.log(g.relay_noise[on]) + np.log(g.a[on] + g.b[on])
    Q[on] = np.exp(num - np.log(g.a[on]) - np.log(np.expm1(ll[on])))
    return Q


def weighted_objective(gains: LinkGains, mu, log_lambda) -> float:
    """``sum_k mu_k ln(a_k + b_k exp(-ln lambda_k))``, the quantity minimised."""
    g = gains
    return float(np.sum(np.asarray(mu) * np.log(g.a + g.b * np.exp(-np.asarray(log_lambda)))))


def _finish(g: LinkGains, mu, log_lambda, upsilon, x_s, level, order, method, tol) -> QuantAllocation:
    ll = np.where(np.asarray(log_lambda) <= tol.snap, 0.0, log_lambda)
    return QuantAllocation(
        log_lambda=ll,
        Q=variances_from_shares(g, ll, tol.snap),
        upsilon=int(upsilon),
        x_s=float(x_s),
        water_level=float(level),
        mu=np.asarray(mu, dtype=float),
        log_lambda_s=g.log_lambda_s,
        order=np.asarray(order, dtype=int),
        method=method,
    )


def _level_from_share(g: LinkGains, mu, log_lambda) -> float:
    """Water level implied by a relayed UE: ``1/mu_k + a_k lambda_k / (mu_k b_k)``."""
    ll = np.asarray(log_lambda)
    on = np.flatnonzero((ll > 0) & (np.asarray(mu) > 0))
    if on.size == 0:
        return math.nan
    k = on[np.argmax(ll[on])]
    return 1.0 / mu[k] + g.a[k] * math.exp(ll[k]) / (mu[k] * g.b[k])


# -- two UEs ---------------------------------------------------------------


@dataclass(frozen=True)
class TwoUeQuadratic:
    """Coefficients of ``A l^2 - B l + C`` whose positive root is the
    stationary ``lambda_1``; ``log_lambda_o`` is its natural log."""

    A: float
    B: float
    C: float
    log_lambda_o: float


def two_ue_quadratic(gains: LinkGains, mu) -> TwoUeQuadratic:
    """Coefficients in the original units plus an overflow-free ``ln lambda_o``.

    With ``A = mu_2 P_2 e_1 a_1``, ``C = -c lambda_s`` and
    ``c = mu_1 P_1 e_2 a_2`` (``e_k = d_rk^alpha/N``) the root is
    ``sqrt(c lambda_s / A) * exp(asinh(B / (2 sqrt(A c lambda_s))))``,
    which is evaluated in logs. ``C`` itself is reported as ``-inf`` when
    ``lambda_s`` overflows.
    """
    g = gains
    m1, m2 = float(mu[0]), float(mu[1])
    P1, P2 = g.power
    e1, e2 = g.relay_noise
    a1, a2 = g.a
    s = g.log_lambda_s
    A = m2 * P2 * e1 * a1
    B = (m1 - m2) * P1 * P2
    c = m1 * P1 * e2 * a2
    C = -c * math.exp(s) if s < 700 else -math.inf
    disc = B * B - 4.0 * A * C
    if not disc >= 0:
        raise SolverError(f"negative discriminant {disc}")
    if A == 0.0:
        log_root = math.inf if B > 0 or c > 0 else 0.0
    elif c == 0.0:
        log_root = math.log(B / A) if B > 0 else -math.inf
    else:
        half = 0.5 * (math.log(c) + s - math.log(A))
        log_den = math.log(2.0) + 0.5 * (math.log(A) + math.log(c) + s)
        r = math.copysign(math.exp(min(math.log(abs(B)) - log_den, 709.0)), B) if B else 0.0
        log_root = half + math.asinh(r)
    return TwoUeQuadratic(A=A, B=B, C=C, log_lambda_o=log_root)


def optimize_two_ue(scenario: Scenario | LinkGains, mu, tol: Tolerances = TOLERANCES) -> QuantAllocation:
    """Closed-form optimum for two UEs.

    ``ln lambda_1 = min(max(ln lambda_o, 0), ln lambda_s)`` and
    ``lambda_2 = lambda_s / lambda_1``. For ``mu_1 < 0.5`` the UEs are
    swapped, solved and swapped back.
    """
    g = as_gains(scenario)
    if g.K != 2:
        raise ValueError("optimize_two_ue needs K == 2")
    mu = check_weights(mu, 2)
    s = g.log_lambda_s
    if mu[0] < 0.5:
        perm = np.array([1, 0])
        gs = _permute_gains(g, perm)
        quad = two_ue_quadratic(gs, mu[perm])
        l_first = min(max(quad.log_lambda_o, 0.0), s)
        ll = np.array([s - l_first, l_first])
    else:
        quad = two_ue_quadratic(g, mu)
        l_first = min(max(quad.log_lambda_o, 0.0), s)
        ll = np.array([l_first, s - l_first])
    ll = np.where(ll <= tol.snap, 0.0, ll)
    level = _level_from_share(g, mu, ll)
    omega = _omegas(g, mu)
    active = ll > 0
    upsilon = int(active.sum())
    order = np.argsort(omega, kind="stable")
    x_s = level - np.max(omega[active]) if upsilon else math.nan
    return _finish(g, mu, ll, upsilon, x_s, level, order, "closed-form", tol)


def _permute_gains(g: LinkGains, perm) -> LinkGains:
    return replace(g, a=g.a[perm], b=g.b[perm], direct=g.direct[perm],
                   relay_noise=g.relay_noise[perm], power=g.power[perm])


# -- K UEs -----------------------------------------------------------------


def _omegas(g: LinkGains, mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(mu > 0, (g.a + g.b) / np.where(mu > 0, mu * g.b, 1.0), np.inf)


def order_omegas(gains: Scenario | LinkGains, mu) -> tuple[np.ndarray, np.ndarray]:
    """Stable ascending sort of ``omega_k = (a_k + b_k) / (mu_k b_k)``.

    Returns ``(perm, omega[perm])``; zero-weight UEs get ``inf`` and land
    last, ties keep index order.
    """
    g = as_gains(gains)
    omega = _omegas(g, mu)
    perm = np.argsort(omega, kind="stable")
    return perm, omega[perm]


def _shares_at_level(g: LinkGains, mu, level: float, members) -> np.ndarray:
    # ln lambda_k(W) = ln(1 + mu_k b_k (W - omega_k) / a_k); zero at W = omega_k
    k = np.asarray(members, dtype=int)
    omega = _omegas(g, mu)[k]
    return np.log1p(mu[k] * g.b[k] * (level - omega) / g.a[k])


def _condition_lhs(g: LinkGains, mu, perm, upsilon: int) -> float:
    """``sum_{k <= v} ln(mu_k b_k/a_k (omega_v - 1/mu_k))``; compare with ``ln lambda_s``."""
    members = perm[:upsilon]
    level = _omegas(g, mu)[perm[upsilon - 1]]
    return float(np.sum(_shares_at_level(g, mu, level, members)))


def find_upsilon(gains: Scenario | LinkGains, mu) -> int:
    """Largest ``v`` with ``prod_{k<=v}(omega_v - 1/mu_k) <= lambda_s prod a_k/(mu_k b_k)``,
    checked in logs over ``v = K, ..., 1``."""
    g = as_gains(gains)
    mu = check_weights(mu, g.K)
    perm, omega = order_omegas(g, mu)
    n_pos = int(np.sum(np.isfinite(omega)))
    for v in range(n_pos, 0, -1):
        if _condition_lhs(g, mu, perm, v) <= g.log_lambda_s:
            return v
    raise SolverError("no admissible upsilon; lambda_s must exceed 1")


@dataclass(frozen=True)
class DescartesCertificate:
    """Constant term of the shifted polynomial at ``upsilon`` (and the next
    count), plus the coefficient sign changes.

    ``log_const`` holds ``sum ln(omega_v - 1/mu_k)`` and ``log_rhs``
    ``ln lambda_s + sum ln(a_k / (mu_k b_k))``; the constant term is
    ``exp(log_const) - exp(log_rhs)``.
    """

    upsilon: int
    log_const: float
    log_rhs: float
    sign_changes: int
    next_log_const: float | None
    next_log_rhs: float | None

    @property
    def holds(self) -> bool:
        nxt = self.next_log_const is None or self.next_log_const > self.next_log_rhs
        return self.log_const <= self.log_rhs and self.sign_changes <= 1 and nxt


def _shift_terms(g: LinkGains, mu, perm, v: int):
    members = perm[:v]
    omega = _omegas(g, mu)
    shift = omega[perm[v - 1]] - 1.0 / mu[members]
    log_rhs = g.log_lambda_s + float(np.sum(np.log(g.a[members] / (mu[members] * g.b[members]))))
    return shift, log_rhs


def descartes_certificate(gains: Scenario | LinkGains, mu, upsilon: int | None = None) -> DescartesCertificate:
    """Evidence that the shifted polynomial
    ``prod_{k<=v}(x + omega_v - 1/mu_k) - lambda_s prod a_k/(mu_k b_k)`` has
    exactly one positive root at ``v = upsilon`` and none for ``v + 1``.

    Coefficients are built after dividing by ``exp(log_rhs)`` so large
    ``lambda_s`` does not overflow.
    """
    g = as_gains(gains)
    mu = check_weights(mu, g.K)
    if upsilon is None:
        upsilon = find_upsilon(g, mu)
    perm, omega = order_omegas(g, mu)
    shift, log_rhs = _shift_terms(g, mu, perm, upsilon)
    scale = log_rhs / upsilon
    coeffs = np.poly(-shift * math.exp(-scale))  # monic, roots at -shift/e^scale
    coeffs[-1] -= 1.0
    signs = np.sign(coeffs[coeffs != 0])
    changes = int(np.sum(signs[1:] != signs[:-1]))
    nxt_c = nxt_r = None
    if upsilon < g.K and np.isfinite(omega[upsilon]):
        s2, r2 = _shift_terms(g, mu, perm, upsilon + 1)
        nxt_c, nxt_r = float(np.sum(np.log(s2))), r2
    return DescartesCertificate(
        upsilon=upsilon,
        log_const=float(np.sum(np.log(shift))),
        log_rhs=log_rhs,
        sign_changes=changes,
        next_log_const=nxt_c,
        next_log_rhs=nxt_r,
    )


def solve_xs(gains: Scenario | LinkGains, mu, upsilon: int, tol: Tolerances = TOLERANCES) -> float:
    """Unique ``x_s >= 0`` with
    ``sum_{k<=v} ln(x_s + omega_v - 1/mu_k) = ln lambda_s + sum ln(a_k/(mu_k b_k))``.

    The left side is increasing and concave in ``x_s``. The solve runs on
    ``u = ln x_s``, where it is increasing and convex, with a bracket from
    the single-term bound ``x_s <= exp(rhs / v)`` and Newton steps that fall
    back to bisection when they leave the bracket.
    """
    g = as_gains(gains)
    mu = check_weights(mu, g.K)
    perm, _ = order_omegas(g, mu)
    shift, rhs = _shift_terms(g, mu, perm, upsilon)
    if np.any(shift <= 0):
        raise SolverError("shifted thresholds must be positive")
    log_shift = np.log(shift)
    ftol = tol.root * max(1.0, abs(g.log_lambda_s))

    if float(np.sum(log_shift)) - rhs >= 0.0:
        return 0.0  # condition holds with equality: level sits on omega_v

    def F(u):
        # ln(e^u + c) = logaddexp(u, ln c)
        terms = np.logaddexp(u, log_shift)
        slope = np.sum(np.exp(u - terms))
        return float(np.sum(terms)) - rhs, float(slope)

    hi = rhs / upsilon
    lo = hi - 1.0
    while F(lo)[0] > 0:
        lo = hi - 2.0 * (hi - lo)
        if lo < -745.0:
            return 0.0
    u = hi
    for _ in range(tol.max_iter):
        f, df = F(u)
        if abs(f) <= ftol:
            return math.exp(u)
        if f > 0:
            hi = u
        else:
            lo = u
        step = u - f / df if df > 0 else math.nan
        u = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(u)):
            return math.exp(u)
    raise SolverError("water-level root did not converge")


def optimize_k_ue(scenario: Scenario | LinkGains, mu, tol: Tolerances = TOLERANCES) -> QuantAllocation:
    """Water-filling optimum for any K.

    Relayed UEs (the first ``upsilon*`` in omega order) get
    ``lambda_k = mu_k b_k/a_k (x_s + omega_v - 1/mu_k)``; the rest get
    ``lambda_k = 1`` and ``Q_k = inf``.
    """
    g = as_gains(scenario)
    mu = check_weights(mu, g.K)
    perm, omega = order_omegas(g, mu)
    v = find_upsilon(g, mu)
    x_s = solve_xs(g, mu, v, tol)
    level = x_s + omega[v - 1]
    ll = np.zeros(g.K)
    members = perm[:v]
    # ln(mu b/a (x_s + omega_v - 1/mu)) written as log1p about omega_k
    ll[members] = np.log1p(mu[members] * g.b[members] * (x_s + (omega[v - 1] - omega[:v])) / g.a[members])
    if v == 1:
        ll[members] = g.log_lambda_s  # a lone relayed UE takes the whole budget
    return _finish(g, mu, ll, v, x_s, level, perm, "water-filling", tol)


def waterfill_bisection(scenario: Scenario | LinkGains, mu, tol: Tolerances = TOLERANCES) -> QuantAllocation:
    """Reference solver: bisection on the KKT water level ``x = 1/eta_s``.

    Each share is ``delta_k(x) = max(0, ln(mu_k b_k/a_k (x - 1/mu_k)))``, so
    ``sum_k delta_k(x)`` is continuous and nondecreasing; the level is
    bisected until the sum meets ``ln lambda_s`` to ``tol.bisection`` or the
    bracket reaches machine resolution.
    """
    g = as_gains(scenario)
    mu = check_weights(mu, g.K)
    pos = np.flatnonzero(mu > 0)
    omega = _omegas(g, mu)
    target = g.log_lambda_s

    def shares(x):
        d = np.zeros(g.K)
        with np.errstate(invalid="ignore", divide="ignore"):
            inner = mu[pos] * g.b[pos] / g.a[pos] * (x - 1.0 / mu[pos])
            d[pos] = np.where(x > omega[pos], np.log(np.maximum(inner, 1.0)), 0.0)
        return d

    lo = float(np.min(omega[pos]))
    # one UE alone absorbs the whole budget at this level
    k0 = pos[np.argmin(omega[pos])]
    hi = 1.0 / mu[k0] + g.a[k0] / (mu[k0] * g.b[k0]) * math.exp(target)
    for _ in range(10_000):
        mid = 0.5 * (lo + hi)
        d = shares(mid)
        gap = float(d.sum()) - target
        if abs(gap) <= tol.bisection * max(1.0, target) or mid in (lo, hi):
            break
        if gap > 0:
            hi = mid
        else:
            lo = mid
    ll = shares(mid)
    active = ll > tol.snap
    v = int(active.sum())
    x_s = mid - float(np.max(omega[active])) if v else math.nan
    return _finish(g, mu, ll, v, x_s, mid, np.argsort(omega, kind="stable"), "bisection", tol)


# -- optimality checks -----------------------------------------------------


@dataclass(frozen=True)
class KktReport:
    """KKT residuals of the share problem at an allocation.

    ``eta_s = 1 / water_level``; ``eta_k`` is zero for relayed UEs and
    ``eta_s - mu_k b_k / (a_k + b_k)`` otherwise. Stationarity is reported
    relative to ``eta_s`` and the primal residual relative to
    ``max(1, ln lambda_s)``.
    """

    eta_s: float
    eta: np.ndarray
    stationarity: np.ndarray
    dual_feasibility: np.ndarray
    slackness: np.ndarray
    primal: float

    @property
    def max_residual(self) -> float:
        return float(max(self.stationarity.max(initial=0.0), self.dual_feasibility.max(initial=0.0),
                         self.slackness.max(initial=0.0), self.primal))

    def ok(self, tol: float = TOLERANCES.kkt) -> bool:
        return self.max_residual <= tol


def kkt_residuals(gains: Scenario | LinkGains, mu, alloc: QuantAllocation) -> KktReport:
    g = as_gains(gains)
    mu = np.asarray(mu, dtype=float)
    ll = np.asarray(alloc.log_lambda, dtype=float)
    if not np.all(np.isfinite(ll)):
        raise ValueError("allocation shares must be finite")
    level = alloc.water_level
    if not np.isfinite(level):
        level = _level_from_share(g, mu, ll)
    eta_s = 1.0 / level
    grad = mu * g.b / (g.a * np.exp(ll) + g.b)
    active = ll > 0
    eta = np.where(active, 0.0, eta_s - grad)
    stationarity = np.abs(grad + eta - eta_s) / eta_s
    dual = np.maximum(-eta, 0.0) / eta_s
    slack = np.abs(eta * ll)
    primal = abs(float(ll.sum()) - g.log_lambda_s) / max(1.0, g.log_lambda_s)
    return KktReport(eta_s=eta_s, eta=eta, stationarity=stationarity,
                     dual_feasibility=dual, slackness=slack, primal=primal)


@dataclass(frozen=True)
class GridResult:
    Q: np.ndarray
    value: float
    grid: np.ndarray
    feasible: int
    backend: str


def grid_oracle(scenario: Scenario | LinkGains, mu, points_per_dim: int = 200,
                q_min: float = 1e-4, q_max: float = 1e4, include_inf: bool = True,
                max_points: int = 50_000_000, backend: str | None = None) -> GridResult:
    """Exhaustive search over a log-spaced variance grid (plus ``inf``).

    Each point is scored by the region LP in its additive form; the kernel
    backend (compiled or numpy) only changes speed. Intended for ``K <= 3``.
    """
    g = as_gains(scenario)
    mu = check_weights(mu, g.K)
    if g.K > 3:
        raise ValueError("grid oracle is exhaustive; K <= 3 only")
    # scanned from coarse to fine so ties go to the lighter relay load
    grid = np.logspace(math.log10(q_max), math.log10(q_min), points_per_dim)
    if include_inf:
        grid = np.concatenate([[np.inf], grid])
    total = grid.size**g.K
    if total > max_points:
        raise ValueError(f"grid too large: {total} points > budget {max_points}")
    e = g.relay_noise[:, None]
    gain = np.log2(g.a[:, None] + g.power[:, None] / (e + grid[None, :])) - g.direct[:, None]
    qcost = np.log1p(e / grid[None, :]) / LN2
    order = np.argsort(-mu, kind="stable").astype(np.int64)
    impl = kernels.get_backend(backend)
    value, flat, feasible = impl.grid_search(
        np.ascontiguousarray(gain), np.ascontiguousarray(qcost),
        np.ascontiguousarray(g.direct), np.ascontiguousarray(mu), order, g.log2_lambda_s)
    if flat < 0:
        raise SolverError("no feasible grid point")
    idx = np.unravel_index(flat, (grid.size,) * g.K)
    Q = grid[list(idx)]
    return GridResult(Q=Q, value=float(value), grid=grid, feasible=int(feasible),
                      backend=backend or kernels.BACKEND)


def closed_form_value(scenario: Scenario | LinkGains, mu, alloc: QuantAllocation | None = None) -> float:
    """Weighted sum rate achieved by an allocation (default: the optimum)."""
    g = as_gains(scenario)
    if alloc is None:
        alloc = optimize_k_ue(g, mu)
    return max_weighted_sum(qf_jd_constraints(g, alloc.Q), mu).value
