"""Network geometry, derived link constants and ZF noise-gain Monte Carlo.

All powers are linear and normalised to unit receiver noise, so a power is
also an SNR. Rates are in bits per channel use; the relay-link budget
``log_lambda_s`` is kept in nats and never exponentiated.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "ScenarioError",
    "Scenario",
    "LinkGains",
    "MonteCarloResult",
    "validate",
    "link_gains",
    "set_snr",
    "snr_of",
    "scenario_from_dict",
    "scenario_to_dict",
    "load_scenario",
    "reference_two_ue",
    "reference_three_ue",
    "sample_zf_noise_gains",
]

LN2 = math.log(2.0)


class ScenarioError(ValueError):
    """Raised for scenarios that violate the model's invariants."""


@dataclass(frozen=True)
class Scenario:
    """Uplink HetNet: ``K`` single-antenna UEs, an ``N``-antenna SCBS relay
    and an ``M``-antenna MCBS destination.

    Distances are in meters. ``P`` holds per-UE transmit powers and ``P_r``
    the SCBS power, both relative to unit noise.
    """

    K: int
    M: int
    N: int
    alpha: float
    d_d: tuple[float, ...]
    d_r: tuple[float, ...]
    d_dr: float
    P: tuple[float, ...]
    P_r: float

    def __post_init__(self):
        object.__setattr__(self, "d_d", tuple(float(x) for x in self.d_d))
        object.__setattr__(self, "d_r", tuple(float(x) for x in self.d_r))
        object.__setattr__(self, "P", tuple(float(x) for x in self.P))


@dataclass(frozen=True)
class LinkGains:
    """Per-UE constants derived from a scenario.

    Attributes
    ----------
    a : ndarray
        ``1 + P_k (M - N) / d_dk^alpha``, the direct-link SNR plus one.
    b : ndarray
        ``P_k N / d_rk^alpha``, the UE-to-SCBS SNR after ZF.
    direct : ndarray
        ``log2(a_k)``, the direct-transmission rate in bits/cu.
    log_lambda_s : float
        Relay-link budget ``N ln(1 + P_r (M - N) / (N d_dr^alpha))`` in nats.
    relay_noise : ndarray
        Effective ZF noise power at the SCBS, ``d_rk^alpha / N``.
    power : ndarray
        UE transmit powers.
    relay_snr : float
        Per-antenna SCBS-to-MCBS SNR ``P_r (M - N) / (N d_dr^alpha)``.
    P_r : float
        SCBS transmit power.
    N : int
        SCBS antenna count.
    """

    a: np.ndarray
    b: np.ndarray
    direct: np.ndarray
    log_lambda_s: float
    relay_noise: np.ndarray
    power: np.ndarray
    relay_snr: float
    P_r: float
    N: int

    @property
    def K(self) -> int:
        return int(self.a.size)

    @property
    def log2_lambda_s(self) -> float:
        return self.log_lambda_s / LN2


@dataclass(frozen=True)
class MonteCarloResult:
    """Empirical mean of the ZF noise gains ``[(G^H G)^{-1}]_kk``."""

    side: str
    trials: int
    seed: int
    mean: np.ndarray
    stderr: np.ndarray
    exact: np.ndarray
    approx: np.ndarray
    singular: int = 0
    distances: np.ndarray = field(default_factory=lambda: np.empty(0))

    def z_scores(self) -> np.ndarray:
        return (self.mean - self.exact) / self.stderr

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "trials": self.trials,
            "seed": self.seed,
            "mean": self.mean.tolist(),
            "stderr": self.stderr.tolist(),
            "exact": self.exact.tolist(),
            "approx": self.approx.tolist(),
            "z": self.z_scores().tolist(),
            "approx_ratio": (self.mean / self.approx).tolist(),
            "singular": self.singular,
        }


def validate(scenario: Scenario) -> Scenario:
    """Return ``scenario`` unchanged if every invariant holds.

    Raises
    ------
    ScenarioError
        On length mismatch, non-positive parameters or ``M > N > K`` failing.
    """
    s = scenario
    if int(s.K) != s.K or s.K < 1:
        raise ScenarioError(f"K must be a positive integer, got {s.K!r}")
    for name in ("d_d", "d_r", "P"):
        n = len(getattr(s, name))
        if n != s.K:
            raise ScenarioError(f"dimension mismatch: {name} has {n} entries, K={s.K}")
    if not (s.M > s.N > s.K):
        raise ScenarioError(f"antenna ordering M > N > K violated (M={s.M}, N={s.N}, K={s.K})")
    if not (math.isfinite(s.alpha) and s.alpha > 0):
        raise ScenarioError(f"non-positive parameter: alpha={s.alpha}")
    values = [("d_dr", s.d_dr), ("P_r", s.P_r)]
    values += [(f"d_d[{k}]", v) for k, v in enumerate(s.d_d)]
    values += [(f"d_r[{k}]", v) for k, v in enumerate(s.d_r)]
    values += [(f"P[{k}]", v) for k, v in enumerate(s.P)]
    for name, v in values:
        if not (math.isfinite(v) and v > 0):
            raise ScenarioError(f"non-positive parameter: {name}={v}")
    return scenario


def link_gains(scenario: Scenario) -> LinkGains:
    s = validate(scenario)
    P = np.asarray(s.P, dtype=float)
    dd = np.asarray(s.d_d, dtype=float) ** s.alpha
    dr = np.asarray(s.d_r, dtype=float) ** s.alpha
    snr_d = P * (s.M - s.N) / dd
    relay_snr = s.P_r * (s.M - s.N) / (s.N * s.d_dr**s.alpha)
    return LinkGains(
        a=1.0 + snr_d,
        b=P * s.N / dr,
        direct=np.log1p(snr_d) / LN2,
        log_lambda_s=s.N * math.log1p(relay_snr),
        relay_noise=dr / s.N,
        power=P,
        relay_snr=relay_snr,
        P_r=s.P_r,
        N=s.N,
    )


def snr_of(scenario: Scenario) -> float:
    """Received MCBS SNR of UE 1 in dB."""
    s = scenario
    return 10.0 * math.log10(s.P[0] * (s.M - s.N) / s.d_d[0] ** s.alpha)


def set_snr(scenario: Scenario, snr_db: float) -> Scenario:
    """Rescale every power (UEs and SCBS) by one factor so UE 1's MCBS SNR
    equals ``snr_db``; power ratios are preserved."""
    s = validate(scenario)
    target = 10.0 ** (snr_db / 10.0) * s.d_d[0] ** s.alpha / (s.M - s.N)
    factor = target / s.P[0]
    return replace(s, P=tuple(p * factor for p in s.P), P_r=s.P_r * factor)


def scenario_from_dict(data: dict) -> Scenario:
    """Build a scenario from its JSON form.

    ``P`` is either a list of powers (``P_r`` then required) or
    ``{"snr_db": x, "pr_ratio": r}``, meaning equal UE powers set by the SNR
    convention and ``P_r = r * P``.
    """
    try:
        K = data["K"]
        base = dict(
            K=K,
            M=data["M"],
            N=data["N"],
            alpha=float(data["alpha"]),
            d_d=tuple(data["d_d"]),
            d_r=tuple(data["d_r"]),
            d_dr=float(data["d_dr"]),
        )
        power = data["P"]
    except KeyError as exc:
        raise ScenarioError(f"missing scenario field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from None
    for key in ("K", "M", "N"):
        if not isinstance(base[key], int) or isinstance(base[key], bool):
            raise ScenarioError(f"{key} must be an integer")
    if isinstance(power, dict):
        try:
            snr_db = float(power["snr_db"])
            ratio = float(power.get("pr_ratio", 5.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed power spec: {exc}") from None
        s = Scenario(P=(1.0,) * K, P_r=ratio, **base)
        return set_snr(validate(s), snr_db)
    if "P_r" not in data:
        raise ScenarioError("P_r is required when P is an explicit list")
    try:
        s = Scenario(P=tuple(power), P_r=float(data["P_r"]), **base)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from None
    return validate(s)


def scenario_to_dict(scenario: Scenario) -> dict:
    s = scenario
    return {
        "K": s.K,
        "M": s.M,
        "N": s.N,
        "alpha": s.alpha,
        "d_d": list(s.d_d),
        "d_r": list(s.d_r),
        "d_dr": s.d_dr,
        "P": list(s.P),
        "P_r": s.P_r,
    }


def load_scenario(path: str | Path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: top-level JSON value must be an object")
    return scenario_from_dict(data)


# No far distances are fixed for the two-UE setting; (75, 80) puts both UEs
# near the MCBS-side edge of the small cell.
_DISTANCE_SETS = {"near": (25.0, 30.0), "far": (75.0, 80.0)}


def reference_two_ue(d_r: str | Sequence[float] = "near", snr_db: float = 1.0,
                 pr_ratio: float = 5.0) -> Scenario:
    """Two-UE numerical-results setup: M=500, N=50, alpha=2.7,
    d_d=(105, 110), d_dr=100, equal UE powers, P_r = 5P."""
    if isinstance(d_r, str):
        d_r = _DISTANCE_SETS[d_r]
    return scenario_from_dict({
        "K": 2, "M": 500, "N": 50, "alpha": 2.7,
        "d_d": [105.0, 110.0], "d_r": list(d_r), "d_dr": 100.0,
        "P": {"snr_db": snr_db, "pr_ratio": pr_ratio},
    })


def reference_three_ue(snr_db: float = 1.0, pr_ratio: float = 5.0) -> Scenario:
    """Three-UE setup: d_d=(105, 110, 120), d_r=(30, 40, 50), d_dr=100."""
    return scenario_from_dict({
        "K": 3, "M": 500, "N": 50, "alpha": 2.7,
        "d_d": [105.0, 110.0, 120.0], "d_r": [30.0, 40.0, 50.0], "d_dr": 100.0,
        "P": {"snr_db": snr_db, "pr_ratio": pr_ratio},
    })


_BLOCK = 500  # trials per RNG block; fixes the stream layout independently of workers
_MAX_ELEMENTS = 2_000_000


def _block_gains(rows: int, scale: np.ndarray, count: int, seed: int, block: int):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))
    cols = scale.size
    out = np.empty((count, cols))
    singular = 0
    filled = 0
    # sub-batches only bound memory: sequential draws give the same stream
    batch = max(1, _MAX_ELEMENTS // (rows * cols * 2))
    while filled < count:
        need = min(count - filled, batch)
        z = rng.standard_normal((need, rows, cols, 2))
        G = (z[..., 0] + 1j * z[..., 1]) * (scale / math.sqrt(2.0))
        gram = np.conj(np.swapaxes(G, 1, 2)) @ G
        try:
            inv = np.linalg.inv(gram)
        except np.linalg.LinAlgError:
            inv = np.full_like(gram, np.nan)
            for i in range(need):
                try:
                    inv[i] = np.linalg.inv(gram[i])
                except np.linalg.LinAlgError:
                    pass
        diag = np.real(np.diagonal(inv, axis1=1, axis2=2))
        ok = np.all(np.isfinite(diag) & (diag > 0), axis=1)
        singular += int(need - ok.sum())
        good = diag[ok]
        out[filled:filled + good.shape[0]] = good
        filled += good.shape[0]
    return out, singular


def sample_zf_noise_gains(scenario: Scenario, side: str = "SCBS", trials: int = 10_000,
                          seed: int = 0, workers: int = 1) -> MonteCarloResult:
    """Monte Carlo estimate of the per-stream ZF noise gain.

    For ``side="SCBS"`` the channel is ``N x K`` with column ``k`` drawn
    i.i.d. CN(0, d_rk^-alpha). For ``side="MCBS"`` it is ``M x (K+N)``
    with the UE columns scaled by ``d_dk^-alpha`` and the N relay columns by
    ``d_dr^-alpha``; only the K UE streams are reported.

    The exact reference is the complex inverse-Wishart mean
    ``d^alpha / (rows - cols)``; ``approx`` is the large-array value
    ``d^alpha / N`` (SCBS) or ``d^alpha / (M - N)`` (MCBS) used in the rate
    formulas. Trials are drawn in fixed blocks of 500 with per-block seeds,
    so the result does not depend on ``workers``.
    """
    s = validate(scenario)
    if trials < 100:
        raise ValueError("trials must be at least 100")
    side = side.upper()
    if side == "SCBS":
        rows = s.N
        dist = np.asarray(s.d_r)
        var = dist ** (-s.alpha)
        approx_div = s.N
    elif side == "MCBS":
        rows = s.M
        dist = np.asarray(s.d_d)
        var = np.concatenate([dist ** (-s.alpha), np.full(s.N, s.d_dr ** (-s.alpha))])
        approx_div = s.M - s.N
    else:
        raise ValueError(f"side must be 'SCBS' or 'MCBS', got {side!r}")
    scale = np.sqrt(var)
    cols = var.size
    counts = [min(_BLOCK, trials - start) for start in range(0, trials, _BLOCK)]

    def run(block):
        return _block_gains(rows, scale, counts[block], seed, block)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(len(counts))))
    else:
        results = [run(b) for b in range(len(counts))]
    samples = np.concatenate([r[0] for r in results])[:, : s.K]
    singular = sum(r[1] for r in results)
    d_alpha = dist**s.alpha
    return MonteCarloResult(
        side=side,
        trials=trials,
        seed=seed,
        mean=samples.mean(axis=0),
        stderr=samples.std(axis=0, ddof=1) / math.sqrt(trials),
        exact=d_alpha / (rows - cols),
        approx=d_alpha / approx_div,
        singular=singular,
        distances=dist,
    )
