"""Codebook-size and decoding-complexity counts for the QF schemes.

Counts are kept as log2 values and sums of powers of two go through
``numpy.logaddexp2``, so ``2^(nR)`` is never formed.

Schemes: ``jd`` (common codeword, joint decoding), ``wztd`` (binning plus
time division), ``wz`` (binning only) and ``td`` (time division only).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "SCHEMES",
    "ComplexityReport",
    "codebook_log2",
    "decoding_log2",
    "report",
    "table_rows",
    "render_table",
]

SCHEMES = ("jd", "wztd", "wz", "td")


def _log2sum(x) -> float:
    """log2(sum 2^x) over a flat list of exponents."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        return -math.inf
    return float(np.logaddexp2.reduce(x))


def _rates(n, R_q, R_b, R=None):
    if n < 0:
        raise ValueError("codeword length must be >= 0")
    R_q = np.asarray(R_q, dtype=float)
    R_b = np.asarray(R_b, dtype=float)
    if R_q.shape != R_b.shape:
        raise ValueError("R_q and R_b need one entry per UE")
    if np.any(R_q < 0) or np.any(R_b < 0):
        raise ValueError("rates must be >= 0")
    if np.any(R_b > R_q):
        raise ValueError("bin rate exceeds quantization rate")
    if R is not None:
        R = np.asarray(R, dtype=float)
        if R.shape != R_q.shape or np.any(R < 0):
            raise ValueError("message rates must be >= 0, one per UE")
    return R_q, R_b, R


def codebook_log2(scheme: str, n: float, R_q, R_b) -> float:
    """log2 of the number of SCBS codewords.

    jd: ``n sum R_q``; wztd: ``log2 sum_k 2^(n R_bk)``; wz: ``n sum R_b``;
    td: ``log2 sum_k 2^(n R_qk)``.
    """
    R_q, R_b, _ = _rates(n, R_q, R_b)
    if scheme == "jd":
        return float(n * R_q.sum())
    if scheme == "wztd":
        return _log2sum(n * R_b)
    if scheme == "wz":
        return float(n * R_b.sum())
    if scheme == "td":
        return _log2sum(n * R_q)
    raise ValueError(f"unknown scheme {scheme!r}")


def decoding_log2(scheme: str, n: float, R, R_q, R_b) -> float:
    """log2 of the number of likelihoods evaluated at the MCBS.

    jd decodes everything jointly, ``2^(n sum (R_k + R_qk))``. wztd decodes
    per UE: bin index, quantization index within the bin, then the message,
    ``sum_k (2^(n R_bk) + 2^(n (R_qk - R_bk)) + 2^(n R_k))``. wz decodes the
    bin indices jointly first, ``2^(n sum R_bk)``, then proceeds per UE like
    wztd. td decodes each quantization index directly, ``2^(n R_qk)``, then
    the message.
    """
    R_q, R_b, R = _rates(n, R_q, R_b, R)
    if R is None:
        raise ValueError("message rates required")
    if scheme == "jd":
        return float(n * (R.sum() + R_q.sum()))
    if scheme == "wztd":
        return _log2sum(np.concatenate([n * R_b, n * (R_q - R_b), n * R]))
    if scheme == "wz":
        return _log2sum(np.concatenate([[n * R_b.sum()], n * (R_q - R_b), n * R]))
    if scheme == "td":
        return _log2sum(np.concatenate([n * R_q, n * R]))
    raise ValueError(f"unknown scheme {scheme!r}")


_EXPR = {
    "jd": ("2^(n*sum(R_q))", "2^(n*sum(R + R_q))"),
    "wztd": ("sum_k 2^(n*R_b[k])", "sum_k (2^(n*R[k]) + 2^(n*(R_q[k]-R_b[k])) + 2^(n*R_b[k]))"),
    "wz": ("2^(n*sum(R_b))", "2^(n*sum(R_b)) + sum_k (2^(n*(R_q[k]-R_b[k])) + 2^(n*R[k]))"),
    "td": ("sum_k 2^(n*R_q[k])", "sum_k (2^(n*R_q[k]) + 2^(n*R[k]))"),
}


@dataclass(frozen=True)
class ComplexityReport:
    scheme: str
    n: float
    K: int
    log2_codebook: float
    log2_decoding: float
    codebook_expr: str
    decoding_expr: str


def report(scheme: str, n: float, R, R_q, R_b) -> ComplexityReport:
    cb, dec = _EXPR[scheme]
    return ComplexityReport(
        scheme=scheme, n=n, K=len(R_q),
        log2_codebook=codebook_log2(scheme, n, R_q, R_b),
        log2_decoding=decoding_log2(scheme, n, R, R_q, R_b),
        codebook_expr=cb, decoding_expr=dec,
    )


def table_rows(n: float = 100, Ks: Sequence[int] = (3, 5, 10), R: float = 1.5,
               R_q: float = 1.0, R_b: float = 0.5) -> list[dict]:
    """Codebook and decoding counts for equal per-UE rates, one row per
    ``(K, scheme)``, plus symbolic-K rows for wztd and jd."""
    rows = []
    for K in Ks:
        for scheme in ("wztd", "jd"):
            r = report(scheme, n, [R] * K, [R_q] * K, [R_b] * K)
            rows.append({
                "K": str(K), "scheme": scheme, "n": n,
                "log2_codebook": r.log2_codebook, "log2_decoding": r.log2_decoding,
            })
    rows.append({"K": "K", "scheme": "wztd", "n": n,
                 "log2_codebook": f"log2(K) + {R_b * n:g}",
                 "log2_decoding": f"log2(K) + log2(2^{R * n:g} + 2*2^{R_b * n:g})"})
    rows.append({"K": "K", "scheme": "jd", "n": n,
                 "log2_codebook": f"{R_q * n:g}*K",
                 "log2_decoding": f"{(R + R_q) * n:g}*K"})
    return rows


def render_table(rows: list[dict], fmt: str = "md") -> str:
    cols = ["K", "scheme", "n", "log2_codebook", "log2_decoding"]

    def cell(v):
        return repr(float(v)) if isinstance(v, (int, float)) and not isinstance(v, bool) else str(v)

    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([cell(r[c]) for c in cols])
        return buf.getvalue()
    if fmt == "md":
        lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
        for r in rows:
            lines.append("| " + " | ".join(cell(r[c]) for c in cols) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")
