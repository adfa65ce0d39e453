import math

import pytest

from qfrelay.complexity import (SCHEMES, codebook_log2, decoding_log2, render_table, report,
                                table_rows)

NS = (1, 10, 100)


@pytest.mark.parametrize("n", NS)
def test_two_ue_codebook(n):
    assert codebook_log2("wztd", n, [1, 1], [0.5, 0.5]) == pytest.approx(1 + 0.5 * n, rel=1e-15)
    assert codebook_log2("jd", n, [1, 1], [0.5, 0.5]) == 2 * n
    assert codebook_log2("wz", n, [1, 1], [0.5, 0.5]) == n
    assert codebook_log2("td", n, [1, 1], [0.5, 0.5]) == pytest.approx(1 + n, rel=1e-15)


@pytest.mark.parametrize("n", NS)
def test_ten_ue_codebook(n):
    assert codebook_log2("wztd", n, [1] * 10, [0.5] * 10) == pytest.approx(math.log2(10) + 0.5 * n, rel=1e-15)
    assert codebook_log2("jd", n, [1] * 10, [0.5] * 10) == 10 * n


def _wztd_decoding_ref(K, n):
    # log2(K (2^{1.5n} + 2 * 2^{0.5n})) without forming 2^{1.5n}
    return math.log2(K) + 1.5 * n + math.log2(1 + 2 * 2.0 ** (-n))


@pytest.mark.parametrize("n", NS)
@pytest.mark.parametrize("K", [2, 3, 5, 10])
def test_decoding(K, n):
    R, Rq, Rb = [1.5] * K, [1.0] * K, [0.5] * K
    assert decoding_log2("wztd", n, R, Rq, Rb) == pytest.approx(_wztd_decoding_ref(K, n), rel=1e-14)
    assert decoding_log2("jd", n, R, Rq, Rb) == pytest.approx(2.5 * n * K, rel=1e-15)


def test_two_ue_worked_example():
    n = 10
    ref = math.log2(2 * (2 ** (1.5 * n) + 2 * 2 ** (0.5 * n)))
    assert decoding_log2("wztd", n, [1.5, 1.5], [1, 1], [0.5, 0.5]) == pytest.approx(ref, rel=1e-15)
    assert decoding_log2("jd", n, [1.5, 1.5], [1, 1], [0.5, 0.5]) == 5 * n


def test_zero_length():
    for K in (1, 3, 7):
        assert codebook_log2("wztd", 0, [1] * K, [0.5] * K) == pytest.approx(math.log2(K), abs=1e-15)
        assert codebook_log2("jd", 0, [1] * K, [0.5] * K) == 0.0
        assert codebook_log2("td", 0, [1] * K, [0.5] * K) == pytest.approx(math.log2(K), abs=1e-15)
        assert codebook_log2("wz", 0, [1] * K, [0.5] * K) == 0.0


def test_huge_length_no_overflow():
    v = decoding_log2("wztd", 1e6, [1.5] * 4, [1.0] * 4, [0.5] * 4)
    assert v == pytest.approx(2 + 1.5e6, rel=1e-15)


def test_wz_first_step_dominates():
    for n in (2, 10, 100):
        assert decoding_log2("wz", n, [1.5, 1.5], [1, 1], [0.5, 0.5]) >= \
            decoding_log2("wztd", n, [1.5, 1.5], [1, 1], [0.5, 0.5])


@pytest.mark.parametrize("bad", [
    dict(n=-1, R_q=[1], R_b=[0.5]),
    dict(n=1, R_q=[1], R_b=[1.5]),
    dict(n=1, R_q=[-1], R_b=[-2]),
    dict(n=1, R_q=[1, 1], R_b=[0.5]),
])
def test_invalid_inputs(bad):
    with pytest.raises(ValueError):
        codebook_log2("wztd", **bad)


def test_unknown_scheme():
    with pytest.raises(ValueError):
        codebook_log2("df", 1, [1], [0.5])
    with pytest.raises(ValueError):
        decoding_log2("df", 1, [1], [1], [0.5])
    with pytest.raises(ValueError, match="message rates"):
        decoding_log2("jd", 1, [1, 1], [1], [0.5])


def test_report_and_table():
    r = report("wztd", 100, [1.5] * 3, [1] * 3, [0.5] * 3)
    assert r.K == 3 and "2^(n*R_b[k])" in r.codebook_expr
    rows = table_rows()
    assert len(rows) == 8
    assert {r["scheme"] for r in rows} == {"wztd", "jd"}
    md = render_table(rows, "md")
    assert md.splitlines()[0].startswith("| K | scheme")
    assert render_table(rows, "csv").splitlines()[0] == "K,scheme,n,log2_codebook,log2_decoding"
    with pytest.raises(ValueError):
        render_table(rows, "html")
    assert set(SCHEMES) == {"jd", "wztd", "wz", "td"}
