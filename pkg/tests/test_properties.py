import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from qfrelay.complexity import codebook_log2, decoding_log2
from qfrelay.quantopt import (kkt_residuals, optimize_k_ue, optimize_two_ue, variances_from_shares,
                              waterfill_bisection)
from qfrelay.region import (bin_rates, max_weighted_sum, qf_jd_constraints, quant_rates,
                            two_ue_case_value)
from qfrelay.scenario import link_gains
from qfrelay.wztd import equivalence_report

from conftest import random_scenario, random_weights

SETTINGS = settings(max_examples=150, deadline=None, derandomize=True)
seeds = st.integers(0, 2**32 - 1)
ks = st.integers(1, 6)
log_q = st.floats(-3.0, 5.0)


def _draw(seed, K):
    rng = np.random.default_rng(seed)
    s = random_scenario(rng, K)
    return rng, s, link_gains(s)


@SETTINGS
@given(seeds, ks, st.data())
def test_caps_monotone_in_q(seed, K, data):
    _, _, g = _draw(seed, K)
    Q = 10.0 ** np.array(data.draw(st.lists(log_q, min_size=K, max_size=K)))
    k = data.draw(st.integers(0, K - 1))
    Q2 = Q.copy()
    Q2[k] *= data.draw(st.floats(1.01, 100.0))
    a, b = qf_jd_constraints(g, Q), qf_jd_constraints(g, Q2)
    assert b.I[k] < a.I[k]
    assert b.xi > a.xi
    assert np.all(b.I[np.arange(K) != k] == a.I[np.arange(K) != k])


@SETTINGS
@given(seeds, ks, st.data())
def test_bin_rate_below_quant_rate(seed, K, data):
    _, _, g = _draw(seed, K)
    Q = 10.0 ** np.array(data.draw(st.lists(log_q, min_size=K, max_size=K)))
    assert np.all(bin_rates(g, Q) <= quant_rates(g, Q))


@SETTINGS
@given(seeds, ks)
def test_identities_on_budget_manifold(seed, K):
    rng, _, g = _draw(seed, K)
    ll = rng.dirichlet(np.ones(K)) * g.log_lambda_s
    Q = variances_from_shares(g, ll)
    cs = qf_jd_constraints(g, Q)
    c = np.log1p(g.relay_noise / Q) / math.log(2)
    resid = cs.I - g.direct - ll / math.log(2) + c
    assert np.all(np.abs(resid) <= 1e-9 * np.maximum(1.0, cs.I))
    # on the manifold the per-UE caps add up to the full-set bound
    JK = cs.J_subset(range(K))
    assert abs(cs.I.sum() - JK) <= 1e-9 * max(1.0, abs(JK))
    assert np.allclose(bin_rates(g, Q), ll / math.log(2), rtol=1e-9, atol=1e-12)


@SETTINGS
@given(seeds, st.floats(0.0, 1.0), st.lists(st.floats(-1.0, 2.5), min_size=2, max_size=2))
def test_lp_equals_four_cases(seed, m1, logscale):
    _, _, g = _draw(seed, 2)
    cs = qf_jd_constraints(g, g.relay_noise * 10.0 ** np.array(logscale))
    assume(cs.xi >= 0)
    mu = [m1, 1 - m1]
    lp = max_weighted_sum(cs, mu, "lp").value
    assert abs(lp - two_ue_case_value(cs, mu)) <= 1e-10 * max(1.0, abs(lp))


@SETTINGS
@given(seeds, st.integers(1, 8))
def test_optimizer_invariants(seed, K):
    rng, s, g = _draw(seed, K)
    mu = random_weights(rng, K)
    a = optimize_k_ue(g, mu)
    assert np.all(a.log_lambda >= 0)
    assert abs(a.log_lambda.sum() - g.log_lambda_s) <= 1e-9 * g.log_lambda_s
    assert np.all((a.log_lambda > 0) == np.isfinite(a.Q))
    assert kkt_residuals(g, mu, a).ok(1e-8)
    b = waterfill_bisection(g, mu)
    assert np.max(np.abs(a.log_lambda - b.log_lambda)) <= 1e-8


@SETTINGS
@given(seeds, st.floats(0.0, 0.98), st.floats(0.005, 0.02))
def test_weight_refines_quantization(seed, m1, dm):
    _, _, g = _draw(seed, 2)
    lo = optimize_two_ue(g, [m1, 1 - m1])
    hi = optimize_two_ue(g, [m1 + dm, 1 - m1 - dm])
    assert hi.Q[0] <= lo.Q[0] * (1 + 1e-9)
    assert hi.Q[1] >= lo.Q[1] * (1 - 1e-9)


@SETTINGS
@given(seeds, ks)
def test_equivalence_certificate(seed, K):
    rng, _, g = _draw(seed, K)
    assert equivalence_report(g, random_weights(rng, K)).ok(1e-9)


bits = st.floats(1.0, 400.0)


@SETTINGS
@given(st.integers(2, 12), st.floats(1.0, 200.0), st.data())
def test_complexity_orderings(K, n, data):
    # the orderings need every exponent n*R to be at least one bit
    q = np.array(data.draw(st.lists(bits, min_size=K, max_size=K)))
    frac = np.array(data.draw(st.lists(st.floats(0.0, 1.0), min_size=K, max_size=K)))
    b = 1.0 + frac * (q - 1.0)
    r = np.array(data.draw(st.lists(bits, min_size=K, max_size=K)))
    Rq, Rb, R = q / n, np.minimum(b / n, q / n), r / n
    assert codebook_log2("wztd", n, Rq, Rb) <= codebook_log2("wz", n, Rq, Rb) + 1e-9
    assert codebook_log2("wztd", n, Rq, Rb) <= codebook_log2("jd", n, Rq, Rb) + 1e-9
    assert codebook_log2("td", n, Rq, Rb) <= codebook_log2("jd", n, Rq, Rb) + 1e-9
    assert decoding_log2("wztd", n, R, Rq, Rb) <= decoding_log2("wz", n, R, Rq, Rb) + 1e-9
    assert decoding_log2("wztd", n, R, Rq, Rb) <= decoding_log2("jd", n, R, Rq, Rb) + 1e-9
