import dataclasses
import json
import math

import numpy as np
import pytest

from qfrelay.scenario import (Scenario, ScenarioError, link_gains, load_scenario, reference_three_ue,
                              reference_two_ue, sample_zf_noise_gains, scenario_from_dict,
                              scenario_to_dict, set_snr, snr_of, validate)

from conftest import symmetric_scenario

BASE = dict(K=2, M=500, N=50, alpha=2.7, d_d=(105.0, 110.0), d_r=(25.0, 30.0), d_dr=100.0,
            P=(1.0, 1.0), P_r=5.0)


def test_valid_scenario_accepted():
    s = Scenario(**BASE)
    assert validate(s) is s


@pytest.mark.parametrize("change, message", [
    (dict(M=50, N=50), "antenna ordering"),
    (dict(N=2), "antenna ordering"),
    (dict(d_r=(25.0,)), "dimension mismatch"),
    (dict(P=(1.0, 1.0, 1.0)), "dimension mismatch"),
    (dict(d_dr=0.0), "non-positive parameter"),
    (dict(P_r=-1.0), "non-positive parameter"),
    (dict(alpha=math.nan), "non-positive parameter"),
    (dict(d_d=(105.0, math.inf)), "non-positive parameter"),
])
def test_invalid_scenarios(change, message):
    with pytest.raises(ScenarioError, match=message):
        validate(Scenario(**{**BASE, **change}))


def test_zero_power_limit():
    g = link_gains(Scenario(**{**BASE, "P": (1e-300, 1e-300)}))
    assert np.all(g.a == 1.0)
    assert np.all(np.abs(g.direct) < 1e-299)


def test_symmetric_gains():
    g = link_gains(symmetric_scenario())
    assert g.a[0] == g.a[1]
    assert g.b[0] == g.b[1]


def test_default_scenario_a1():
    # frozen from an independent scalar evaluation: 1 + 10^0.1
    g = link_gains(reference_two_ue())
    assert g.a[0] == pytest.approx(2.2589254117941673, rel=1e-14)
    assert g.a[0] == pytest.approx(1 + 10**0.1, rel=1e-14)


def test_link_gain_definitions():
    s = Scenario(**BASE)
    g = link_gains(s)
    for k in range(2):
        assert g.a[k] == pytest.approx(1 + s.P[k] * 450 / s.d_d[k] ** 2.7, rel=1e-15)
        assert g.b[k] == pytest.approx(s.P[k] * 50 / s.d_r[k] ** 2.7, rel=1e-15)
        assert g.relay_noise[k] == pytest.approx(s.d_r[k] ** 2.7 / 50, rel=1e-15)
        assert g.direct[k] == pytest.approx(math.log2(g.a[k]), rel=1e-14)
    assert g.log2_lambda_s == pytest.approx(50 * math.log2(1 + 5.0 * 450 / (50 * 100**2.7)), rel=1e-14)


def test_set_snr_anchor():
    s = set_snr(Scenario(**BASE), 1.0)
    assert s.P[0] == pytest.approx(10**0.1 * 105**2.7 / 450, rel=1e-14)
    assert s.P_r / s.P[0] == pytest.approx(5.0, rel=1e-14)


@pytest.mark.parametrize("snr", [-10.0, 0.0, 1.0, 17.5])
def test_snr_round_trip(snr):
    assert snr_of(set_snr(Scenario(**BASE), snr)) == pytest.approx(snr, abs=1e-12)


def test_doubling_distances_keeps_a1():
    s = set_snr(Scenario(**BASE), 1.0)
    far = set_snr(dataclasses.replace(s, d_d=tuple(2 * d for d in s.d_d),
                                      d_r=tuple(2 * d for d in s.d_r), d_dr=2 * s.d_dr), 1.0)
    assert link_gains(far).a[0] == pytest.approx(link_gains(s).a[0], rel=1e-14)


def test_dict_round_trip():
    s = reference_three_ue()
    assert scenario_from_dict(scenario_to_dict(s)) == s


def test_snr_power_spec():
    s = scenario_from_dict({**{k: v for k, v in BASE.items() if k not in ("P", "P_r")},
                            "d_d": [105, 110], "d_r": [25, 30], "P": {"snr_db": 1}})
    assert s == reference_two_ue("near")


@pytest.mark.parametrize("data, message", [
    ({"K": 2}, "missing scenario field"),
    ({**BASE, "P": [1.0, 1.0], "P_r": None}, "malformed"),
    ({**{k: v for k, v in BASE.items() if k != "P_r"}, "P": [1.0, 1.0]}, "P_r is required"),
    ({**BASE, "K": True}, "K must be an integer"),
    ({**BASE, "M": 500.5}, "M must be an integer"),
    ({**BASE, "P": {"pr_ratio": 5}}, "malformed power spec"),
    ({**BASE, "d_r": [25.0]}, "dimension mismatch"),
])
def test_bad_dicts(data, message):
    data = {k: list(v) if isinstance(v, tuple) else v for k, v in data.items()}
    with pytest.raises(ScenarioError, match=message):
        scenario_from_dict(data)


def test_load_scenario(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(scenario_to_dict(reference_two_ue("far"))))
    assert load_scenario(p) == reference_two_ue("far")
    p.write_text("{not json")
    with pytest.raises(ScenarioError, match="invalid JSON"):
        load_scenario(p)
    p.write_text("[1, 2]")
    with pytest.raises(ScenarioError, match="object"):
        load_scenario(p)


def test_presets():
    near, far = reference_two_ue("near"), reference_two_ue("far")
    assert near.d_r == (25.0, 30.0)
    assert far.d_r[0] > near.d_r[0]
    assert reference_two_ue((40, 45)).d_r == (40.0, 45.0)
    t = reference_three_ue()
    assert (t.d_d, t.d_r, t.d_dr) == ((105.0, 110.0, 120.0), (30.0, 40.0, 50.0), 100.0)
    for s in (near, far, t):
        assert snr_of(s) == pytest.approx(1.0, abs=1e-12)
        assert s.P_r == pytest.approx(5 * s.P[0], rel=1e-14)


# -- Monte Carlo ----------------------------------------------------------


def test_mc_inverse_wishart_mean():
    res = sample_zf_noise_gains(reference_two_ue("near"), "SCBS", 10_000, seed=0)
    assert res.exact[0] == pytest.approx(25**2.7 / 48, rel=1e-14)
    assert np.all(np.abs(res.z_scores()) <= 3.0)
    ratio = 50 * res.mean / np.asarray(res.distances) ** 2.7
    assert np.all((ratio >= 1.0) & (ratio <= 1.1))


def test_mc_single_ue():
    s = Scenario(K=1, M=200, N=20, alpha=3.0, d_d=(100.0,), d_r=(20.0,), d_dr=80.0,
                 P=(1.0,), P_r=5.0)
    res = sample_zf_noise_gains(s, "SCBS", 20_000, seed=3)
    assert res.exact[0] == pytest.approx(20**3 / 19, rel=1e-14)
    assert abs(res.z_scores()[0]) <= 3.0


def test_mc_mcbs_side():
    s = Scenario(K=2, M=40, N=10, alpha=2.0, d_d=(50.0, 60.0), d_r=(10.0, 12.0), d_dr=40.0,
                 P=(1.0, 1.0), P_r=5.0)
    res = sample_zf_noise_gains(s, "MCBS", 4000, seed=1)
    assert np.allclose(res.exact, np.array([50.0, 60.0]) ** 2 / (40 - 12))
    assert np.all(np.abs(res.z_scores()) <= 3.0)
    assert np.allclose(res.approx, np.array([50.0, 60.0]) ** 2 / 30)


def test_mc_deterministic_and_worker_independent():
    s = reference_two_ue("far")
    a = sample_zf_noise_gains(s, "SCBS", 1500, seed=9)
    b = sample_zf_noise_gains(s, "SCBS", 1500, seed=9, workers=3)
    assert a.to_dict() == b.to_dict()
    c = sample_zf_noise_gains(s, "SCBS", 1500, seed=10)
    assert not np.array_equal(a.mean, c.mean)


def test_mc_argument_errors():
    with pytest.raises(ValueError, match="trials"):
        sample_zf_noise_gains(reference_two_ue(), "SCBS", 10)
    with pytest.raises(ValueError, match="side"):
        sample_zf_noise_gains(reference_two_ue(), "relay", 1000)
