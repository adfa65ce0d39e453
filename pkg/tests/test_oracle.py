import json

import pytest

from qfrelay import oracle
from qfrelay.oracle import PROVENANCES, Check, SuiteConfig, run_suite
from qfrelay.scenario import Scenario, set_snr

from conftest import random_scenario

FAST = dict(mu1=(0.2, 0.5, 0.8), trials=2000, sweep_points=8, reduction_draws=50, grid_points=200,
            grid_points_3ue=60)


def test_default_suite_passes(near):
    rep = run_suite(near)
    assert rep.passed, rep.summary()
    names = {c.name.split(" ")[0] for c in rep.checks}
    for prefix in ("grid.excess", "grid.gap", "cross.bisection", "cross.kkt", "cross.two_ue",
                   "identity.per_ue", "identity.budget", "identity.sum_cap", "wztd.value",
                   "wztd.bin_rate", "wztd.phase_fit", "montecarlo.SCBS.mean",
                   "montecarlo.SCBS.approx", "refinement.d_r", "reduction.terms",
                   "reduction.four_case"):
        assert prefix in names
    assert {c.provenance for c in rep.checks} == set(PROVENANCES)


def test_three_ue_suite(three):
    rep = run_suite(three, SuiteConfig(split=(0.75, 0.25)))
    assert rep.passed, rep.summary()
    assert not any(c.name.startswith("reduction") for c in rep.checks)


def test_no_grid_above_three(rng):
    rep = run_suite(random_scenario(rng, 4), SuiteConfig(**{**FAST, "mc_approx_tol": None}))
    assert not any(c.provenance == "grid" for c in rep.checks)
    assert rep.passed, rep.summary()


def test_large_array_approximation_flagged_for_small_n():
    # d^a/N is 30% off when N - K is small; the exact mean still matches
    s = set_snr(Scenario(K=2, M=100, N=8, alpha=2.7, d_d=(105.0, 110.0), d_r=(25.0, 30.0),
                         d_dr=100.0, P=(1.0, 1.0), P_r=5.0), 1.0)
    rep = run_suite(s, SuiteConfig(**FAST))
    by_name = {c.name: c for c in rep.checks}
    assert not by_name["montecarlo.SCBS.approx ue1"].passed
    assert by_name["montecarlo.SCBS.mean ue1"].passed


def test_byte_identical_reruns(far):
    cfg = SuiteConfig(**FAST)
    assert run_suite(far, cfg).to_json() == run_suite(far, cfg).to_json()


def test_report_is_json(near):
    d = json.loads(run_suite(near, SuiteConfig(**FAST)).to_json())
    assert d["passed"] is True and d["n_failed"] == 0
    assert {"name", "target", "reference", "tolerance", "passed", "provenance"} <= set(d["checks"][0])


def test_minimal_margin_runs():
    s = set_snr(Scenario(K=2, M=13, N=10, alpha=2.7, d_d=(105.0, 110.0), d_r=(25.0, 30.0),
                         d_dr=100.0, P=(1.0, 1.0), P_r=5.0), 1.0)
    rep = run_suite(s, SuiteConfig(**{**FAST, "mc_sides": ("SCBS", "MCBS")}))
    mc = [c for c in rep.checks if c.name.startswith("montecarlo.MCBS.mean")]
    assert len(mc) == 2
    assert all(c.tolerance > 0 for c in mc)


def test_few_trials_widen_tolerance(near):
    def tol(trials):
        rep = run_suite(near, SuiteConfig(**{**FAST, "trials": trials}))
        return [c.tolerance for c in rep.checks if c.name.startswith("montecarlo.SCBS.mean")]
    assert all(a > b for a, b in zip(tol(100), tol(10_000)))


def test_errors_are_recorded(near, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("kaboom")
    monkeypatch.setattr(oracle, "grid_oracle", boom)
    rep = run_suite(near, SuiteConfig(**FAST))
    failed = rep.failures
    assert failed and all(c.provenance == "grid" for c in failed)
    assert "kaboom" in failed[0].detail
    assert any(c.name.startswith("cross") and c.passed for c in rep.checks)


def test_check_provenance_validated():
    with pytest.raises(ValueError):
        Check("x", 0.0, 0.0, 1.0, True, "guess")


def test_empty_report_is_not_a_pass():
    assert not oracle.ValidationReport(scenario={}, config={}).passed
