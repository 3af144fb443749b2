import json

import numpy as np
import pytest
from scipy import stats

from sosci import (
    CovarianceModel,
    CoverageReport,
    Scenario,
    build_covariance,
    estimate_b_probability,
    load_scenario,
    resolve_theta,
    run_coverage,
    scenario_from_dict,
)
from sosci.mc import _draw_block
from sosci.dist import cholesky


def iid_scenario(m=20, reps=5000, seed=11, **kw):
    cov = CovarianceModel("block", m, 0.0, block_size=1)
    return Scenario(m=m, covariance=cov, reps=reps, seed=seed, **kw)


def test_build_covariance_ar_exact():
    sigma = build_covariance(CovarianceModel("ar", 3, 0.7), seed=0)
    assert np.array_equal(np.diag(sigma), np.ones(3))
    assert sigma[0, 1] == 0.7 and sigma[1, 2] == 0.7
    expected = np.array([[1.0, 0.7, 0.49], [0.7, 1.0, 0.7], [0.49, 0.7, 1.0]])
    assert np.allclose(sigma, expected, rtol=0.0, atol=1e-15)


def test_build_covariance_ar_negative_rho_exact():
    sigma = build_covariance(CovarianceModel("ar", 3, -0.5), seed=0)
    assert sigma[0, 1] == -0.5
    assert sigma[0, 2] == 0.25
    assert sigma[1, 0] == -0.5
    assert np.array_equal(np.diag(sigma), np.ones(3))


def test_build_covariance_ar_zero_rho_is_identity():
    assert np.array_equal(build_covariance(CovarianceModel("ar", 4, 0.0), 0),
                          np.eye(4))


def test_build_covariance_time_decay():
    model = CovarianceModel("time_decay", 6)
    sigma = build_covariance(model, seed=5)
    diag = np.diag(sigma)
    assert np.all((diag >= 1.0) & (diag <= 3.0))
    # the diagonal scaling cancels in the correlation, which is |i-j|^-5 / 2
    corr = sigma / np.sqrt(np.outer(diag, diag))
    assert corr[0, 1] == pytest.approx(0.5, abs=1e-12)
    assert corr[0, 2] == pytest.approx(0.5 * 2.0 ** -5, abs=1e-12)
    assert np.array_equal(sigma, build_covariance(model, seed=5))
    assert not np.array_equal(sigma, build_covariance(model, seed=6))


def test_build_covariance_block():
    sigma = build_covariance(CovarianceModel("block", 4, 0.5, block_size=2), 0)
    expected = np.array([
        [1.0, 0.5, 0.0, 0.0],
        [0.5, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.5],
        [0.0, 0.0, 0.5, 1.0],
    ])
    assert np.array_equal(sigma, expected)
    assert np.array_equal(
        build_covariance(CovarianceModel("block", 4, 0.0, block_size=2), 0),
        np.eye(4))


def test_scenario_validation():
    cov = CovarianceModel("ar", 10, 0.3)
    with pytest.raises(ValueError):
        Scenario(m=5, covariance=cov, reps=100, seed=1)  # dimension mismatch
    with pytest.raises(ValueError):
        Scenario(m=10, covariance=cov, reps=0, seed=1)
    with pytest.raises(ValueError):
        Scenario(m=10, covariance=cov, reps=100, seed=-1)
    with pytest.raises(ValueError):
        Scenario(m=10, covariance=cov, reps=100, seed=1, theta_rule="gaussian")
    with pytest.raises(ValueError):
        Scenario(m=10, covariance=cov, reps=100, seed=1, theta_rule="fixed")
    with pytest.raises(ValueError):
        Scenario(m=10, covariance=cov, reps=100, seed=1, theta=(0.0,) * 10)
    with pytest.raises(ValueError):
        Scenario(m=10, covariance=cov, reps=100, seed=1, theta_rule="fixed",
                 theta=(0.0,) * 9)
    with pytest.raises(ValueError):
        Scenario(m=10, covariance=cov, reps=100, seed=1, eta=-1.0)
    with pytest.raises(ValueError):
        Scenario(m=10, covariance=cov, reps=100, seed=1, panel="all_t")
    with pytest.raises(ValueError):
        Scenario(m=9, covariance=CovarianceModel("ar", 9, 0.3), reps=100,
                 seed=1, panel="half_normal_half_t5")
    with pytest.raises(ValueError):
        Scenario(m=10, covariance=cov, reps=100, seed=1, t_df=0)


def test_resolve_theta_fixed_and_uniform():
    fixed = iid_scenario(m=3, theta_rule="fixed", theta=(1.0, -2.0, 0.5))
    assert np.array_equal(resolve_theta(fixed), [1.0, -2.0, 0.5])

    uniform = iid_scenario(m=50, eta=7.0)
    theta = resolve_theta(uniform)
    assert theta.shape == (50,)
    assert np.all(np.abs(theta) <= 7.0)
    assert np.array_equal(theta, resolve_theta(uniform))
    # the same scenario at a different eta rescales the same underlying draw
    theta40 = resolve_theta(iid_scenario(m=50, eta=40.0))
    assert np.allclose(theta40, theta * 40.0 / 7.0)

    assert np.array_equal(resolve_theta(iid_scenario(m=4, eta=0.0)), np.zeros(4))


def test_coverage_report_rates():
    report = CoverageReport(method="sidak", k=4, alpha=0.05, reps=1000, seed=9,
                            sos_misses=50, lower_events=30, upper_events=25,
                            missed_intervals=60)
    assert report.sos_rate == 0.05
    assert report.fcr_rate == 60 / 4000
    assert report.lower_miss_rate == 0.03
    assert report.upper_miss_rate == 0.025
    assert report.se == pytest.approx(np.sqrt(0.05 * 0.95 / 1000))
    d = report.to_dict()
    assert d["sos_rate"] == 0.05 and d["method"] == "sidak" and d["seed"] == 9


def test_run_coverage_replay_and_parallel_equivalence():
    scn = iid_scenario(m=10, reps=10000, seed=21, eta=3.0)
    seq = run_coverage(scn, k=3, method="sos_symmetric")
    again = run_coverage(scn, k=3, method="sos_symmetric")
    par = run_coverage(scn, k=3, method="sos_symmetric", n_jobs=4)
    assert seq.to_dict() == again.to_dict()
    assert seq.to_dict() == par.to_dict()
    assert json.dumps(seq.to_dict()) == json.dumps(par.to_dict())


def test_run_coverage_count_consistency():
    scn = iid_scenario(m=10, reps=8000, seed=33, eta=2.0)
    report = run_coverage(scn, k=4, method="unadjusted")
    assert report.sos_misses <= report.lower_events + report.upper_events
    assert report.sos_misses <= report.missed_intervals
    assert report.missed_intervals <= 4 * report.reps
    assert report.k == 4 and report.reps == 8000


def test_run_coverage_single_replicate():
    scn = iid_scenario(m=5, reps=1, seed=2)
    report = run_coverage(scn, k=2, method="bonferroni")
    assert report.sos_misses in (0, 1)
    assert report.reps == 1


def test_run_coverage_unselected_interval_calibration():
    # m = 1: no selection effect, the unadjusted interval must miss at alpha
    scn = iid_scenario(m=1, reps=40000, seed=44)
    report = run_coverage(scn, k=1, method="unadjusted")
    assert report.sos_rate == pytest.approx(0.05, abs=3 * report.se + 1e-9)
    # and the two sides split evenly
    assert report.lower_miss_rate == pytest.approx(0.025, abs=0.005)


def test_run_coverage_sidak_iid_calibration():
    # independent coordinates with k = m: Sidak coverage is exact
    scn = iid_scenario(m=10, reps=40000, seed=55)
    report = run_coverage(scn, k=10, method="sidak")
    bound = 3 * np.sqrt(0.05 * 0.95 / scn.reps)
    assert report.sos_rate == pytest.approx(0.05, abs=bound)


def test_run_coverage_sos_bound_under_dependence():
    cov = CovarianceModel("ar", 30, 0.8)
    scn = Scenario(m=30, covariance=cov, reps=20000, seed=66, eta=5.0)
    report = run_coverage(scn, k=5, method="sos_symmetric")
    assert report.sos_rate <= 0.05 + 3 * np.sqrt(0.05 * 0.95 / scn.reps)


def test_run_coverage_argument_errors():
    scn = iid_scenario(m=6, reps=100, seed=1)
    with pytest.raises(ValueError):
        run_coverage(scn, k=0, method="sidak")
    with pytest.raises(ValueError):
        run_coverage(scn, k=7, method="sidak")
    with pytest.raises(ValueError):
        run_coverage(scn, k=1, method="median")
    with pytest.raises(ValueError):
        run_coverage(scn, k=1, method="sidak", alpha=0.0)
    with pytest.raises(ValueError):
        run_coverage(scn, k=1, method="sidak", n_jobs=0)


def test_run_coverage_abs_max_requirements():
    with pytest.raises(ValueError):
        run_coverage(iid_scenario(m=3, reps=100, seed=1), k=1, method="abs_max")
    corr = Scenario(m=2, covariance=CovarianceModel("ar", 2, 0.5), reps=100,
                    seed=1, theta_rule="fixed", theta=(0.0, 0.0))
    with pytest.raises(ValueError):
        run_coverage(corr, k=1, method="abs_max")
    mixed = Scenario(m=2, covariance=CovarianceModel("block", 2, 0.0, block_size=1),
                     reps=100, seed=1, panel="half_normal_half_t5")
    with pytest.raises(ValueError):
        run_coverage(mixed, k=1, method="abs_max")


def test_run_coverage_fcw_rejects_mixed_panel():
    scn = iid_scenario(m=10, reps=100, seed=1, panel="half_normal_half_t5")
    with pytest.raises(ValueError):
        run_coverage(scn, k=2, method="fcw_symmetric")


def test_run_coverage_mixed_panel_runs_and_replays():
    cov = CovarianceModel("block", 20, 0.5, block_size=10)
    scn = Scenario(m=20, covariance=cov, reps=5000, seed=77, eta=2.0,
                   panel="half_normal_half_t5")
    a = run_coverage(scn, k=3, method="sos_symmetric")
    b = run_coverage(scn, k=3, method="sos_symmetric", n_jobs=2)
    assert a.to_dict() == b.to_dict()
    assert a.sos_rate <= 0.05 + 3 * np.sqrt(0.05 * 0.95 / scn.reps)


def test_mixed_panel_marginals():
    # first half: standard normal; second half: t5 (unit block covariance)
    cov = CovarianceModel("block", 10, 0.0, block_size=1)
    scn = Scenario(m=10, covariance=cov, reps=30000, seed=88,
                   panel="half_normal_half_t5")
    sigma = build_covariance(cov, scn.seed)
    half = scn.m // 2
    parts = (cholesky(sigma[:half, :half]), cholesky(sigma[half:, half:]))
    y = _draw_block(scn, np.zeros(10), parts, block=0, size=30000)
    assert stats.kstest(y[:, 0], "norm").statistic < 0.01
    assert stats.kstest(y[:, 9], "t", args=(5,)).statistic < 0.01
    assert stats.kstest(y[:, 9], "norm").statistic > 0.02  # tails are heavier


def test_estimate_b_probability():
    assert estimate_b_probability((1.0, 2.0), 0.0, 100, 1) == 0.0
    p = estimate_b_probability((0.0, 0.0), 2.2364766, 10**6, seed=3)
    se = np.sqrt(0.95 * 0.05 / 10**6)
    assert p == pytest.approx(0.95, abs=3 * se)
    assert p == estimate_b_probability((0.0, 0.0), 2.2364766, 10**6, seed=3)
    with pytest.raises(ValueError):
        estimate_b_probability((1.0,), 1.0, 10, 1)
    with pytest.raises(ValueError):
        estimate_b_probability((1.0, 2.0), -1.0, 10, 1)
    with pytest.raises(ValueError):
        estimate_b_probability((1.0, 2.0), 1.0, 0, 1)


def test_scenario_from_dict_round_trip():
    cfg = {
        "m": 12,
        "covariance": {"kind": "block", "rho": 0.2, "block_size": 4},
        "reps": 500,
        "seed": 9,
        "eta": 5.0,
        "panel": "half_normal_half_t5",
    }
    scn = scenario_from_dict(cfg)
    assert scn.m == 12
    assert scn.covariance == CovarianceModel("block", 12, 0.2, block_size=4)
    assert scn.eta == 5.0 and scn.panel == "half_normal_half_t5"
    assert scn.theta_rule == "uniform" and scn.t_df == 5


def test_scenario_from_dict_fixed_theta():
    cfg = {"m": 2, "covariance": {"kind": "ar"}, "reps": 10, "seed": 0,
           "theta_rule": "fixed", "theta": [1, 2]}
    scn = scenario_from_dict(cfg)
    assert scn.theta == (1.0, 2.0)
    assert scn.covariance.dimension == 2  # defaults to m


def test_scenario_from_dict_errors():
    base = {"m": 4, "covariance": {"kind": "ar"}, "reps": 10, "seed": 0}
    with pytest.raises(ValueError):
        scenario_from_dict({**base, "repz": 10})
    with pytest.raises(ValueError):
        scenario_from_dict({"m": 4, "reps": 10, "seed": 0})
    with pytest.raises(ValueError):
        scenario_from_dict({**base, "covariance": "ar"})
    with pytest.raises(ValueError):
        scenario_from_dict({**base, "covariance": {"kind": "ar", "row": 0.1}})
    with pytest.raises(ValueError):
        scenario_from_dict([1, 2, 3])


def test_load_scenario(tmp_path):
    path = tmp_path / "scn.json"
    path.write_text(json.dumps({"m": 3, "covariance": {"kind": "ar", "rho": 0.5},
                                "reps": 20, "seed": 4}), encoding="utf-8")
    scn = load_scenario(path)
    assert scn.m == 3 and scn.covariance.rho == 0.5 and scn.reps == 20
