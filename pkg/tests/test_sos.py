import math

import numpy as np
import pytest

from sosci import (
    ConfidenceInterval,
    IntervalSpec,
    OptimizationError,
    bonferroni_halfwidth,
    interval_length,
    k_of_m_intervals,
    optimize_delta,
    spec_from_delta,
    symmetric_delta,
)
from sosci.dist import normal_family, student_t_family
from sosci.sos import golden_section_min

from _oracles import grid_argmin


def test_confidence_interval_contract():
    ci = ConfidenceInterval(2, -1.0, 3.5, "sos_symmetric")
    assert ci.length == 4.5
    assert ci.contains(0.0) and ci.contains(-1.0) and ci.contains(3.5)
    assert not ci.contains(3.6)
    with pytest.raises(ValueError):
        ConfidenceInterval(0, 1.0, 0.0, "x")
    with pytest.raises(ValueError):
        ConfidenceInterval(0, math.nan, 0.0, "x")


def test_symmetric_delta():
    assert symmetric_delta(100, 10) == pytest.approx(100 / 110)
    assert symmetric_delta(2, 1) == pytest.approx(2 / 3)
    assert symmetric_delta(7, 7) == 0.5


def test_spec_from_delta_splits_alpha():
    spec = spec_from_delta(100, 10, 0.05, 0.4)
    assert spec.lambda_lower == pytest.approx(0.4 * 0.05 / 100)
    assert spec.lambda_upper == pytest.approx(0.6 * 0.05 / 10)
    assert 100 * spec.lambda_lower + 10 * spec.lambda_upper == pytest.approx(0.05)


def test_spec_from_delta_symmetric_frozen():
    # oracle: independent bisection quantiles for the (m, k) = (100, 10) split
    spec = spec_from_delta(100, 10, 0.05, symmetric_delta(100, 10))
    assert spec.c_lower == pytest.approx(3.317247362, abs=1e-8)
    assert spec.c_upper == pytest.approx(3.317247362, abs=1e-8)


def test_spec_from_delta_half_frozen():
    spec = spec_from_delta(100, 10, 0.05, 0.5)
    assert spec.c_lower == pytest.approx(3.480756404, abs=1e-8)
    assert spec.c_upper == pytest.approx(2.807033768, abs=1e-8)


def test_spec_from_delta_k_equals_m_symmetric_is_bonferroni():
    for m in (2, 5, 100):
        spec = spec_from_delta(m, m, 0.05, 0.5)
        assert spec.c_lower == pytest.approx(bonferroni_halfwidth(m, 0.05), abs=1e-12)
        assert spec.c_upper == pytest.approx(spec.c_lower, abs=1e-12)


def test_spec_from_delta_domain():
    with pytest.raises(ValueError):
        spec_from_delta(100, 10, 0.05, 0.0)
    with pytest.raises(ValueError):
        spec_from_delta(100, 10, 0.05, 1.0)
    with pytest.raises(ValueError):
        spec_from_delta(100, 10, 1.5, 0.5)
    with pytest.raises(ValueError):
        spec_from_delta(10, 11, 0.05, 0.5)
    with pytest.raises(ValueError):
        spec_from_delta(0, 0, 0.05, 0.5)


def test_interval_spec_validation():
    with pytest.raises(ValueError):
        IntervalSpec(0.0, 0.01, 2.0, 2.0, normal_family())
    with pytest.raises(ValueError):
        IntervalSpec(0.01, 0.01, math.inf, 2.0, normal_family())


def test_k_of_m_symmetric_two_of_two():
    # oracle: c = z(1 - 0.025/1.5...) computed by bisection = 2.128045234
    res = k_of_m_intervals([2.9, 2.5], 1, 0.05)
    (ci,) = res
    assert ci.index == 0
    assert ci.method == "sos_symmetric"
    assert ci.lo == pytest.approx(2.9 - 2.128045234, abs=1e-8)
    assert ci.hi == pytest.approx(2.9 + 2.128045234, abs=1e-8)


def test_k_of_m_interval_count_and_order():
    y = np.array([0.1, 4.0, -2.0, 3.0, 1.0])
    out = k_of_m_intervals(y, 3, 0.05)
    assert [ci.index for ci in out] == [1, 3, 4]
    lengths = {ci.length for ci in out}
    assert max(lengths) - min(lengths) <= 1e-12


def test_k_of_m_shift_equivariance():
    y = np.array([0.5, -1.0, 2.2, 0.9])
    base = k_of_m_intervals(y, 2, 0.05)
    moved = k_of_m_intervals(y + 10.0, 2, 0.05)
    for a, b in zip(base, moved):
        assert b.lo == pytest.approx(a.lo + 10.0, abs=1e-12)
        assert b.hi == pytest.approx(a.hi + 10.0, abs=1e-12)


def test_k_of_m_policies_and_labels():
    y = np.linspace(-1, 1, 20)
    sym = k_of_m_intervals(y, 4, 0.05, delta_policy="symmetric")
    sho = k_of_m_intervals(y, 4, 0.05, delta_policy="shortest")
    fix = k_of_m_intervals(y, 4, 0.05, delta_policy="fixed", delta=0.3)
    assert {ci.method for ci in sym} == {"sos_symmetric"}
    assert {ci.method for ci in sho} == {"sos_shortest"}
    assert {ci.method for ci in fix} == {"sos_fixed"}
    assert sho[0].length <= sym[0].length + 1e-9


def test_k_of_m_fixed_requires_delta_and_rejects_otherwise():
    y = [1.0, 2.0, 3.0]
    with pytest.raises(ValueError):
        k_of_m_intervals(y, 1, 0.05, delta_policy="fixed")
    with pytest.raises(ValueError):
        k_of_m_intervals(y, 1, 0.05, delta_policy="symmetric", delta=0.4)
    with pytest.raises(ValueError):
        k_of_m_intervals(y, 1, 0.05, delta_policy="nope")


def test_k_of_m_heterogeneous_families():
    fams = [normal_family()] * 3 + [student_t_family(5)] * 3
    y = [3.0, 0.1, 0.2, 2.5, 0.0, -0.3]
    out = k_of_m_intervals(y, 2, 0.05, family=fams)
    by_index = {ci.index: ci for ci in out}
    # the t interval is wider than the normal one at the same levels
    assert by_index[3].length > by_index[0].length
    with pytest.raises(ValueError):
        k_of_m_intervals(y, 2, 0.05, delta_policy="shortest", family=fams)


def test_k_of_m_length_grows_with_k():
    y = np.arange(30.0)
    lengths = [k_of_m_intervals(y, k, 0.05)[0].length for k in (1, 5, 15, 30)]
    assert all(a < b for a, b in zip(lengths, lengths[1:]))


def test_interval_length_helper():
    spec = spec_from_delta(10, 2, 0.05, 0.5)
    assert interval_length(10, 2, 0.05, 0.5) == pytest.approx(
        spec.c_lower + spec.c_upper, abs=1e-15)


def test_golden_section_on_quadratic():
    x = golden_section_min(lambda t: (t - 0.3) ** 2 + 1.0, -2.0, 2.0)
    assert x == pytest.approx(0.3, abs=1e-7)
    with pytest.raises(ValueError):
        golden_section_min(lambda t: t, 1.0, 1.0)


@pytest.mark.parametrize("m,k,expected_delta,expected_length", [
    # oracle: 10^4-point grid scan of the interval length in delta
    (100, 1, 0.371431, 5.419795),
    (100, 10, 0.449977, 6.285069),
    (2, 1, 0.470138, 4.200128),
])
def test_optimize_delta_frozen(m, k, expected_delta, expected_length):
    d, length = optimize_delta(m, k, 0.05)
    assert d == pytest.approx(expected_delta, abs=1e-4)
    assert length == pytest.approx(expected_length, abs=1e-6)


def test_optimize_delta_matches_grid():
    for m, k in ((100, 10), (10, 1), (50, 25)):
        d_star, len_star = optimize_delta(m, k, 0.05)

        def length_at(d):
            return interval_length(m, k, 0.05, d)

        _, grid_best = grid_argmin(length_at, 1e-6, 1 - 1e-6, 10000)
        assert len_star <= grid_best + 1e-4


def test_optimize_delta_k_equals_m_is_half():
    d, length = optimize_delta(100, 100, 0.05)
    assert d == pytest.approx(0.5, abs=1e-4)
    assert length == pytest.approx(2 * bonferroni_halfwidth(100, 0.05), abs=1e-6)


def test_optimize_delta_bounded_by_symmetric():
    for m, k in ((100, 1), (100, 10), (20, 5)):
        _, len_star = optimize_delta(m, k, 0.05)
        sym_len = interval_length(m, k, 0.05, symmetric_delta(m, k))
        assert len_star <= sym_len + 1e-9


def test_optimize_delta_failure_is_typed():
    with pytest.raises(OptimizationError):
        optimize_delta(100, 10, 1e-300)
