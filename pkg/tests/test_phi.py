import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvflow import DomainError
from curvflow.phi import (
    PhiFunction,
    check_conditions_phi,
    critical_log_power,
    eval_phi,
    min_second_derivative,
    taylor_gap,
)

ZZ3 = PhiFunction.from_id("power-sum:1,1;1,3")

# tangency of Phi'' = 0 at z = (2 - p) / p reduces convexity of ln(1+z) + z^p to
# 4 (p - 1) / p * ((2 - p) / p)^(p - 2) = 1, solved once by brentq
CRITICAL_P = 1.2155300588690392

ADMISSIBLE = ["power-sum:1,1;1,3", "power-sum:2,1;0.5,2;1,4", "log-power:1.5", "log-power:2",
              "shifted-entropy:1", "shifted-entropy:3", "power:1", "power:2.5"]


def test_eval_examples():
    assert eval_phi(ZZ3, 1.0) == (2.0, 4.0, 6.0)
    v = eval_phi(PhiFunction.log_power(2), 1.0)
    assert v == pytest.approx((math.log(2) + 1, 2.5, 1.75), rel=1e-15)
    assert eval_phi(PhiFunction.shifted_entropy(1), 0.0)[0] == 0.0
    assert eval_phi(ZZ3, 0.0)[:2] == (0.0, 1.0)


def test_eval_domain():
    with pytest.raises(DomainError):
        eval_phi(ZZ3, -1e-9)
    with pytest.raises(DomainError):
        eval_phi(ZZ3, float("nan"))


def test_taylor_gap_examples():
    for z in (1e-3, 0.7, 42.0):
        assert taylor_gap(PhiFunction.power(1), z) == 0.0
    assert taylor_gap(ZZ3, 1.0) == 2.0
    assert taylor_gap(PhiFunction.log_power(2), 1.0) == pytest.approx(1.5 - math.log(2), rel=1e-14)
    with pytest.raises(DomainError):
        taylor_gap(ZZ3, 0.0)


def test_ids_round_trip():
    for text in ADMISSIBLE:
        assert PhiFunction.from_id(PhiFunction.from_id(text).id) == PhiFunction.from_id(text)
    for bad in ("power-sum:", "power-sum:1", "log-power:x", "cubic:1", "power:-1", "shifted-entropy:0"):
        with pytest.raises(ValueError):
            PhiFunction.from_id(bad)


def test_condition_d_constant_for_z_plus_z3():
    rep = check_conditions_phi(ZZ3, 1e-6, 1e6, 10_000)
    assert rep.passed
    assert rep.c_estimate <= 2 + 1e-9
    # the ratio z Phi''/Phi' = 6 z^2 / (1 + 3 z^2) tends to 2 from below
    assert rep.c_estimate == pytest.approx(2.0, abs=1e-9)
    assert rep.worst_witness["d"] == pytest.approx(1e6)


@pytest.mark.parametrize("text", ADMISSIBLE)
def test_admissible_families_pass(text):
    rep = check_conditions_phi(PhiFunction.from_id(text), 1e-3, 1e3, 2000)
    assert rep.passed, rep.to_dict()
    assert rep.c_estimate >= 0


def test_log_power_window():
    assert not check_conditions_phi(PhiFunction.log_power(1.1), 1e-3, 1e3).c
    for p in (1.25, 1.5, 2.0):
        rep = check_conditions_phi(PhiFunction.log_power(p), 1e-3, 1e3)
        assert rep.a and rep.b and rep.c


def test_critical_exponent_matches_tangency_oracle():
    p = critical_log_power()
    assert 1.15 <= p <= 1.30
    assert p == pytest.approx(CRITICAL_P, abs=1e-7)
    z, m = min_second_derivative(PhiFunction.log_power(CRITICAL_P + 1e-6))
    assert m >= 0
    assert z == pytest.approx((2 - CRITICAL_P) / CRITICAL_P, rel=1e-2)


def test_grid_floor():
    with pytest.raises(ValueError):
        check_conditions_phi(ZZ3, 1e-3, 1e3, 999)
    with pytest.raises(ValueError):
        check_conditions_phi(ZZ3, 1.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(ADMISSIBLE), st.floats(1e-4, 1e4))
def test_property_taylor_gap_nonnegative(text, z):
    assert taylor_gap(PhiFunction.from_id(text), z) >= -1e-12


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(ADMISSIBLE), st.floats(1e-3, 1e3))
def test_property_derivatives_match_differences(text, z):
    phi = PhiFunction.from_id(text)
    h = 1e-5 * z
    d1 = (phi.value(z + h) - phi.value(z - h)) / (2 * h)
    d2 = (phi.d1(z + h) - phi.d1(z - h)) / (2 * h)
    assert d1 == pytest.approx(phi.d1(z), rel=1e-6)
    assert d2 == pytest.approx(phi.d2(z), rel=1e-6, abs=1e-9 * phi.d1(z) / z)
