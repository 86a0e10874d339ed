import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvflow import DomainError, PhiFunction
from curvflow.sphere_ode import (
    closed_form_extinction,
    closed_form_time,
    psi_rhs,
    self_similar_residual,
    solve_psi,
)

ZZ3 = PhiFunction.from_id("power-sum:1,1;1,3")
LINEAR = PhiFunction.power(1)
T_ZZ3 = 0.5 * (1.0 - math.log(2.0))


def exact_time_zz3(psi):
    return 0.5 * (1 - psi**2) + 0.5 * np.log((1 + psi**2) / 2)


def test_rhs_examples():
    assert psi_rhs(1.0, 1.0, ZZ3) == -2.0
    assert psi_rhs(1.0, 1.0, LINEAR) == -1.0
    assert psi_rhs(0.5, 1.0, ZZ3) == -10.0
    with pytest.raises(DomainError):
        psi_rhs(0.0, 1.0, ZZ3)
    with pytest.raises(DomainError):
        psi_rhs(1.0, -1.0, ZZ3)


def test_closed_forms():
    psi = np.linspace(1e-3, 1, 50)
    assert np.allclose(closed_form_time(ZZ3, 1.0, psi), exact_time_zz3(psi), rtol=0, atol=1e-15)
    assert closed_form_extinction(ZZ3, 1.0) == pytest.approx(T_ZZ3, rel=1e-15)
    assert closed_form_extinction(LINEAR, 1.0) == 0.5
    assert closed_form_extinction(PhiFunction.log_power(2), 1.0) is None


def test_zz3_trajectory_against_closed_form():
    traj = solve_psi(1.0, ZZ3)
    keep = traj.psi >= 1e-3
    assert np.abs(traj.t[keep] - exact_time_zz3(traj.psi[keep])).max() <= 1e-6
    assert abs(traj.extinction_time - T_ZZ3) <= 1e-4
    assert traj.psi[0] == 1.0 and np.all(np.diff(traj.psi) < 0)
    assert traj.tail_exponent == pytest.approx(3.0, abs=1e-6)


def test_linear_trajectory_is_square_root():
    traj = solve_psi(1.0, LINEAR)
    keep = traj.psi >= 1e-3
    # psi psi' = -1 gives t = (1 - psi^2) / 2
    assert np.abs(traj.t[keep] - 0.5 * (1 - traj.psi[keep] ** 2)).max() <= 1e-6
    early = traj.t <= 0.4
    assert np.allclose(traj.psi[early], np.sqrt(1 - 2 * traj.t[early]), rtol=1e-7, atol=0)
    assert traj.extinction_time == pytest.approx(0.5, abs=1e-6)


def test_interpolant_reproduces_samples():
    traj = solve_psi(1.0, ZZ3)
    mid = 0.5 * (traj.t[:-1] + traj.t[1:])[:100]
    t_exact = exact_time_zz3(traj.psi_at(mid))
    assert np.abs(t_exact - mid).max() <= 1e-6
    assert np.isnan(traj.psi_at(traj.t[-1] + 1.0))


@pytest.mark.parametrize("text", ["power-sum:1,1;1,3", "power:1", "power:2", "log-power:1.5", "shifted-entropy:2"])
def test_extinction_monotone_in_radius_and_speed_accelerates(text):
    phi = PhiFunction.from_id(text)
    times = [solve_psi(r, phi).extinction_time for r in (0.5, 1.0, 2.0)]
    assert times[0] < times[1] < times[2]
    traj = solve_psi(1.0, phi)
    assert np.all(np.diff(traj.psi) < 0)
    assert np.all(np.diff(traj.psi_prime) <= 0)


def test_pure_power_extinction_scaling():
    for alpha in (1.0, 2.0, 3.0):
        phi = PhiFunction.power(alpha)
        for r in (0.5, 2.0):
            exact = r ** (alpha + 1) / (alpha + 1)
            assert solve_psi(r, phi).extinction_time == pytest.approx(exact, rel=1e-6)


def test_self_similar_residual_examples():
    assert self_similar_residual(1.0, 1.0, 1.0, -2.0, ZZ3) == 0.0
    dpsi = psi_rhs(1.0, 2.0, ZZ3)
    assert self_similar_residual(2.0, 0.5, 1.0, dpsi, ZZ3) == pytest.approx(0.0, abs=1e-15)
    assert self_similar_residual(1.0, 1.0, 1.0, -1.0, ZZ3) == -1.0
    with pytest.raises(DomainError):
        self_similar_residual(1.0, 1.0, 1.0, 0.0, ZZ3)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(1e-3, 1.0))
def test_property_sphere_satisfies_self_similar_equation(r, psi):
    # a sphere of radius r at scale psi: support r, curvature 1 / r, psi' from the ODE
    dpsi = psi_rhs(psi, r, ZZ3)
    res = self_similar_residual(r, 1.0 / r, psi, dpsi, ZZ3)
    assert abs(res) <= 1e-12 * r


@settings(max_examples=100, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.05, 0.999))
def test_property_closed_form_time_decreasing_in_psi(r, psi):
    assert closed_form_time(ZZ3, r, psi) > closed_form_time(ZZ3, r, min(1.0, psi * 1.001))
