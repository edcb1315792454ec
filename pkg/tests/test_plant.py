import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hillsim.errors import DomainError, InputError, StepSizeError
from hillsim.plant import (
    PWM_MAX,
    DroneParams,
    DroneState,
    PlantCommand,
    build_subsystems,
    plant_derivative,
    pwm_to_rpm,
    rpm_to_pwm,
    step_plant,
)

P = DroneParams()


def fly(cmd, seconds, s=None, dt=1 / 240):
    s = DroneState() if s is None else s
    for _ in range(int(round(seconds / dt))):
        s = step_plant(s, cmd, dt)
    return s


def test_param_defaults_and_validation():
    assert (P.mass, P.Ixx, P.Iyy, P.Izz, P.g) == (0.027, 1.4e-5, 1.4e-5, 2.17e-5, 9.81)
    assert P.hover_thrust == pytest.approx(0.26487)
    with pytest.raises(InputError):
        DroneParams(mass=0)


def test_subsystem_gains():
    sub = build_subsystems(P)
    assert sub.vertical.B[0, 0] == pytest.approx(37.037037, rel=1e-7)
    assert sub.yaw.B[0, 0] == pytest.approx(46082.95, rel=1e-7)
    assert sub.lateral.A[2, 1] == -9.81
    assert sub.longitudinal.A[2, 1] == 9.81
    assert sub.lateral.B[0, 0] == pytest.approx(1 / 1.4e-5)
    assert sub.longitudinal.B[0, 0] == pytest.approx(1 / 1.4e-5)


def test_subsystems_agree_with_stacked_derivative():
    rng = np.random.default_rng(1)
    sub = build_subsystems(P)
    for _ in range(10):
        s = rng.normal(size=12)
        c = rng.normal(size=4) * 1e-3
        d = plant_derivative(s, c)
        x, y, z, u, v, w, phi, th, psi, p, q, r = s
        np.testing.assert_allclose(d[[5, 2]], sub.vertical.A @ [w, z] + sub.vertical.B[:, 0] * c[0])
        np.testing.assert_allclose(d[[11, 8]], sub.yaw.A @ [r, psi] + sub.yaw.B[:, 0] * c[3])
        np.testing.assert_allclose(d[[9, 6, 4, 1]], sub.lateral.A @ [p, phi, v, y] + sub.lateral.B[:, 0] * c[1])
        np.testing.assert_allclose(d[[10, 7, 3, 0]], sub.longitudinal.A @ [q, th, u, x] + sub.longitudinal.B[:, 0] * c[2])


def test_rest_is_equilibrium():
    s = step_plant(DroneState(), PlantCommand(), 0.01)
    assert s == DroneState()


def test_vertical_double_integrator_exact():
    s = fly(PlantCommand(dFz=0.027), 1.0)
    assert s.w == pytest.approx(1.0, rel=1e-12)
    assert s.z == pytest.approx(0.5, rel=1e-12)
    assert s.x == s.y == s.phi == s.theta == s.psi == 0.0


def test_roll_sign():
    s = fly(PlantCommand(Mx=1e-6), 0.1)
    assert s.phi > 0
    s = fly(PlantCommand(), 0.2, s)
    assert s.v < 0 and s.y < 0


def test_pitch_sign():
    s = fly(PlantCommand(My=1e-6), 0.3)
    assert s.theta > 0 and s.u > 0


def test_step_size_limits():
    with pytest.raises(StepSizeError):
        step_plant(DroneState(), PlantCommand(), 0.0)
    with pytest.raises(StepSizeError):
        step_plant(DroneState(), PlantCommand(), 0.02)
    with pytest.raises(InputError):
        step_plant(DroneState(), PlantCommand(np.inf), 0.01)


def test_yaw_wraps():
    s = DroneState(psi=np.pi - 1e-3, r=1.0)
    out = step_plant(s, PlantCommand(), 0.01)
    assert -np.pi < out.psi < 0


small = st.floats(-1.0, 1.0, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(small, min_size=12, max_size=12), st.floats(-1e-2, 1e-2))
def test_property_vertical_decoupling(s, dfz):
    s = np.array(s)
    s[6:9] *= 0.5  # keep angles far from the wrap point
    a = np.array(step_plant(s, PlantCommand(), 0.005))
    b = np.array(step_plant(s, PlantCommand(dFz=dfz), 0.005))
    for i in (0, 1, 3, 4, 6, 7, 8, 9, 10, 11):
        assert a[i] == b[i]


@settings(max_examples=50, deadline=None)
@given(
    st.lists(small, min_size=12, max_size=12), st.lists(small, min_size=12, max_size=12),
    st.lists(small, min_size=4, max_size=4), st.lists(small, min_size=4, max_size=4),
    st.floats(-1, 1), st.floats(-1, 1),
)
def test_property_linearity(s1, s2, c1, c2, a, b):
    s1, s2 = np.array(s1) * 0.4, np.array(s2) * 0.4
    c1, c2 = np.array(c1) * 1e-4, np.array(c2) * 1e-4
    lhs = np.array(step_plant(a * s1 + b * s2, a * c1 + b * c2, 0.004))
    rhs = a * np.array(step_plant(s1, c1, 0.004)) + b * np.array(step_plant(s2, c2, 0.004))
    scale = max(np.max(np.abs(rhs)), 1.0)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * scale


def test_pwm_examples():
    assert pwm_to_rpm(0) == 4070.3
    assert pwm_to_rpm(PWM_MAX) == pytest.approx(21666.4475, abs=1e-9)
    assert rpm_to_pwm(4070.3) == 0.0


def test_pwm_round_trip():
    pwm = np.random.default_rng(0).uniform(0, PWM_MAX, 1000)
    np.testing.assert_allclose(rpm_to_pwm(pwm_to_rpm(pwm)), pwm, rtol=0, atol=1e-9)


def test_pwm_domain():
    for bad in (-1, PWM_MAX + 1, np.nan):
        with pytest.raises(DomainError):
            pwm_to_rpm(bad)
    with pytest.raises(DomainError):
        rpm_to_pwm(4000.0)
    with pytest.raises(DomainError):
        rpm_to_pwm([5000.0, 1e6])


def test_state_accessors():
    s = DroneState.from_array(np.arange(12.0))
    np.testing.assert_array_equal(s.position, [0, 1, 2])
    np.testing.assert_array_equal(s.rates, [9, 10, 11])
