import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm as scipy_expm

from hillsim.cw import (
    OrbitalContext,
    TransitionMode,
    bk_disagreements,
    bk_validation_report,
    build_continuous_system,
    closed_form_state,
    closure_residuals,
    cw_derivative,
    discrete_transition,
    nmt_initial_conditions,
    oracle_state_transition,
    paper_literal_transition,
    propagate_continuous,
    propagate_discrete,
)
from hillsim.errors import InputError, IntegrationError
from hillsim.trajectory import blockwise_relative_error

N = 0.001027


def test_context_validation():
    with pytest.raises(InputError):
        OrbitalContext(0.0, 1.0)
    with pytest.raises(InputError):
        OrbitalContext(N, -1.0)
    assert OrbitalContext().period == pytest.approx(6117.99933, abs=1e-4)


# continuous system

def test_a_matrix_entries(ctx):
    A = build_continuous_system(ctx).A
    assert A[3, 0] == pytest.approx(3.164187e-6, rel=1e-12)
    assert A[3, 4] == pytest.approx(2 * N)
    assert A[4, 3] == pytest.approx(-2 * N)
    assert A[5, 2] == pytest.approx(-(N**2))
    np.testing.assert_array_equal(A[:3, 3:], np.eye(3))
    assert np.count_nonzero(A) == 7


def test_b_matrix_unit_mass(ctx):
    B = build_continuous_system(ctx).B
    np.testing.assert_array_equal(B[3:], np.eye(3))
    np.testing.assert_array_equal(B[:3], 0)
    B2 = build_continuous_system(OrbitalContext(N, 4.0)).B
    np.testing.assert_array_equal(B2[3:], np.eye(3) / 4)


def test_small_n_is_double_integrator():
    A = build_continuous_system(OrbitalContext(1e-300, 1.0)).A
    expected = np.zeros((6, 6))
    expected[:3, 3:] = np.eye(3)
    np.testing.assert_allclose(A, expected, rtol=0, atol=1e-290)


def test_derivative_examples(ctx, nmt_ic):
    np.testing.assert_array_equal(cw_derivative(np.zeros(6), np.zeros(3), ctx), 0)
    d = cw_derivative(nmt_ic, np.zeros(3), ctx)
    # 3 n^2 * 800 + 2 n * (-2 n * 800) by hand
    assert d[3] == pytest.approx(-8.437832e-4, rel=1e-6)
    d = cw_derivative(np.zeros(6), [1.0, 0, 0], ctx)
    np.testing.assert_array_equal(d, [0, 0, 0, 1.0, 0, 0])


# closed-form oracle sanity: it must satisfy the ODE itself

def test_closed_form_oracle_satisfies_ode(ctx):
    rng = np.random.default_rng(3)
    A = np.array(build_continuous_system(ctx).A)
    for _ in range(5):
        ic = rng.normal(size=6) * [100, 100, 100, 0.1, 0.1, 0.1]
        t = rng.uniform(0, 5000)
        h = 1e-2
        fd = (closed_form_state(ic, t + h, N) - closed_form_state(ic, t - h, N)) / (2 * h)
        np.testing.assert_allclose(fd[0], A @ closed_form_state(ic, t, N)[0], rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(closed_form_state(ic, 0.0, N)[0], ic, rtol=1e-14, atol=1e-12)


# RK45

def test_rk45_one_period_returns(ctx, nmt_ic):
    traj = propagate_continuous(nmt_ic, None, ctx, (0.0, ctx.period))
    assert traj.frame == "space"
    assert blockwise_relative_error(traj.states[-1], nmt_ic) < 1e-6


def test_rk45_zero_ic_stays_zero(ctx):
    traj = propagate_continuous(np.zeros(6), None, ctx, (0.0, 1000.0))
    assert np.all(traj.states == 0)


def test_rk45_out_of_plane_harmonic(ctx):
    ts = np.linspace(0, 2 * ctx.period, 500)
    traj = propagate_continuous([0, 0, 1, 0, 0, 0], None, ctx, (0.0, ts[-1]), t_eval=ts)
    np.testing.assert_allclose(traj.states[:, 2], np.cos(N * ts), atol=1e-8)
    assert np.all(traj.states[:, [0, 1, 3, 4]] == 0)


def test_rk45_dense_output_matches_closed_form(ctx, nmt_ic):
    traj = propagate_continuous(nmt_ic, None, ctx, (0.0, 3 * ctx.period))
    tq = np.random.default_rng(0).uniform(0, 3 * ctx.period, 400)
    assert blockwise_relative_error(traj.at(tq), closed_form_state(nmt_ic, tq, N)) < 1e-7


def test_rk45_agrees_with_scipy(ctx):
    ic = np.array([120.0, -40.0, 30.0, 0.05, 0.02, -0.01])
    A = np.array(build_continuous_system(ctx).A)
    ref = solve_ivp(lambda t, y: A @ y, (0, 4000), ic, rtol=1e-11, atol=1e-13, method="DOP853")
    ours = propagate_continuous(ic, None, ctx, (0.0, 4000.0))
    assert blockwise_relative_error(ours.states[-1], ref.y[:, -1]) < 1e-8


def test_rk45_forced_path_constant_thrust(ctx):
    # constant thrust from rest: exact answer is the ZOH input matrix times u
    u = np.array([0.01, -0.02, 0.005])
    T = 500.0
    traj = propagate_continuous(np.zeros(6), lambda t: u, ctx, (0.0, T))
    expected = discrete_transition(ctx, T).B_k @ u
    np.testing.assert_allclose(traj.states[-1], expected, rtol=1e-7, atol=1e-9)


def test_rk45_forced_path_matches_kernel_with_zero_thrust(ctx, nmt_ic):
    a = propagate_continuous(nmt_ic, lambda t: (0.0, 0.0, 0.0), ctx, (0.0, ctx.period))
    b = propagate_continuous(nmt_ic, None, ctx, (0.0, ctx.period))
    assert blockwise_relative_error(a.states[-1], b.states[-1]) < 1e-12


def test_rk45_degenerate_span(ctx, nmt_ic):
    traj = propagate_continuous(nmt_ic, None, ctx, (5.0, 5.0))
    assert len(traj) == 1
    np.testing.assert_array_equal(traj.states[0], nmt_ic)


def test_rk45_bad_inputs(ctx, nmt_ic):
    with pytest.raises(InputError):
        propagate_continuous(nmt_ic, None, ctx, (10.0, 0.0))
    with pytest.raises(InputError):
        propagate_continuous(nmt_ic, None, ctx, (0.0, 10.0), rtol=0.0)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_rk45_underflow_reports_time(ctx):
    def blowup(t):
        return (1e300 / max(1.0 - t, 1e-300), 0.0, 0.0)

    with pytest.raises(IntegrationError) as err:
        propagate_continuous(np.zeros(6), blowup, ctx, (0.0, 2.0), rtol=1e-12, atol=1e-12)
    assert 0.0 < err.value.t <= 2.0
    assert "t=" in str(err.value)


# discrete transition

def test_discrete_dt_zero_identity(ctx):
    for mode in TransitionMode:
        tr = discrete_transition(ctx, 0.0, mode)
        np.testing.assert_array_equal(tr.A_k, np.eye(6))
        np.testing.assert_array_equal(tr.B_k, np.zeros((6, 3)))


def test_literal_a_k_at_half_orbit(ctx):
    A_k, _ = paper_literal_transition(N, 1.0, np.pi / N)
    assert A_k[0, 0] == pytest.approx(7.0, abs=1e-12)


def test_oracle_a_k_matches_literal(ctx):
    for nt in np.linspace(0, 4 * np.pi, 57):
        dt = nt / N
        np.testing.assert_allclose(
            discrete_transition(ctx, dt, "oracle").A_k,
            discrete_transition(ctx, dt, "paper-literal").A_k,
            rtol=0, atol=1e-9,
        )


def test_oracle_a_k_matches_scipy_expm(ctx):
    A = np.array(build_continuous_system(ctx).A)
    for dt in (1.0, 250.0, 3000.0):
        np.testing.assert_allclose(oracle_state_transition(N, dt), scipy_expm(A * dt), rtol=1e-10, atol=1e-9)


def test_oracle_b_k_matches_augmented_exponential():
    # independent route: exp([[A, B], [0, 0]] dt) carries the ZOH input matrix
    for m in (1.0, 3.0):
        c = OrbitalContext(N, m)
        sys = build_continuous_system(c)
        for dt in (0.1, 10.0, 900.0, 5000.0):
            M = np.zeros((9, 9))
            M[:6, :6] = sys.A * dt
            M[:6, 6:] = sys.B * dt
            ref = scipy_expm(M)[:6, 6:]
            np.testing.assert_allclose(discrete_transition(c, dt).B_k, ref, rtol=1e-9, atol=1e-9 * max(1, dt))


def test_literal_b_k_shares_verified_entries(ctx):
    # rows the published table gets right (velocity rows, z channel, y position first column)
    dt = 37.0
    lit = discrete_transition(ctx, dt, "paper-literal").B_k
    ora = discrete_transition(ctx, dt, "oracle").B_k
    for i, j in [(1, 0), (1, 1), (2, 2), (3, 0), (3, 1), (4, 0), (5, 2)]:
        assert lit[i, j] == pytest.approx(ora[i, j], rel=1e-8, abs=1e-10)


def test_bk_report_lists_disagreements(ctx):
    bad = bk_disagreements(ctx, 10.0)
    assert {(i, j) for i, j, *_ in bad} == {(0, 0), (0, 1), (4, 1)}
    text = bk_validation_report(ctx, 10.0)
    assert "3 of 18 entries disagree" in text
    assert "B_k[4][1]" in text


def test_transition_negative_dt(ctx):
    with pytest.raises(InputError):
        discrete_transition(ctx, -1.0)


# discrete propagation

def test_discrete_zero(ctx):
    traj = propagate_discrete(np.zeros(6), None, ctx, 10.0, 50)
    assert len(traj) == 51
    assert np.all(traj.states == 0)


def test_discrete_periodicity(ctx, nmt_ic):
    traj = propagate_discrete(nmt_ic, None, ctx, ctx.period / 1000, 1000)
    assert blockwise_relative_error(traj.states[-1], nmt_ic) < 1e-6


def test_discrete_matches_continuous(ctx, nmt_ic):
    dt = ctx.period / 1000
    disc = propagate_discrete(nmt_ic, None, ctx, dt, 1000)
    cont = propagate_continuous(nmt_ic, None, ctx, (0.0, ctx.period))
    assert blockwise_relative_error(disc.states, cont.at(disc.times)) < 1e-6


def test_discrete_with_thrust_matches_forced_rk45(ctx):
    dt = 20.0
    steps = 30
    U = np.random.default_rng(5).uniform(-0.01, 0.01, size=(steps, 3))
    disc = propagate_discrete(np.zeros(6), U, ctx, dt, steps)

    def u_of_t(t):
        return U[min(int(t // dt), steps - 1)]

    cont = propagate_continuous(np.zeros(6), u_of_t, ctx, (0.0, steps * dt), rtol=1e-11, atol=1e-13,
                                first_step=0.5)
    np.testing.assert_allclose(disc.states[-1], cont.states[-1], rtol=1e-5, atol=1e-6)


def test_discrete_input_validation(ctx):
    with pytest.raises(InputError):
        propagate_discrete(np.zeros(6), np.zeros((3, 3)), ctx, 1.0, 4)
    with pytest.raises(InputError):
        propagate_discrete(np.zeros(6), None, ctx, 0.0, 4)
    with pytest.raises(InputError):
        propagate_discrete(np.zeros(6), None, ctx, 1.0, -1)


# NMT construction

def test_nmt_initial_conditions(ctx):
    s = nmt_initial_conditions(800, 0.16, ctx=ctx)
    assert s.y == pytest.approx(311.587147, rel=1e-8)
    assert s.vy == pytest.approx(-1.6432, rel=1e-12)
    assert tuple(nmt_initial_conditions(0, 0, 0, 0, ctx)) == (0, 0, 0, 0, 0, 0)
    s = nmt_initial_conditions(800, 0.16, 1.0, 1.0, ctx)
    assert (s.z, s.vz) == (1.0, 1.0)


def test_closure_residuals(ctx):
    assert closure_residuals(nmt_initial_conditions(800, 0.16, ctx=ctx), ctx) == pytest.approx((0, 0), abs=1e-12)
    r1, r2 = closure_residuals([800, 0, 0, 0, 0, 0], ctx)
    assert r1 == pytest.approx(1.6432)
    assert r2 == 0
    assert closure_residuals(np.zeros(6), ctx) == (0, 0)


# properties

finite = st.floats(-1e3, 1e3, allow_nan=False)
small_v = st.floats(-1.0, 1.0, allow_nan=False)


@settings(max_examples=25, deadline=None)
@given(x0=finite, vx0=small_v, z0=finite, vz0=small_v, k=st.integers(1, 3))
def test_property_periodicity_discrete(x0, vx0, z0, vz0, k):
    ctx = OrbitalContext()
    ic = np.array(nmt_initial_conditions(x0, vx0, z0, vz0, ctx))
    traj = propagate_discrete(ic, None, ctx, ctx.period / 500, 500 * k)
    scale = max(np.max(np.abs(ic[:3])), 1.0)
    assert np.max(np.abs(traj.states[-1, :3] - ic[:3])) < 1e-8 * scale


@settings(max_examples=10, deadline=None)
@given(x0=finite, vx0=small_v, z0=finite, vz0=small_v, k=st.integers(1, 3))
def test_property_periodicity_rk45(x0, vx0, z0, vz0, k):
    ctx = OrbitalContext()
    ic = np.array(nmt_initial_conditions(x0, vx0, z0, vz0, ctx))
    traj = propagate_continuous(ic, None, ctx, (0.0, k * ctx.period))
    scale = max(np.max(np.abs(ic[:3])), 1.0)
    # integrator tolerance (1e-9) times ten, relative to the orbit size
    assert np.max(np.abs(traj.states[-1, :3] - ic[:3])) < 1e-8 * scale * k


@settings(max_examples=25, deadline=None)
@given(st.lists(finite, min_size=2, max_size=2), st.lists(small_v, min_size=2, max_size=2))
def test_property_z_decoupling(xy, vxy):
    ctx = OrbitalContext()
    ic = np.array([xy[0], xy[1], 0.0, vxy[0], vxy[1], 0.0])
    U = np.zeros((40, 3))
    U[:, :2] = 0.01
    disc = propagate_discrete(ic, U, ctx, 50.0, 40)
    assert np.all(np.abs(disc.states[:, [2, 5]]) < 1e-12)
    cont = propagate_continuous(ic, lambda t: (0.01, 0.01, 0.0), ctx, (0.0, 2000.0))
    assert np.all(np.abs(cont.states[:, [2, 5]]) < 1e-12)


@settings(max_examples=25, deadline=None)
@given(
    st.lists(finite, min_size=6, max_size=6),
    st.lists(finite, min_size=6, max_size=6),
    st.floats(-5, 5),
    st.floats(-5, 5),
)
def test_property_superposition(s1, s2, a, b):
    ctx = OrbitalContext()
    s1, s2 = np.array(s1), np.array(s2)
    dt, steps = 60.0, 100
    lhs = propagate_discrete(a * s1 + b * s2, None, ctx, dt, steps).states
    rhs = a * propagate_discrete(s1, None, ctx, dt, steps).states + b * propagate_discrete(s2, None, ctx, dt, steps).states
    scale = max(np.max(np.abs(rhs)), 1.0)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * scale


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 4 * np.pi))
def test_property_oracle_equals_literal(nt):
    dt = nt / N
    a = oracle_state_transition(N, dt)
    b, _ = paper_literal_transition(N, 1.0, dt)
    assert np.max(np.abs(a - b)) < 1e-9
