import math

import numpy as np
import pytest

from multilink.dynamics import (
    AngleSystemState,
    PoseState,
    ReducedState,
    angle_coeffs_at_phi,
    angle_rates,
    angle_system_rhs,
    attachment_positions,
    constraint_residuals,
    energy,
    make_angle_system_rhs,
    make_manifold_rhs,
    make_reduced_rhs,
    make_theta_rhs,
    manifold_rhs,
    pose_rhs,
    reduced_rhs_phi,
    reduced_rhs_theta,
    residual_max_series,
    residuals_from_rates,
    simulate,
)
from multilink.integrator import IntegratorOptions, integrate
from multilink.model import (
    VehicleParams,
    chain_matrix,
    derive_params,
    random_vehicle,
    sine_rotor,
    theta_from_phi,
    zero_rotor,
)


def brute_force_rhs(t, y, p, d, rotor):
    """Literal transcription of the reduced equations, kept independent of
    the production kernel (explicit sums, sin(2 theta) form)."""
    n = p.n_links
    v1, om = y[0], y[1]
    phi = y[2:]
    theta = [(-1.0) ** i * phi[i]
             + 2.0 * sum((-1.0) ** j * phi[j] for j in range(i))
             for i in range(n)]
    mu, c = d.coupling, p.c
    f0 = d.mass + sum(mu[i] * math.sin(theta[i]) ** 2 for i in range(n))
    f1 = sum(mu[i] * math.sin(2 * theta[i])
             * (math.sin(theta[i]) / (2 * c[i])
                + sum(math.sin(theta[j]) / c[j] for j in range(i)))
             for i in range(n))
    f2 = 0.5 * sum(mu[i] * math.sin(2 * theta[i]) for i in range(n))
    b, inertia = d.static_moment, d.inertia
    out = [(b * om ** 2 + f1 * v1 ** 2 + f2 * om * v1) / f0,
           (-b * om * v1 - rotor.rate(t)) / inertia]
    out += [(-1.0) ** (i + 1) * (v1 / c[i]) * math.sin(theta[i]) - om
            for i in range(n)]
    return np.array(out)


def test_reduced_rhs_equilibrium(reference_vehicle, reference_derived):
    y = np.array([1.0, 0.0, 0.0, 0.0])
    dy = reduced_rhs_phi(0.0, y, reference_vehicle, reference_derived,
                         zero_rotor())
    assert np.all(dy == 0.0)


def test_reduced_rhs_decoupled_case():
    from multilink.model import zero_coupling_inertias

    m = np.array([1.2, 1.2])
    a = np.array([0.1, 0.2])
    c = np.array([1.05, 1.10])
    p = VehicleParams(masses=[1.0, *m],
                      inertias=[1.5, *zero_coupling_inertias(m, a, c)],
                      a0=0.7, a=a, c=c)
    d = derive_params(p)
    dy = reduced_rhs_phi(0.0, np.array([0.0, 1.0, 0.4, -0.2]), p, d,
                         zero_rotor())
    assert dy[0] == pytest.approx(d.static_moment / d.mass, abs=1e-15)
    assert dy[1] == 0.0


def test_reduced_rhs_independent_oracle(reference_vehicle, reference_derived):
    rotor = sine_rotor(0.05, 1.0)
    # the numerical-experiment initial state, then random states
    states = [np.array([10.0, 1.0, 0.5, 0.5])]
    rng = np.random.default_rng(8)
    states += [np.concatenate((rng.normal(0, 3, 2), rng.uniform(-3, 3, 2)))
               for _ in range(100)]
    for t in (0.0, 0.37):
        for y in states:
            mine = reduced_rhs_phi(t, y, reference_vehicle,
                                   reference_derived, rotor)
            ref = brute_force_rhs(t, y, reference_vehicle,
                                  reference_derived, rotor)
            assert mine == pytest.approx(ref, abs=1e-12)


def test_reduced_rhs_oracle_other_sizes():
    rng = np.random.default_rng(9)
    rotor = sine_rotor(0.2, 0.7)
    for n in (0, 1, 3, 5):
        p = random_vehicle(rng, n)
        d = derive_params(p)
        for _ in range(20):
            y = np.concatenate((rng.normal(0, 2, 2), rng.uniform(-3, 3, n)))
            assert reduced_rhs_phi(0.9, y, p, d, rotor) == pytest.approx(
                brute_force_rhs(0.9, y, p, d, rotor), abs=1e-12)


def test_theta_chart_consistency(reference_vehicle, reference_derived):
    # staggered-chart angle rates equal the chain matrix applied to the
    # relative-angle rates
    rotor = sine_rotor(0.05, 1.0)
    b = chain_matrix(2)
    rng = np.random.default_rng(10)
    for _ in range(100):
        y = np.concatenate((rng.normal(0, 2, 2), rng.uniform(-3, 3, 2)))
        dy = reduced_rhs_phi(0.2, y, reference_vehicle, reference_derived,
                             rotor)
        y_th = np.concatenate((y[:2], theta_from_phi(y[2:])))
        dy_th = reduced_rhs_theta(0.2, y_th, reference_vehicle,
                                  reference_derived, rotor)
        assert dy_th[:2] == pytest.approx(dy[:2], abs=1e-12)
        assert dy_th[2:] == pytest.approx(b @ dy[2:], abs=1e-12)


def test_theta_chart_trivial(reference_vehicle, reference_derived):
    dy = reduced_rhs_theta(0.0, np.array([2.0, 0.0, 0.0, 0.0]),
                           reference_vehicle, reference_derived, zero_rotor())
    assert np.all(dy[2:] == 0.0)


def test_theta_chart_single_link():
    p = VehicleParams(masses=[1.0, 1.0], inertias=[1.0, 1.0], a0=0.5,
                      a=[0.2], c=[1.3])
    d = derive_params(p)
    v1, om, th = 1.7, -0.4, 0.8
    dy = reduced_rhs_theta(0.0, np.array([v1, om, th]), p, d, zero_rotor())
    assert dy[2] == pytest.approx(-(v1 / 1.3) * math.sin(th) - om, abs=1e-14)


def test_pose_rhs():
    assert pose_rhs(PoseState(0, 0, math.pi / 2), 2.0, 0.3) == pytest.approx(
        [0.0, 2.0, 0.3], abs=1e-15)
    assert np.all(pose_rhs(PoseState(1, 2, 0.7), 0.0, 0.0) == 0.0)
    assert pose_rhs(PoseState(0, 0, 0.0), 1.0, 0.0) == pytest.approx(
        [1.0, 0.0, 0.0], abs=0)


def test_attachment_positions_straight_chain():
    p = VehicleParams(masses=[1, 1, 1], inertias=[1, 1, 1], a0=0.5,
                      a=[0.1, 0.1], c=[1.0, 1.5])
    pts = attachment_positions(PoseState(0, 0, 0), [0.0, 0.0], p)
    assert pts == pytest.approx(np.array([[0, 0], [-1, 0], [-3.5, 0]]),
                                abs=1e-15)


def test_attachment_positions_single():
    p = VehicleParams(masses=[1.0], inertias=[1.0], a0=0.0, a=[], c=[])
    pts = attachment_positions(PoseState(2.0, -1.0, 0.3), [], p)
    assert pts.shape == (1, 2)
    assert pts[0] == pytest.approx([2.0, -1.0], abs=0)


def test_attachment_positions_folded():
    p = VehicleParams(masses=[1, 1], inertias=[1, 1], a0=0.5, a=[0.1], c=[1.0])
    pts = attachment_positions(PoseState(0, 0, 0), [math.pi], p)
    assert pts[1] == pytest.approx([1.0, 0.0], abs=1e-12)


def test_constraint_residuals_straight_line(reference_vehicle):
    for v1 in (0.0, 1.0, -2.5):
        res = constraint_residuals(PoseState(0, 0, 0.4),
                                   ReducedState(v1, 0.0, [0.0, 0.0]),
                                   reference_vehicle)
        assert np.all(np.abs(res) < 1e-15)


def test_constraint_residuals_random_states():
    rng = np.random.default_rng(12)
    for n in (1, 2, 4):
        p = random_vehicle(rng, n)
        for _ in range(100 // n):
            state = ReducedState(float(rng.normal(0, 3)),
                                 float(rng.normal(0, 2)),
                                 rng.uniform(-math.pi, math.pi, n))
            pose = PoseState(*rng.normal(0, 5, 2), float(rng.uniform(-4, 4)))
            res = constraint_residuals(pose, state, p)
            assert np.max(np.abs(res)) < 1e-12


def test_constraint_fault_injection(reference_vehicle):
    # adding eps to ydot at psi = 0 shifts the sleigh residual by exactly eps
    state = ReducedState(1.3, 0.2, [0.4, -0.7])
    eps = 1e-3
    rates = angle_rates(state.v1, state.omega, state.phi, reference_vehicle)
    res = residuals_from_rates(0.0, state.phi, state.v1, 0.0 + eps,
                               state.omega, rates, reference_vehicle.c)
    assert res[0] == pytest.approx(eps, abs=1e-15)


def test_energy_examples(reference_vehicle, reference_derived):
    e = energy(ReducedState(1.0, 0.0, [0.0, 0.0]), reference_vehicle,
               reference_derived)
    assert e == pytest.approx(1.7, abs=1e-12)
    assert energy(ReducedState(0.0, 0.0, [0.3, 0.8]), reference_vehicle,
                  reference_derived) == 0.0


def test_energy_conservation_random_params():
    rng = np.random.default_rng(21)
    p = random_vehicle(rng, 3)
    d = derive_params(p)
    traj = simulate(p, d, zero_rotor(),
                    ReducedState(1.0, 0.6, rng.uniform(-2, 2, 3)), PoseState(),
                    IntegratorOptions(t_end=200.0, rtol=1e-10, atol=1e-12))
    drift = np.max(np.abs(traj.energy - traj.energy[0])) / traj.energy[0]
    assert drift < 1e-7
    assert np.max(traj.residual_max) < 1e-10


def test_angle_system_fixed_points(reference_vehicle, reference_derived):
    for ang in (0.0, math.pi):
        dy = angle_system_rhs(0.0, np.array([ang, 0.0, 0.0]),
                              reference_vehicle, reference_derived)
        assert abs(dy[0]) < 1e-15


def test_angle_system_formula(reference_vehicle, reference_derived):
    # hand evaluation of the rescaled equations at a generic point
    rng = np.random.default_rng(13)
    for _ in range(50):
        ang = float(rng.uniform(0, 2 * math.pi))
        phi = rng.uniform(-3, 3, 2)
        y = np.concatenate(([ang], phi))
        dy = angle_system_rhs(0.0, y, reference_vehicle, reference_derived)
        d = reference_derived
        theta = theta_from_phi(phi)
        m_eff = d.mass + float(d.coupling @ np.sin(theta) ** 2)
        assert dy[0] == pytest.approx(-(d.static_moment / d.inertia)
                                      * math.sin(ang), abs=1e-14)
        for i in range(2):
            expect = ((-1.0) ** (i + 1) / reference_vehicle.c[i] \
                      * math.cos(ang) * math.sin(theta[i])
                      - math.sqrt(m_eff / d.inertia) * math.sin(ang))
            assert dy[1 + i] == pytest.approx(expect, abs=1e-13)


def test_angle_state_energy_identity(reference_vehicle, reference_derived):
    rng = np.random.default_rng(14)
    for _ in range(20):
        v1, om = rng.normal(0, 2, 2)
        phi = rng.uniform(-3, 3, 2)
        st = AngleSystemState.from_velocities(v1, om, phi, reference_vehicle,
                                              reference_derived)
        v1b, omb = st.velocities(reference_vehicle, reference_derived)
        assert (v1b, omb) == pytest.approx((v1, om), rel=1e-12, abs=1e-12)
        assert st.energy == pytest.approx(
            energy(ReducedState(v1, om, phi), reference_vehicle,
                   reference_derived), rel=1e-13)


def test_manifold_fixed_points():
    p = VehicleParams(masses=[1, 1, 1], inertias=[1, 1, 1], a0=0.5,
                      a=[0.1, 0.1], c=[1.0, 1.5])
    for sign in (1, -1):
        assert np.all(manifold_rhs(0.0, np.zeros(2), sign, p) == 0.0)
        dy = manifold_rhs(0.0, np.array([math.pi, math.pi]), sign, p)
        assert np.max(np.abs(dy)) < 1e-15


def test_manifold_time_reversal():
    p = VehicleParams(masses=[1, 1, 1], inertias=[1, 1, 1], a0=0.5,
                      a=[0.1, 0.1], c=[1.0, 1.5])
    rng = np.random.default_rng(15)
    for _ in range(100):
        phi = rng.uniform(-math.pi, math.pi, 2)
        fwd = manifold_rhs(0.0, phi, 1, p)
        bwd = manifold_rhs(0.0, phi, -1, p)
        assert np.all(fwd == -bwd)


def test_manifold_sign_validation():
    p = VehicleParams(masses=[1, 1], inertias=[1, 1], a0=0.5, a=[0.1], c=[1.0])
    with pytest.raises(ValueError):
        make_manifold_rhs(p, 0)


def test_chart_equivalence_trajectories(reference_vehicle, reference_derived):
    # the two charts integrate to the same motion: map phi-chart samples
    # through the angle change and compare against a theta-chart run
    rotor = sine_rotor(0.05, 1.0)
    y0 = np.array([1.5, 0.3, 0.4, -0.8])
    t_eval = np.linspace(0.0, 50.0, 2501)
    opts = IntegratorOptions(t_end=50.0, rtol=1e-10, atol=1e-12)
    sol_phi = integrate(make_reduced_rhs(reference_vehicle, reference_derived,
                                         rotor), y0, opts, t_eval=t_eval)
    y0_th = np.concatenate((y0[:2], theta_from_phi(y0[2:])))
    sol_th = integrate(make_theta_rhs(reference_vehicle, reference_derived,
                                      rotor), y0_th, opts, t_eval=t_eval)
    mapped = np.array([np.concatenate((s[:2], theta_from_phi(s[2:])))
                       for s in sol_phi.states])
    assert np.max(np.abs(mapped - sol_th.states)) < 1e-8


def test_velocity_angle_monotone(reference_vehicle, reference_derived):
    # on rotor-free trajectories the velocity angle decays strictly toward 0
    # whenever it starts inside (0, pi)
    y0 = np.array([math.sqrt(2 * 1.0 / 3.4), 0.0, 0.3, -0.5])  # ang near 0+
    st = AngleSystemState.from_velocities(0.4, 0.9, [0.3, -0.5],
                                          reference_vehicle, reference_derived)
    assert 0.0 < st.velocity_angle < math.pi
    rhs = make_angle_system_rhs(reference_vehicle, reference_derived)
    sol = integrate(rhs, np.concatenate(([st.velocity_angle], st.phi)),
                    IntegratorOptions(t_end=40.0, rtol=1e-10, atol=1e-12))
    ang = sol.states[:, 0]
    assert np.all(np.diff(ang) < 0.0)
    assert ang[-1] < 1e-3


def test_residual_series_matches_scalar(reference_vehicle, reference_derived):
    rng = np.random.default_rng(16)
    v1 = rng.normal(0, 2, 40)
    om = rng.normal(0, 1, 40)
    phi = rng.uniform(-3, 3, (40, 2))
    psi = rng.uniform(-4, 4, 40)
    series = residual_max_series(v1, om, phi, psi, reference_vehicle)
    for i in range(40):
        res = constraint_residuals(PoseState(0, 0, psi[i]),
                                   ReducedState(v1[i], om[i], phi[i]),
                                   reference_vehicle)
        assert series[i] == pytest.approx(np.max(np.abs(res)), abs=1e-13)


def test_simulate_diagnostics(reference_vehicle, reference_derived):
    traj = simulate(reference_vehicle, reference_derived, zero_rotor(),
                    ReducedState(1.0, 0.5, [0.3, -0.4]), PoseState(),
                    IntegratorOptions(t_end=10.0, rtol=1e-10, atol=1e-12))
    assert traj.n_links == 2
    assert traj.times[0] == 0.0 and traj.times[-1] == 10.0
    assert np.all(np.diff(traj.times) > 0)
    assert np.all(traj.rotor_momentum == 0.0)
    st = traj.state_at(3)
    assert st.v1 == traj.v1[3] and st.phi.shape == (2,)
    # pose actually moves
    assert abs(traj.x[-1]) > 0.5
