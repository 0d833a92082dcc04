import numpy as np
import pytest

from kitaevlab.canon import equilibrium_correlations, svd_canonical
from kitaevlab.dynamics import (IntegrationError, QuenchTrajectory, boundary_quench,
                                energy_expectation, evolve_correlations, excitation_density,
                                instantaneous_power, iter_ramp, kibble_zurek_estimate,
                                linear_ramp, max_group_velocity, mean_square_center,
                                nn_correlators, orthogonality_defect, quench_correlations_at,
                                quench_trajectory, ramp_evolve, setup_from_matrices,
                                wavefront_velocity, x_matrix)
from kitaevlab.model import ModelParams, SectorConfig, build_b_matrix, make_sector
from kitaevlab.observables import pair_pair, spinspin_y


def test_tau_zero_recovers_initial_state():
    setup = boundary_quench(ModelParams(u=1.0, L=12), alpha0=0.3)
    c0 = quench_correlations_at(setup, 0.0)
    ref = equilibrium_correlations(setup.pre, warn=False)
    np.testing.assert_allclose(c0.K_ab, ref.K_ab, atol=1e-13)
    np.testing.assert_allclose(c0.K_aa, 0, atol=1e-13)
    np.testing.assert_allclose(c0.K_bb, 0, atol=1e-13)


def test_no_quench_is_stationary():
    B = build_b_matrix(ModelParams(u=0.8, L=10), make_sector("homogeneous-plus", 10)).matrix
    setup = setup_from_matrices(B, B, make_sector("homogeneous-plus", 10))
    ref = quench_correlations_at(setup, 0.0)
    for tau in (0.7, 3.0, 11.0):
        c = quench_correlations_at(setup, tau)
        np.testing.assert_allclose(c.K_ab, ref.K_ab, atol=1e-12)


@pytest.mark.parametrize("U", [1.0, -0.6, 3.0])
def test_x_is_orthogonal_and_energy_conserved(U):
    setup = boundary_quench(ModelParams(u=U, L=20), alpha0=0.2)
    e0 = energy_expectation(setup.post_B, quench_correlations_at(setup, 0.0))
    for tau in (0.5, 4.0, 17.0):
        X = x_matrix(setup, tau)
        assert orthogonality_defect(X) < 1e-12
        e = energy_expectation(setup.post_B, quench_correlations_at(setup, tau))
        assert e == pytest.approx(e0, abs=1e-11)


def test_nn_correlators_match_static_observables():
    sector = SectorConfig.custom((1, -1, 1, 1, -1, -1, 1, 1))
    p = ModelParams(u=1.3, L=8)
    cf = svd_canonical(build_b_matrix(p, sector))
    corr = equilibrium_correlations(cf, warn=False)
    C, S = nn_correlators(corr, sector)
    for i in range(1, 8):
        assert C[i - 1] == pytest.approx(pair_pair(corr, sector, i, i + 1), abs=1e-14)
        assert S[i - 1] == pytest.approx(spinspin_y(corr, sector, i, i + 1), abs=1e-14)


def test_pair_minus_spin_identity():
    # C_i - S_i = r_i r_{i+1} (1 + W_i) / 8 with W the four-point Pfaffian
    setup = boundary_quench(ModelParams(u=0.9, L=16))
    corr = quench_correlations_at(setup, 2.5)
    C, S = nn_correlators(corr, setup.sector)
    g = np.diag(corr.K_ab)
    r = setup.sector.array
    np.testing.assert_allclose(C + S, r[:-1] * r[1:] * (g[:-1] + g[1:]) / 8, atol=1e-12)


def test_mean_square_center_weights():
    L = 5
    f = np.array([1.0, 0, 0, 2.0])
    assert mean_square_center(f, L) == pytest.approx((16 + 2) / 5)


@pytest.fixture(scope="module")
def long_quench():
    setup = boundary_quench(ModelParams(u=1.0, L=200))
    return setup, quench_trajectory(setup, 5.0, dtau=0.5)


def test_boundary_quench_is_local(long_quench):
    _, traj = long_quench
    # far from the boundary nothing moves before the signal arrives
    assert np.abs(traj.C[-1, :100] - traj.C[0, :100]).max() < 1e-6
    assert np.abs(traj.S[-1, :100] - traj.S[0, :100]).max() < 1e-6


def test_light_cone(long_quench):
    setup, traj = long_quench
    v = max_group_velocity(1.0)
    tau = traj.taus[-1]
    front = int(setup.L - 2 * v * tau) - 5
    assert np.abs(traj.C[-1, :front] - traj.C[0, :front]).max() < 1e-4
    assert np.abs(traj.C[-1, -5:] - traj.C[0, -5:]).max() > 1e-4


def test_quench_trajectory_workers_deterministic():
    setup = boundary_quench(ModelParams(u=1.0, L=30))
    a = quench_trajectory(setup, 2.0, dtau=0.25)
    b = quench_trajectory(setup, 2.0, dtau=0.25, workers=3)
    np.testing.assert_array_equal(a.C, b.C)
    np.testing.assert_array_equal(a.S, b.S)


def test_zero_velocity_is_flagged():
    setup = boundary_quench(ModelParams(u=1.0, L=10), alpha0=1.0)
    traj = quench_trajectory(setup, 1.0, dtau=0.25)
    vel = wavefront_velocity(traj, "C")
    assert vel.flagged and np.all(vel.values == 0)


def test_velocity_needs_three_points():
    traj = QuenchTrajectory(np.array([0.0, 0.1]), np.zeros((2, 3)), np.zeros((2, 3)), 4)
    with pytest.raises(ValueError):
        wavefront_velocity(traj, "C")
    with pytest.raises(ValueError):
        traj.R2("X")


def test_negative_tau_rejected():
    with pytest.raises(ValueError):
        quench_correlations_at(boundary_quench(ModelParams(u=1.0, L=4)), -1.0)


def test_max_group_velocity():
    # 2 min(|U|, 2t) for the singular-value band of B
    for U, v in [(0.5, 1.0), (1.0, 2.0), (-1.0, 2.0), (3.0, 4.0), (4.0, 4.0)]:
        assert max_group_velocity(U) == pytest.approx(v, rel=1e-6)


# --------------------------------------------------------------------------
# time-dependent couplings

def small_ramp_setup(L=8):
    return ModelParams(u=0.5, L=L), make_sector("homogeneous-plus", L)


def test_ramp_starts_at_identity():
    p, s = small_ramp_setup()
    (tau, Phi), = list(iter_ramp(p, s, lambda tau: 0.5, [0.0]))
    assert tau == 0.0 and np.array_equal(Phi, np.eye(16))


@pytest.mark.parametrize("method", ["midpoint", "rk4"])
def test_constant_coupling_matches_quench(method):
    p, s = small_ramp_setup()
    pre = build_b_matrix(p.replace(u=1.7), s).matrix
    post = build_b_matrix(p, s).matrix
    setup = setup_from_matrices(pre, post, s)
    grid = np.linspace(0, 3.0, 31)
    init = equilibrium_correlations(setup.pre, warn=False)
    # rk4 accuracy is set by the orthogonality tolerance that triggers step halving
    Phis = ramp_evolve(p, s, lambda tau: 0.5, grid, method=method, substeps=2, ortho_tol=1e-11)
    for k in (10, 30):
        c = evolve_correlations(Phis[k], init, grid[k])
        ref = quench_correlations_at(setup, grid[k])
        np.testing.assert_allclose(c.K_ab, ref.K_ab, atol=1e-8)
        np.testing.assert_allclose(c.K_aa, ref.K_aa, atol=1e-8)


def test_rk4_keeps_orthogonality():
    p, s = small_ramp_setup()
    grid = np.linspace(0, 5, 11)
    for _, Phi in iter_ramp(p, s, lambda tau: 0.5 + 0.3 * tau, grid, method="rk4", ortho_tol=1e-9):
        assert orthogonality_defect(Phi) <= 1e-8


def test_rk4_gives_up():
    p, s = small_ramp_setup()
    with pytest.raises(IntegrationError):
        list(iter_ramp(p, s, lambda tau: 0.5, [0.0, 50.0], method="rk4", ortho_tol=1e-30, max_halvings=1))


def test_nonuniform_grid_rejected():
    p, s = small_ramp_setup()
    with pytest.raises(ValueError):
        list(iter_ramp(p, s, lambda tau: 0.5, [0.0, 0.1, 0.5]))


def test_power_vanishes_without_drive():
    p, s = small_ramp_setup()
    B = build_b_matrix(p, s).matrix
    init = equilibrium_correlations(svd_canonical(B), warn=False)
    assert instantaneous_power(np.eye(16), B, 0.0, init) == 0.0
    with pytest.raises(ValueError):
        instantaneous_power(np.eye(10), B, 1.0, init)


def test_ground_state_has_no_excitations():
    p, s = small_ramp_setup()
    B = build_b_matrix(p, s).matrix
    init = equilibrium_correlations(svd_canonical(B), warn=False)
    assert excitation_density(B, init) == pytest.approx(0.0, abs=1e-12)


def test_adiabatic_limit():
    res = linear_ramp(40, 1000.0, U_start=3.0, U_end=3.2, dtau=0.2, n_out=20, boundary="antiperiodic")
    np.testing.assert_allclose(res.power, res.power_adiabatic, rtol=1e-2)
    assert res.excitation < 1e-4


def test_ramp_bookkeeping():
    res = linear_ramp(20, 4.0, U_end=1.0, dtau=0.2, n_out=5)
    assert res.taus[0] == 0 and res.taus[-1] == pytest.approx(4.0)
    np.testing.assert_allclose(res.U, res.taus / 4.0)
    assert res.excess_power.shape == res.power.shape
    assert 0 < res.excitation < 0.5


def test_kibble_zurek_estimate():
    assert kibble_zurek_estimate(8.0) == pytest.approx(1 / (2 * np.pi) / 8 / 8)
