import numpy as np
import pytest

from kitaevlab.model import ModelParams, SectorConfig, build_b_matrix, sector_offset
from kitaevlab.canon import svd_canonical
from kitaevlab.observables import (magnetization_y, pair_pair, parity_zp, singlet_onsite,
                                   spinspin_y)
from kitaevlab.oracle import (UP, DOWN, FockOperatorSet, OracleError, build_full_hamiltonian,
                              commutator_norm, ed_expectation, ed_ground_sector,
                              fermion_parity, hamiltonian_from_params, pair_pair_operator,
                              particle_hole_parity, r_operators, sector_energies,
                              singlet_operator, spin_ladder_check, spin_swap, spinspin_operator,
                              total_spin)

from conftest import ground


@pytest.fixture(scope="module")
def fock4():
    return FockOperatorSet(4)


@pytest.fixture(scope="module")
def R4(fock4):
    return r_operators(fock4)


def test_anticommutation(fock4):
    f = fock4
    I = f.identity.toarray()
    for (j, s) in [(1, UP), (2, DOWN), (4, UP)]:
        for (k, q) in [(1, UP), (1, DOWN), (3, DOWN), (4, UP)]:
            acomm = (f.c(j, s) @ f.cdag(k, q) + f.cdag(k, q) @ f.c(j, s)).toarray()
            np.testing.assert_allclose(acomm, I if (j, s) == (k, q) else 0 * I, atol=1e-14)
            acc = (f.c(j, s) @ f.c(k, q) + f.c(k, q) @ f.c(j, s)).toarray()
            assert np.abs(acc).max() < 1e-14


def test_two_site_spectrum():
    fock = FockOperatorSet(2)
    for U, energy, degeneracy in [(0.0, -2.0, 4), (1.0, -2 * np.sqrt(2), 2)]:
        e = np.linalg.eigvalsh(build_full_hamiltonian(2, 1.0, U=U, fock=fock))
        assert e[0] == pytest.approx(energy)
        assert np.sum(np.abs(e - e[0]) < 1e-9) == degeneracy


@pytest.mark.parametrize("kw", [
    {"U": 0.8},
    {"U": [0.3, -1.0, 2.0, 0.5], "lam": [0.4, -0.2]},
    {"U": 1.1, "delta0": 0.6, "h_vec": (0, -0.3, 0)},
])
def test_conserved_charges(fock4, R4, kw):
    H = build_full_hamiltonian(4, fock=fock4, **kw)
    for R in R4:
        assert commutator_norm(H, R) < 1e-12
        np.testing.assert_allclose(R @ R, np.eye(R.shape[0]), atol=1e-12)
    assert commutator_norm(H, fermion_parity(fock4)) < 1e-12


def test_discrete_symmetries(fock4):
    W = spin_swap(fock4)
    zp = particle_hole_parity(fock4)
    np.testing.assert_allclose(W.conj().T @ W, np.eye(W.shape[0]), atol=1e-12)
    H = build_full_hamiltonian(4, U=0.7, lam=0.2, fock=fock4)
    assert commutator_norm(H, W) < 1e-12
    assert commutator_norm(H, zp) < 1e-12
    assert commutator_norm(build_full_hamiltonian(4, U=0.7, delta0=0.5, fock=fock4), W) > 0.1
    assert commutator_norm(build_full_hamiltonian(4, U=0.7, h_vec=(0, 0.4, 0), fock=fock4), W) > 0.1
    assert commutator_norm(build_full_hamiltonian(4, U=0.7, mu=0.3, fock=fock4), zp) > 0.1
    Hz = build_full_hamiltonian(4, delta_up=0.0, delta_down=0.0, U=0.7, fock=fock4)
    assert commutator_norm(Hz, total_spin(fock4, "y")) < 1e-12


def test_spin_swap_flips_charges(fock4, R4):
    W = spin_swap(fock4)
    for R in R4:
        np.testing.assert_allclose(W @ R @ W.conj().T, -R, atol=1e-12)


@pytest.mark.parametrize("params", [
    ModelParams(u=0.8, L=4),
    ModelParams(u=-1.5, lam=0.3, L=4),
    ModelParams(u=[0.5, 2.0, -0.4, 1.0], lam=0.7, delta0=0.4, h=0.3, L=4),
    ModelParams(u=2.5, lam=-0.5, delta0=-0.2, h=0.6, L=4),
])
def test_sector_energies_match_solver(fock4, R4, params):
    H = hamiltonian_from_params(params, fock4)
    ed = sector_energies(H, R4)
    assert len(ed) == 16
    for r, e in ed.items():
        cf = svd_canonical(build_b_matrix(params, SectorConfig.custom(r)))
        assert cf.energy == pytest.approx(e, abs=1e-10), r


def test_c0_splits_flip_partners(fock4, R4):
    # with Delta0 + h/2 = 0 the boundary only enters through c0 r_L
    p = ModelParams(u=0.9, delta0=0.3, h=-0.6, L=4)
    ed = sector_energies(hamiltonian_from_params(p, fock4), R4)
    r = (1, -1, 1, 1)
    flipped = tuple(-x for x in r)
    assert ed[r] - ed[flipped] == pytest.approx(2 * p.c0 * r[-1], abs=1e-12)


@pytest.mark.parametrize("U, lam, sector", [
    (1.0, 0.0, (1, 1, 1, 1)),
    (-2.5, 0.3, (1, 1, 1, -1)),
    (3.0, 0.0, (-1, 1, 1, -1)),
    (0.6, -0.4, (1, -1, 1, -1)),
])
def test_observables_against_ed(fock4, R4, U, lam, sector):
    p = ModelParams(u=U, lam=lam, L=4)
    (state,) = ed_ground_sector(hamiltonian_from_params(p, fock4), R4, target=sector)
    _, corr, s = ground(p, SectorConfig.custom(sector))
    for j in range(1, 5):
        assert ed_expectation(state, singlet_operator(fock4, j)) == pytest.approx(singlet_onsite(corr, s, j), abs=1e-10)
        assert ed_expectation(state, fock4.spin(j, "y")).real == pytest.approx(magnetization_y(corr, s, j), abs=1e-10)
        assert ed_expectation(state, fock4.n(j, UP)).real == pytest.approx(0.5, abs=1e-12)
        assert abs(ed_expectation(state, fock4.spin(j, "x"))) < 1e-12
        assert abs(ed_expectation(state, fock4.spin(j, "z"))) < 1e-12
    for i, j in [(1, 2), (1, 4), (2, 3)]:
        assert ed_expectation(state, pair_pair_operator(fock4, i, j)).real == pytest.approx(pair_pair(corr, s, i, j), abs=1e-10)
        assert ed_expectation(state, spinspin_operator(fock4, i, j)).real == pytest.approx(spinspin_y(corr, s, i, j), abs=1e-10)
        assert abs(ed_expectation(state, spinspin_operator(fock4, i, j, "z"))) < 1e-12
        for a, b in ((UP, DOWN), (DOWN, UP)):
            assert abs(ed_expectation(state, fock4.c(i, a) @ fock4.c(j, b))) < 1e-12
        if j - i > 1:
            assert abs(ed_expectation(state, fock4.c(i, UP) @ fock4.c(j, UP))) < 1e-12
            assert abs(ed_expectation(state, fock4.cdag(i, UP) @ fock4.c(j, UP))) < 1e-12
    assert ed_expectation(state, fermion_parity(fock4)).real == pytest.approx(1.0)


@pytest.mark.parametrize("U", [1.0, -0.5, 2.5])
def test_single_species_parity_against_ed(fock4, R4, U):
    p = ModelParams(u=U, L=4)
    (state,) = ed_ground_sector(hamiltonian_from_params(p, fock4), R4, target=(1, 1, 1, 1))
    _, corr, s = ground(p)
    for spin, name in ((UP, "up"), (DOWN, "down")):
        zp = particle_hole_parity(fock4, spin)
        assert ed_expectation(state, zp) == pytest.approx(parity_zp(corr, s, name), abs=1e-10)


def test_global_ground_states_are_resolved(fock4, R4):
    states = ed_ground_sector(build_full_hamiltonian(4, U=1.0, fock=fock4), R4)
    assert len(states) == 2
    assert {st.r for st in states} == {(1, 1, 1, 1), (-1, -1, -1, -1)}


@pytest.mark.parametrize("params", [
    ModelParams(u=1.0, lam=0.3, L=2),
    ModelParams(u=[0.4, -1.2, 0.9, 2.0], lam=-0.6, delta0=0.5, h=0.2, L=4),
])
def test_spin_ladder_representation(params):
    rep = spin_ladder_check(params)
    assert rep.ok, rep.first_mismatch
    assert rep.max_deviation < 1e-9


def test_oracle_limits():
    with pytest.raises(OracleError):
        spin_ladder_check(ModelParams(L=6))
    with pytest.raises(OracleError):
        hamiltonian_from_params(ModelParams(L=4, boundary="periodic"))


def test_non_commuting_charge_rejected(fock4):
    H = build_full_hamiltonian(4, U=1.0, fock=fock4)
    with pytest.raises(OracleError):
        ed_ground_sector(H, [fock4.spin(1, "x").toarray() * 2])


def test_offset_matches_ed_constant(fock4, R4):
    # the lam term is diagonal in the sector labels: E(lam) - E(0) = offset shift
    base = ModelParams(u=0.0, L=4)
    ed0 = sector_energies(hamiltonian_from_params(base, fock4), R4)
    ed1 = sector_energies(hamiltonian_from_params(base.replace(lam=0.5), fock4), R4)
    for r in ed0:
        shift = sector_offset(base.replace(lam=0.5), SectorConfig.custom(r))
        assert ed1[r] - ed0[r] == pytest.approx(shift, abs=1e-10)
