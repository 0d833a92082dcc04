"""Cross-checks of the sector solver against brute-force exact diagonalisation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dynamics, observables, oracle
from .canon import equilibrium_correlations, svd_canonical
from .model import ModelParams, SectorConfig, build_b_matrix, family_candidates

QUENCH_ALPHA0 = 0.3
QUENCH_TAUS = (0.5, 1.0, 2.0, 5.0)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)


def audit_sectors(L: int) -> list[SectorConfig]:
    out = family_candidates(L)[:4]
    alt = [1 if (j // 2) % 2 == 0 else -1 for j in range(L)]
    if tuple(alt) not in {s.r for s in out}:
        out.append(SectorConfig.custom(alt))
    return out


def static_deviation(params: ModelParams, sector: SectorConfig, fock, H, R_ops, gap_floor=1e-6):
    """Max |ED - Wick| over singlet, S^y, pair-pair and S^yS^y in one sector (None if degenerate)."""
    cf = svd_canonical(build_b_matrix(params, sector))
    if cf.Lambda[-1] < gap_floor:
        return None
    corr = equilibrium_correlations(cf, warn=False)
    st = oracle.ed_ground_sector(H, R_ops, sector.r)[0]
    L = params.L
    dev = 0.0
    for j in range(1, L + 1):
        dev = max(dev, abs(oracle.ed_expectation(st, oracle.singlet_operator(fock, j))
                           - observables.singlet_onsite(corr, sector, j)))
        dev = max(dev, abs(oracle.ed_expectation(st, fock.spin(j, "y"))
                           - observables.magnetization_y(corr, sector, j)))
        for k in range(j + 1, L + 1):
            dev = max(dev, abs(oracle.ed_expectation(st, oracle.pair_pair_operator(fock, j, k))
                               - observables.pair_pair(corr, sector, j, k)))
            dev = max(dev, abs(oracle.ed_expectation(st, oracle.spinspin_operator(fock, j, k))
                               - observables.spinspin_y(corr, sector, j, k)))
    return dev


def quench_deviation(params: ModelParams, sector: SectorConfig, fock, R_ops,
                     alpha0: float = QUENCH_ALPHA0, taus=QUENCH_TAUS) -> float:
    """Boundary quench: X-matrix ``C_i, S_i`` against many-body evolution."""
    setup = dynamics.boundary_quench(params, sector, alpha0)
    pre = params.with_alpha(alpha0, sector.r[-1])
    H_pre = oracle.hamiltonian_from_params(pre, fock)
    H_post = oracle.hamiltonian_from_params(params.replace(delta0=0.0, h=0.0), fock)
    st = oracle.ed_ground_sector(H_pre, R_ops, sector.r)[0]
    dev = 0.0
    for tau, psi in zip(taus, oracle.evolve(st, H_post, taus)):
        C, S = dynamics.nn_correlators(dynamics.quench_correlations_at(setup, tau), sector)
        for i in range(1, params.L):
            dev = max(dev, abs(oracle.ed_expectation(psi, oracle.pair_pair_operator(fock, i, i + 1)) - C[i - 1]),
                      abs(oracle.ed_expectation(psi, oracle.spinspin_operator(fock, i, i + 1)) - S[i - 1]))
    return dev


def run_audit(params: ModelParams, tol: float = 1e-8) -> list[Check]:
    L = params.L
    fock = oracle.FockOperatorSet(L)
    H = oracle.hamiltonian_from_params(params, fock)
    R_ops = oracle.r_operators(fock)
    checks = [
        Check("[H, R_j] = 0", max(oracle.commutator_norm(H, R) for R in R_ops), tol),
        Check("[H, Z2f] = 0", oracle.commutator_norm(H, oracle.fermion_parity(fock)), tol),
    ]
    if L <= 4:
        rep = oracle.spin_ladder_check(params, tol)
        checks.append(Check("fermion/ladder/mapped spectra", rep.max_deviation, tol))
        checks += [Check(f"parity dictionary {k}", v, tol) for k, v in rep.parity_checks.items()]

    ed = oracle.sector_energies(H, R_ops)
    worst = 0.0
    for r, e in ed.items():
        bm = build_b_matrix(params, SectorConfig.custom(r))
        worst = max(worst, abs(svd_canonical(bm).energy - e))
    checks.append(Check(f"sector ground energies ({len(ed)} sectors)", worst, tol))

    for sector in audit_sectors(L):
        dev = static_deviation(params, sector, fock, H, R_ops)
        if dev is not None:
            checks.append(Check(f"observables in sector {sector.r}", dev, tol))

    if params.homogeneous_u and params.u[0] != 0:
        sector = audit_sectors(L)[0]
        checks.append(Check("boundary quench C_i, S_i", quench_deviation(params, sector, fock, R_ops),
                            max(tol, 1e-6)))
    return checks
