"""Brute-force exact diagonalisation of the spinful chain on the full Fock space.

Mode ordering is site-major with spin up before spin down:
``mode(j, s) = 2 (j - 1) + s`` for ``j = 1..L`` and ``s = 0 (up), 1 (down)``.
Fermions carry Jordan-Wigner strings ``prod_{m' < m} Z_{m'}``; a set bit in the
computational basis is an occupied mode.

Only physical expectation values are compared against the mapped solver;
all conventions here stay internal to the module.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .model import ModelParams

MAX_SITES = 6
UP, DOWN = 0, 1

_I2 = sp.identity(2, format="csr", dtype=complex)
_X = sp.csr_matrix(np.array([[0, 1], [1, 0]], dtype=complex))
_Y = sp.csr_matrix(np.array([[0, -1j], [1j, 0]], dtype=complex))
_Z = sp.csr_matrix(np.array([[1, 0], [0, -1]], dtype=complex))
_LOWER = sp.csr_matrix(np.array([[0, 1], [0, 0]], dtype=complex))
PAULI = {"x": _X, "y": _Y, "z": _Z}


class OracleError(RuntimeError):
    pass


def _kron_all(factors):
    return reduce(lambda A, B: sp.kron(A, B, format="csr"), factors)


def pauli_string(n: int, assignment: dict) -> sp.csr_matrix:
    """Tensor product on ``n`` qubits; ``assignment`` maps 1-based qubit -> 'x'|'y'|'z'."""
    return _kron_all([PAULI[assignment[k]] if k in assignment else _I2 for k in range(1, n + 1)])


class FockOperatorSet:
    """Annihilation operators of the ``2L`` modes (sparse, complex)."""

    def __init__(self, L: int):
        if L > MAX_SITES:
            raise OracleError(f"L={L} exceeds the dimension guard (L <= {MAX_SITES})")
        self.L = L
        self.n_modes = 2 * L
        self.dim = 4 ** L
        self.identity = sp.identity(self.dim, format="csr", dtype=complex)
        n = self.n_modes
        self._c = [_kron_all([_Z] * m + [_LOWER] + [_I2] * (n - m - 1)) for m in range(n)]

    @staticmethod
    def mode(j: int, s: int) -> int:
        return 2 * (j - 1) + s

    def c(self, j, s):
        return self._c[self.mode(j, s)]

    def cdag(self, j, s):
        return self._c[self.mode(j, s)].conj().T.tocsr()

    def n(self, j, s):
        return (self.cdag(j, s) @ self.c(j, s)).tocsr()

    def a(self, j, s):
        return (self.c(j, s) + self.cdag(j, s)).tocsr()

    def b(self, j, s):
        return (-1j * self.c(j, s) + 1j * self.cdag(j, s)).tocsr()

    def spin(self, j, axis):
        cu, cd = self.c(j, UP), self.c(j, DOWN)
        du, dd = self.cdag(j, UP), self.cdag(j, DOWN)
        if axis == "x":
            return 0.5 * (du @ cd + dd @ cu)
        if axis == "y":
            return -0.5j * (du @ cd - dd @ cu)
        if axis == "z":
            return 0.5 * (du @ cu - dd @ cd)
        raise ValueError(axis)


def _as_sites(value, count, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(count, float(arr))
    if arr.shape != (count,):
        raise ValueError(f"{name} must be scalar or length {count}")
    return arr


def build_full_hamiltonian(L: int, t: float = 1.0, delta_up: Optional[float] = None,
                           delta_down: Optional[float] = None, mu: float = 0.0, U=0.0,
                           lam=0.0, h_vec=(0.0, 0.0, 0.0), delta0: float = 0.0,
                           fock: Optional[FockOperatorSet] = None, sparse: bool = False):
    """``H0 + H1 + H_edge`` of the original spinful chain with open boundaries.

    ``U`` may vary per site, ``lam`` per dimer (length L/2).  ``delta_up`` and
    ``delta_down`` default to ``t`` (the symmetric point).
    """
    fock = fock or FockOperatorSet(L)
    if fock.L != L:
        raise ValueError("operator set built for a different L")
    d = {UP: t if delta_up is None else delta_up, DOWN: t if delta_down is None else delta_down}
    u = _as_sites(U, L, "U")
    lams = _as_sites(lam, L // 2, "lam")
    Id = fock.identity
    H = sp.csr_matrix((fock.dim, fock.dim), dtype=complex)
    for j in range(1, L):
        for s in (UP, DOWN):
            hop = fock.cdag(j, s) @ fock.c(j + 1, s)
            pair = fock.cdag(j, s) @ fock.cdag(j + 1, s)
            H = H - t * (hop + hop.conj().T) - d[s] * (pair + pair.conj().T)
    for j in range(1, L + 1):
        H = H + u[j - 1] * (2 * fock.n(j, UP) - Id) @ (2 * fock.n(j, DOWN) - Id)
        H = H - mu * (fock.n(j, UP) + fock.n(j, DOWN) - Id)
    for j in range(1, L // 2 + 1):
        e, o = 2 * j, 2 * j - 1
        term = ((fock.c(e, UP) + fock.cdag(e, UP)) @ (fock.c(e, DOWN) + fock.cdag(e, DOWN))
                @ (fock.c(o, UP) - fock.cdag(o, UP)) @ (fock.cdag(o, DOWN) - fock.c(o, DOWN)))
        H = H + lams[j - 1] * term
    hx, hy, hz = h_vec
    H = H - hx * fock.spin(L, "x") - hy * fock.spin(L, "y") - hz * fock.spin(L, "z")
    pair = fock.c(L, UP) @ fock.c(L, DOWN)
    H = H - 1j * delta0 * (pair - pair.conj().T)
    H = H.tocsr()
    return H if sparse else H.toarray()


def field_vector(params: ModelParams) -> tuple:
    """Physical boundary field reproducing the mapped model's ``h``.

    With standard spin operators the mapped boundary term
    ``-(i/2)(Delta0 + h/2) R_L a_L b_L + c0 R_L`` arises from a field ``-h`` along y.
    """
    return (0.0, -params.h, 0.0)


def hamiltonian_from_params(params: ModelParams, fock: Optional[FockOperatorSet] = None):
    if params.boundary != "open":
        raise OracleError("the oracle only covers open chains")
    return build_full_hamiltonian(params.L, params.t, U=params.u, lam=params.lam,
                                  h_vec=field_vector(params), delta0=params.delta0, fock=fock)


# ---------------------------------------------------------------------------
# symmetry operators

def r_operators(fock: FockOperatorSet) -> list:
    """Conserved charges ``R_j = (prod_{i>=j} i b_{i up} b_{i dn})(prod_{i>j} i a_{i dn} a_{i up})``."""
    L = fock.L
    out = []
    for j in range(1, L + 1):
        R = fock.identity
        for i in range(j, L + 1):
            R = R @ (1j * fock.b(i, UP) @ fock.b(i, DOWN))
        for i in range(j + 1, L + 1):
            R = R @ (1j * fock.a(i, DOWN) @ fock.a(i, UP))
        out.append(R.toarray())
    return out


def fermion_parity(fock: FockOperatorSet):
    P = fock.identity
    for j in range(1, fock.L + 1):
        for s in (UP, DOWN):
            P = P @ (fock.identity - 2 * fock.n(j, s))
    return P.toarray()


def particle_hole_parity(fock: FockOperatorSet, spin: Optional[int] = None):
    """``Z^p_2 = prod_{j, sigma} (c_{j sigma} + (-1)^j c^dag_{j sigma})`` (site-major order).

    With ``spin`` given, only that species enters the product.
    """
    P = fock.identity
    spins = (UP, DOWN) if spin is None else (spin,)
    for j in range(1, fock.L + 1):
        for s in spins:
            P = P @ (fock.c(j, s) + (-1) ** j * fock.cdag(j, s))
    return P.toarray()


def spin_swap(fock: FockOperatorSet):
    """Unitary ``Z^x_2`` exchanging ``c_{j up}`` and ``c_{j down}`` on every site."""
    W = np.eye(fock.dim, dtype=complex)
    for j in range(1, fock.L + 1):
        hop = (fock.cdag(j, UP) @ fock.c(j, DOWN)).toarray()
        ntot = (fock.n(j, UP) + fock.n(j, DOWN)).toarray()
        # exp(i pi/2 (hop + h.c.)) sends c_up -> i c_dn; the number phase removes the i
        W = sla.expm(-0.5j * np.pi * (hop + hop.conj().T)) @ sla.expm(0.5j * np.pi * ntot) @ W
    return W


def total_spin(fock: FockOperatorSet, axis: str = "y"):
    S = sum((fock.spin(j, axis) for j in range(1, fock.L + 1)), sp.csr_matrix((fock.dim, fock.dim)))
    return S.toarray()


def commutator_norm(A, B) -> float:
    A = A.toarray() if sp.issparse(A) else A
    B = B.toarray() if sp.issparse(B) else B
    return float(np.abs(A @ B - B @ A).max())


# ---------------------------------------------------------------------------
# sector-resolved ground states

@dataclass
class ManyBodyState:
    vector: np.ndarray
    energy: float
    r: tuple = field(default=())


def _check_commuting(H, R_ops, tol):
    for j, R in enumerate(R_ops, 1):
        c = commutator_norm(H, R)
        if c > tol:
            raise OracleError(f"[H, R_{j}] = {c:.3e} exceeds {tol:g}")


def sector_basis(R_ops: Sequence[np.ndarray], r: Sequence[int]) -> np.ndarray:
    """Orthonormal basis of the joint eigenspace ``R_j = r_j``."""
    dim = R_ops[0].shape[0]
    P = np.eye(dim, dtype=complex)
    for Rj, rj in zip(R_ops, r):
        P = P @ (np.eye(dim) + rj * Rj) / 2
    w, v = np.linalg.eigh(0.5 * (P + P.conj().T))
    return v[:, w > 0.5]


def measure_r(state: np.ndarray, R_ops) -> tuple:
    vals = [float(np.real(state.conj() @ R @ state)) for R in R_ops]
    if any(abs(abs(x) - 1) > 1e-9 for x in vals):
        raise OracleError(f"state is not a sector eigenstate: <R_j> = {vals}")
    return tuple(int(round(x)) for x in vals)


def ed_ground_sector(H: np.ndarray, R_ops: Sequence[np.ndarray], target: Optional[Sequence[int]] = None,
                     comm_tol: float = 1e-10, degeneracy_tol: float = 1e-9) -> list[ManyBodyState]:
    """Lowest eigenstate(s), resolved by the conserved charges.

    With ``target`` the lowest state inside that sector is returned (a
    one-element list).  Otherwise every global ground state is returned, a
    degenerate ground space being split by diagonalising ``R_1, R_2, ...`` in turn.
    """
    _check_commuting(H, R_ops, comm_tol)
    if target is not None:
        Q = sector_basis(R_ops, target)
        e, v = np.linalg.eigh(Q.conj().T @ H @ Q)
        psi = Q @ v[:, 0]
        return [ManyBodyState(psi, float(e[0]), measure_r(psi, R_ops))]

    e, v = np.linalg.eigh(H)
    ground = v[:, e <= e[0] + degeneracy_tol * max(1.0, abs(e[0]))]
    blocks = [ground]
    for R in R_ops:
        split = []
        for Q in blocks:
            w, y = np.linalg.eigh(Q.conj().T @ R @ Q)
            for sign in (-1, 1):
                cols = y[:, np.abs(w - sign) < 1e-6]
                if cols.shape[1]:
                    split.append(Q @ cols)
        blocks = split
    states = []
    for Q in blocks:
        for k in range(Q.shape[1]):
            psi = Q[:, k]
            states.append(ManyBodyState(psi, float(np.real(psi.conj() @ H @ psi)), measure_r(psi, R_ops)))
    return states


def sector_energies(H: np.ndarray, R_ops: Sequence[np.ndarray]) -> dict:
    """Lowest energy in each of the ``2^L`` sectors, via one generic joint diagonalisation."""
    L = len(R_ops)
    weights = 2.0 ** np.arange(L)
    probe = sum(w * R for w, R in zip(weights, R_ops))
    w, v = np.linalg.eigh(probe)
    out = {}
    for r in itertools.product((1, -1), repeat=L):
        cols = v[:, np.abs(w - np.dot(weights, r)) < 0.25]
        e = np.linalg.eigvalsh(cols.conj().T @ H @ cols)
        out[r] = float(e[0])
    return out


def ed_expectation(state, observable):
    psi = state.vector if isinstance(state, ManyBodyState) else state
    O = observable.toarray() if sp.issparse(observable) else observable
    return complex(psi.conj() @ (O @ psi))


def evolve(state, H: np.ndarray, taus: Sequence[float]) -> list[np.ndarray]:
    """Schrodinger evolution ``exp(-i H tau) psi`` through the full spectrum."""
    psi = state.vector if isinstance(state, ManyBodyState) else state
    e, v = np.linalg.eigh(H)
    coeff = v.conj().T @ psi
    return [v @ (np.exp(-1j * e * tau) * coeff) for tau in taus]


# ---------------------------------------------------------------------------
# observables on the Fock space

def singlet_operator(fock, j):
    return fock.c(j, UP) @ fock.c(j, DOWN)


def pair_pair_operator(fock, i, j):
    return fock.c(i, UP) @ fock.c(i, DOWN) @ fock.cdag(j, DOWN) @ fock.cdag(j, UP)


def spinspin_operator(fock, i, j, axis="y"):
    return fock.spin(i, axis) @ fock.spin(j, axis)


# ---------------------------------------------------------------------------
# spin-ladder representation

def ladder_majoranas(L: int) -> dict:
    """Spinful Majoranas ``a_{j s}, b_{j s}`` written on 2L ladder spins.

    Spin up of site j lives on ladder site 2j-1, spin down on 2j.
    """
    n = 2 * L
    out = {}
    odd = [2 * i - 1 for i in range(1, L + 1)]
    for j in range(1, L + 1):
        head = {k: "x" for k in odd[:j - 1]}
        out[("a", j, UP)] = pauli_string(n, {**head, 2 * j - 1: "z"})
        out[("b", j, UP)] = pauli_string(n, {**head, 2 * j - 1: "y"})
        tail = {k: "x" for k in odd}
        tail.update({2 * i: "x" for i in range(j + 1, L + 1)})
        out[("a", j, DOWN)] = pauli_string(n, {**tail, 2 * j: "y"})
        out[("b", j, DOWN)] = -pauli_string(n, {**tail, 2 * j: "z"})
    return out


class _LadderFock:
    """Fermion operators rebuilt from the ladder Majoranas (duck-types FockOperatorSet)."""

    def __init__(self, L):
        self.L = L
        self.dim = 4 ** L
        self.identity = sp.identity(self.dim, format="csr", dtype=complex)
        self._m = ladder_majoranas(L)

    def c(self, j, s):
        return (0.5 * (self._m[("a", j, s)] + 1j * self._m[("b", j, s)])).tocsr()

    def cdag(self, j, s):
        return self.c(j, s).conj().T.tocsr()

    n = FockOperatorSet.n
    a = FockOperatorSet.a
    b = FockOperatorSet.b
    spin = FockOperatorSet.spin


def ladder_hamiltonian(L: int, t: float = 1.0, delta_up: Optional[float] = None,
                       delta_down: Optional[float] = None, mu: float = 0.0, U=0.0, lam=0.0,
                       h_vec=(0.0, 0.0, 0.0), delta0: float = 0.0) -> np.ndarray:
    """Explicit spin-ladder form of ``H0`` plus ``lambda R_{2j-1} R_{2j}`` and the boundary terms."""
    if L > MAX_SITES:
        raise OracleError(f"L={L} exceeds the dimension guard (L <= {MAX_SITES})")
    n = 2 * L
    du = t if delta_up is None else delta_up
    dd = t if delta_down is None else delta_down
    u = _as_sites(U, L, "U")
    lams = _as_sites(lam, L // 2, "lam")
    H = sp.csr_matrix((4 ** L, 4 ** L), dtype=complex)
    for j in range(1, L):
        H = H + (t + du) / 2 * pauli_string(n, {2 * j - 1: "z", 2 * j + 1: "z"})
        H = H + (t + dd) / 2 * pauli_string(n, {2 * j: "z", 2 * j + 2: "z"})
        H = H + (t - du) / 2 * pauli_string(n, {2 * j - 1: "y", 2 * j + 1: "y"})
        H = H + (t - dd) / 2 * pauli_string(n, {2 * j: "y", 2 * j + 2: "y"})
    for j in range(1, L + 1):
        H = H + u[j - 1] * pauli_string(n, {2 * j - 1: "x", 2 * j: "x"})
    for k in range(1, n + 1):
        H = H + mu / 2 * pauli_string(n, {k: "x"})
    for j in range(1, L // 2 + 1):
        sites = {4 * j - 3: "z", 4 * j - 2: "z", 4 * j - 1: "z", 4 * j: "z"}
        H = H + lams[j - 1] * pauli_string(n, sites)
    fock = _LadderFock(L)
    hx, hy, hz = h_vec
    H = H - hx * fock.spin(L, "x") - hy * fock.spin(L, "y") - hz * fock.spin(L, "z")
    pair = fock.c(L, UP) @ fock.c(L, DOWN)
    H = H - 1j * delta0 * (pair - pair.conj().T)
    return H.toarray()


def mapped_hamiltonian(params: ModelParams) -> np.ndarray:
    """Quadratic-plus-charges form after the second Jordan-Wigner transformation."""
    L = params.L
    if L > MAX_SITES:
        raise OracleError(f"L={L} exceeds the dimension guard (L <= {MAX_SITES})")
    n = 2 * L

    def alpha(k):
        return pauli_string(n, {**{i: "y" for i in range(1, k)}, k: "x"})

    def beta(k):
        return pauli_string(n, {**{i: "y" for i in range(1, k)}, k: "z"})

    a = {j: alpha(2 * j) for j in range(1, L + 1)}
    b = {j: beta(2 * j - 1) for j in range(1, L + 1)}
    R = {j: 1j * beta(2 * j) @ alpha(2 * j - 1) for j in range(1, L + 1)}
    u = params.u
    H = sp.csr_matrix((4 ** L, 4 ** L), dtype=complex)
    for j in range(1, L + 1):
        H = H - 1j * u[j - 1] * a[j] @ b[j]
    for j in range(1, L):
        H = H - 1j * params.t * (R[j] + R[j + 1]) @ a[j] @ b[j + 1]
    for j in range(1, L // 2 + 1):
        H = H + params.lam * R[2 * j - 1] @ R[2 * j]
    H = H - 0.5j * params.edge_coupling * R[L] @ a[L] @ b[L] + params.c0 * R[L]
    return H.toarray()


@dataclass
class LadderReport:
    max_deviation: float
    spectra: dict
    parity_checks: dict
    ok: bool
    first_mismatch: Optional[tuple] = None


def spin_ladder_check(params: ModelParams, tol: float = 1e-9) -> LadderReport:
    """Compare fermionic, spin-ladder and mapped spectra; check the parity dictionary."""
    L = params.L
    if L > 4:
        raise OracleError("spin-ladder check limited to L <= 4")
    hv = field_vector(params)
    spectra = {
        "fermionic": np.linalg.eigvalsh(hamiltonian_from_params(params)),
        "ladder": np.linalg.eigvalsh(ladder_hamiltonian(L, params.t, U=params.u, lam=params.lam,
                                                        h_vec=hv, delta0=params.delta0)),
        "mapped": np.linalg.eigvalsh(mapped_hamiltonian(params)),
    }
    ref = spectra["fermionic"]
    dev = 0.0
    first = None
    for name in ("ladder", "mapped"):
        diff = np.abs(spectra[name] - ref)
        dev = max(dev, float(diff.max()))
        if first is None and diff.max() > tol:
            k = int(np.argmax(diff > tol))
            first = (name, k, float(ref[k]), float(spectra[name][k]))

    fock = _LadderFock(L)
    n = 2 * L
    zf = fermion_parity(fock)
    zf_ladder = pauli_string(n, {k: "x" for k in range(1, n + 1)}).toarray() * (-1) ** n
    zp = particle_hole_parity(fock)
    zp_ladder = pauli_string(n, {k: "z" for k in range(1, n + 1)}).toarray()
    parity = {
        "Z2f": float(np.abs(zf - zf_ladder).max()),
        "Z2p": _phase_mismatch(zp, zp_ladder),
    }
    ok = dev <= tol and all(v <= tol for v in parity.values())
    return LadderReport(dev, spectra, parity, ok, first)


def _phase_mismatch(A, B) -> float:
    """Distance between A and B up to a global unit-modulus factor."""
    k = np.unravel_index(np.argmax(np.abs(B)), B.shape)
    phase = A[k] / B[k]
    if abs(abs(phase) - 1) > 1e-9:
        return float("inf")
    return float(np.abs(A - phase * B).max())
