"""Out-of-equilibrium evolution inside a fixed sector.

Heisenberg equations ``da/dtau = B b``, ``db/dtau = -B^T a`` make the Majorana
vector ``psi = (a, b)`` evolve by an orthogonal propagator ``Phi(tau)``; the
Gaussian state follows as ``Gamma(tau) = Phi Gamma(0) Phi^T``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from . import model
from .canon import CanonicalForm, MajoranaCorrelations, equilibrium_correlations, svd_canonical
from .model import ModelParams, SectorConfig, build_b_matrix, make_sector

log = logging.getLogger(__name__)

DEFAULT_DTAU = 0.1


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuenchSetup:
    pre: CanonicalForm
    post: CanonicalForm
    sector: SectorConfig
    post_B: np.ndarray
    alpha0: float = model.DEFAULT_ALPHA0
    params: Optional[ModelParams] = None

    def __post_init__(self):
        if self.pre.L != self.post.L or self.sector.L != self.post.L:
            raise ValueError("pre/post decompositions and sector must share L")

    @property
    def L(self) -> int:
        return self.post.L


def boundary_quench(params: ModelParams, sector: Optional[SectorConfig] = None,
                    alpha0: float = model.DEFAULT_ALPHA0) -> QuenchSetup:
    """Ground state at ``alpha = alpha0`` evolved with the edge couplings switched off."""
    sector = sector or make_sector("homogeneous-plus", params.L)
    r_L = sector.r[-1]
    pre_b = build_b_matrix(params.with_alpha(alpha0, r_L), sector)
    post_b = build_b_matrix(params.replace(delta0=0.0, h=0.0), sector)
    return QuenchSetup(svd_canonical(pre_b), svd_canonical(post_b), sector,
                       post_b.matrix, alpha0, params)


def setup_from_matrices(B_pre, B_post, sector: SectorConfig) -> QuenchSetup:
    B_post = np.asarray(B_post, dtype=float)
    return QuenchSetup(svd_canonical(B_pre), svd_canonical(B_post), sector, B_post, float("nan"))


def _x_blocks(setup: QuenchSetup, tau: float):
    if tau < 0:
        raise ValueError("tau must be non-negative")
    U, V, lam = setup.post.Umat, setup.post.Vmat, setup.post.Lambda
    Up, Vp = setup.pre.Umat, setup.pre.Vmat
    cos, sin = np.cos(lam * tau), np.sin(lam * tau)
    UtUp = U.T @ Up
    VtVp = V.T @ Vp
    X11 = (U * cos) @ UtUp
    X12 = (U * sin) @ VtVp
    X21 = -(V * sin) @ UtUp
    X22 = (V * cos) @ VtVp
    return X11, X12, X21, X22


def x_matrix(setup: QuenchSetup, tau: float) -> np.ndarray:
    """Stacked map from the initial canonical modes ``(a~', b~')`` to ``(a(tau), b(tau))``."""
    X11, X12, X21, X22 = _x_blocks(setup, tau)
    return np.block([[X11, X12], [X21, X22]])


def quench_correlations_at(setup: QuenchSetup, tau: float) -> MajoranaCorrelations:
    X11, X12, X21, X22 = _x_blocks(setup, tau)
    K_ab = X11 @ X22.T - X12 @ X21.T
    K_aa = X11 @ X12.T - X12 @ X11.T
    K_bb = X21 @ X22.T - X22 @ X21.T
    return MajoranaCorrelations(K_ab, K_aa, K_bb, float(tau))


def energy_expectation(B: np.ndarray, corr: MajoranaCorrelations, offset: float = 0.0) -> float:
    """``<(i/2) sum a_i B_ij b_j> + offset``."""
    return -0.5 * float(np.sum(B * corr.K_ab)) + offset


def nn_correlators(corr: MajoranaCorrelations, sector: SectorConfig):
    """Nearest-neighbour pair-pair ``C_i`` and ``S^y S^y`` ``S_i`` for i = 1..L-1."""
    K_ab, K_aa, K_bb = corr.K_ab, corr.K_aa, corr.K_bb
    g = np.diag(K_ab)
    idx = np.arange(corr.L - 1)
    # 4x4 Pfaffian for (a_i, b_i, a_{i+1}, b_{i+1})
    W = (g[:-1] * g[1:] - K_aa[idx, idx + 1] * K_bb[idx, idx + 1]
         - K_ab[idx, idx + 1] * K_ab[idx + 1, idx])
    rr = sector.array[:-1] * sector.array[1:] / 16.0
    C = rr * (g[:-1] + 1.0 + W + g[1:])
    S = rr * (g[:-1] - 1.0 - W + g[1:])
    return C, S


def mean_square_center(f: np.ndarray, L: int) -> np.ndarray:
    """``(1/L) sum_{i=1}^{L-1} f_i (i - L)^2`` along the last axis."""
    i = np.arange(1, L)
    return np.asarray(f) @ ((i - L) ** 2.0) / L


@dataclass
class QuenchTrajectory:
    taus: np.ndarray
    C: np.ndarray
    S: np.ndarray
    L: int
    meta: dict = field(default_factory=dict)

    @property
    def dtau(self) -> float:
        return float(self.taus[1] - self.taus[0])

    def R2(self, f: str) -> np.ndarray:
        return mean_square_center(self._series(f), self.L)

    def _series(self, f):
        if f == "C":
            return self.C
        if f == "S":
            return self.S
        raise ValueError(f"observable must be 'C' or 'S' (got {f!r})")


def quench_trajectory(setup: QuenchSetup, tau_max: float, dtau: float = DEFAULT_DTAU,
                      workers: Optional[int] = None) -> QuenchTrajectory:
    n = int(round(tau_max / dtau))
    taus = dtau * np.arange(n + 1)

    def point(tau):
        return nn_correlators(quench_correlations_at(setup, tau), setup.sector)

    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(point, taus))
    else:
        rows = [point(tau) for tau in taus]
    C = np.array([r[0] for r in rows])
    S = np.array([r[1] for r in rows])
    meta = {"alpha0": setup.alpha0, "dtau": dtau, "tau_max": float(taus[-1]),
            "R2_sum": "i = 1..L-1 (nearest-neighbour pairs)"}
    return QuenchTrajectory(taus, C, S, setup.L, meta)


@dataclass
class Velocity:
    values: np.ndarray
    flagged: bool = False


def wavefront_velocity(trajectory: QuenchTrajectory, f: str, rtol: float = 1e-12) -> Velocity:
    """``d/dtau sqrt(|R_f^2(tau) - R_f^2(0)|)`` by central differences.

    A series whose change stays at rounding level (relative to ``R_f^2(0)``) is
    returned as zeros with ``flagged`` set.
    """
    if trajectory.taus.size < 3:
        raise ValueError("need at least three time points")
    R2 = trajectory.R2(f)
    change = np.abs(R2 - R2[0])
    if np.all(change <= rtol * max(1.0, abs(R2[0]))):
        return Velocity(np.zeros_like(R2), True)
    spread = np.sqrt(change)
    return Velocity(np.gradient(spread, trajectory.dtau), False)


def max_group_velocity(U: float, t: float = 1.0, n: int = 20001) -> float:
    """Largest ``|d Lambda / d theta|`` of the bulk singular-value band of ``B``."""
    theta = np.linspace(0, np.pi, n)
    lam = 2.0 * np.sqrt(U * U + 4 * t * t - 4 * U * t * np.cos(theta))
    return float(np.max(np.abs(np.gradient(lam, theta))))


# ---------------------------------------------------------------------------
# time-dependent couplings

def generator(B: np.ndarray) -> np.ndarray:
    L = B.shape[0]
    A = np.zeros((2 * L, 2 * L))
    A[:L, L:] = B
    A[L:, :L] = -B.T
    return A


def exact_step(B: np.ndarray, h: float) -> np.ndarray:
    """``exp(h [[0, B], [-B^T, 0]])`` through the singular value decomposition of B."""
    U, lam, Vt = np.linalg.svd(B)
    V = Vt.T
    c, s = np.cos(lam * h), np.sin(lam * h)
    return np.block([[(U * c) @ U.T, (U * s) @ V.T], [-(V * s) @ U.T, (V * c) @ V.T]])


def apply_exact_step(B: np.ndarray, h: float, Phi: np.ndarray) -> np.ndarray:
    """``exact_step(B, h) @ Phi`` without forming the 2L x 2L exponential."""
    L = B.shape[0]
    U, lam, Vt = np.linalg.svd(B)
    c, s = np.cos(lam * h)[:, None], np.sin(lam * h)[:, None]
    P = U.T @ Phi[:L]
    Q = Vt @ Phi[L:]
    return np.vstack([U @ (c * P + s * Q), Vt.T @ (c * Q - s * P)])


def orthogonality_defect(Phi: np.ndarray) -> float:
    return float(np.abs(Phi.T @ Phi - np.eye(Phi.shape[0])).max())


def _rk4_interval(Phi, B_of, tau0, span, nsub):
    h = span / nsub
    for k in range(nsub):
        t0 = tau0 + k * h
        A0 = generator(B_of(t0))
        Am = generator(B_of(t0 + 0.5 * h))
        A1 = generator(B_of(t0 + h))
        k1 = A0 @ Phi
        k2 = Am @ (Phi + 0.5 * h * k1)
        k3 = Am @ (Phi + 0.5 * h * k2)
        k4 = A1 @ (Phi + h * k3)
        Phi = Phi + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return Phi


def iter_ramp(params: ModelParams, sector: SectorConfig, U_of_tau: Callable[[float], float],
              tau_grid: Sequence[float], method: str = "midpoint", substeps: int = 1,
              ortho_tol: float = 1e-8, max_halvings: int = 10) -> Iterator[tuple[float, np.ndarray]]:
    """Yield ``(tau, Phi(tau))`` on a uniform grid starting at ``Phi(tau_0) = 1``.

    ``method="midpoint"`` applies the exact exponential of ``B`` frozen at each
    sub-step midpoint (orthogonal to rounding); ``method="rk4"`` is classical
    fourth order with the step halved whenever the orthogonality defect of an
    interval exceeds ``ortho_tol``.
    """
    taus = np.asarray(tau_grid, dtype=float)
    if taus.size > 2 and not np.allclose(np.diff(taus), taus[1] - taus[0], rtol=1e-9, atol=1e-12):
        raise ValueError("tau grid must be uniform")

    def B_of(tau):
        return build_b_matrix(params.replace(u=U_of_tau(tau)), sector).matrix

    Phi = np.eye(2 * params.L)
    yield float(taus[0]), Phi
    for tau0, tau1 in zip(taus[:-1], taus[1:]):
        span = tau1 - tau0
        if method == "midpoint":
            h = span / substeps
            for k in range(substeps):
                Phi = apply_exact_step(B_of(tau0 + (k + 0.5) * h), h, Phi)
        elif method == "rk4":
            nsub = substeps
            for attempt in range(max_halvings + 1):
                trial = _rk4_interval(Phi, B_of, tau0, span, nsub)
                if orthogonality_defect(trial) <= ortho_tol:
                    break
                log.debug("rk4: orthogonality drift at tau=%g, halving step", tau0)
                nsub *= 2
            else:
                raise IntegrationError(f"orthogonality drift above {ortho_tol:g} at tau={tau0:g}")
            Phi = trial
        else:
            raise ValueError(f"unknown method {method!r}")
        yield float(tau1), Phi


def ramp_evolve(params, sector, U_of_tau, tau_grid, **kw) -> np.ndarray:
    """Propagators ``Phi(tau)`` for every grid point, stacked along axis 0."""
    return np.array([Phi for _, Phi in iter_ramp(params, sector, U_of_tau, tau_grid, **kw)])


def evolve_correlations(Phi: np.ndarray, initial: MajoranaCorrelations, tau: float = 0.0) -> MajoranaCorrelations:
    gamma = Phi @ initial.covariance() @ Phi.T
    return MajoranaCorrelations.from_covariance(0.5 * (gamma - gamma.T), tau)


def instantaneous_power(Phi: np.ndarray, B: np.ndarray, dU_dtau: float,
                        initial: MajoranaCorrelations) -> float:
    """``P = dU/dtau * sum_j <-i a_j(tau) b_j(tau)>`` for a uniform interaction ramp."""
    L = initial.L
    if Phi.shape != (2 * L, 2 * L) or np.shape(B) != (L, L):
        raise ValueError("propagator, B and correlations disagree on L")
    if dU_dtau == 0:
        return 0.0
    gamma0 = initial.covariance()
    diag_ab = np.einsum("ij,ij->i", Phi[:L] @ gamma0, Phi[L:])
    return float(dU_dtau * diag_ab.sum())


def excitation_density(B: np.ndarray, corr: MajoranaCorrelations) -> float:
    """Fraction of instantaneous canonical modes that are excited."""
    U, _, Vt = np.linalg.svd(B)
    occ = np.diag(U.T @ corr.K_ab @ Vt.T)
    return float(np.sum(1.0 - occ) / (2.0 * B.shape[0]))


@dataclass
class RampResult:
    tau_Q: float
    L: int
    taus: np.ndarray
    U: np.ndarray
    power: np.ndarray
    power_adiabatic: np.ndarray
    excitation: float
    meta: dict = field(default_factory=dict)

    @property
    def excess_power(self) -> np.ndarray:
        return self.power - self.power_adiabatic


def linear_ramp(L: int, tau_Q: float, t: float = 1.0, U_start: float = 0.0, U_end: float = 4.0,
                dtau: float = 0.1, n_out: int = 200, boundary: str = "antiperiodic",
                method: str = "midpoint") -> RampResult:
    """Ramp ``U(tau) = U_start + tau / tau_Q`` from the ground state at ``U_start``.

    Power is recorded at ``n_out`` evenly spaced times; the adiabatic reference
    uses the instantaneous ground state at the same coupling.
    """
    sector = make_sector("homogeneous-plus", L)
    base = ModelParams(t=t, u=U_start, L=L, boundary=boundary)
    rate = 1.0 / tau_Q
    T = (U_end - U_start) * tau_Q
    n_steps = max(int(np.ceil(T / dtau)), 1)
    stride = max(n_steps // n_out, 1)
    grid = np.linspace(0.0, T, n_steps + 1)

    def U_of(tau):
        return U_start + rate * tau

    init = equilibrium_correlations(svd_canonical(build_b_matrix(base, sector)), warn=False)
    taus, Us, P, P_ad = [], [], [], []
    last = None
    for k, (tau, Phi) in enumerate(iter_ramp(base, sector, U_of, grid, method=method)):
        if k % stride and k != n_steps:
            continue
        B = build_b_matrix(base.replace(u=U_of(tau)), sector).matrix
        taus.append(tau)
        Us.append(U_of(tau))
        P.append(instantaneous_power(Phi, B, rate, init))
        g = equilibrium_correlations(svd_canonical(B), warn=False)
        P_ad.append(rate * float(np.trace(g.K_ab)))
        last = (B, Phi)
    B, Phi = last
    n_exc = excitation_density(B, evolve_correlations(Phi, init))
    meta = {"tau_Q": tau_Q, "L": L, "U_start": U_start, "U_end": U_end, "dtau": dtau,
            "boundary": boundary, "method": method}
    return RampResult(tau_Q, L, np.array(taus), np.array(Us), np.array(P), np.array(P_ad), n_exc, meta)


def kibble_zurek_estimate(tau_Q: float, t: float = 1.0) -> float:
    """Power density ``(1/2 pi) (dU/dtau) / (2t sqrt(2 tau_Q))`` for ``dU/dtau = 1/tau_Q``."""
    return 1.0 / (2 * np.pi) * (1.0 / tau_Q) / (2 * t * np.sqrt(2 * tau_Q))
