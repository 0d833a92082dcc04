"""Canonical free-fermion form of a sector via singular value decomposition."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import BMatrix


class ZeroModeWarning(UserWarning):
    """Correlations built on a decomposition with (numerically) zero singular values."""

    def __init__(self, count: int):
        super().__init__(f"{count} zero singular value(s): polar factor is not unique")
        self.count = count


@dataclass(frozen=True)
class CanonicalForm:
    Umat: np.ndarray
    Vmat: np.ndarray
    Lambda: np.ndarray
    E0: float
    detB_sign: int
    offset: float = 0.0

    @property
    def L(self) -> int:
        return self.Lambda.size

    @property
    def energy(self) -> float:
        return self.E0 + self.offset

    def zero_modes(self, rtol: Optional[float] = None) -> int:
        lam = self.Lambda
        if lam.size == 0 or lam[0] == 0:
            return lam.size
        if rtol is None:
            rtol = lam.size * np.finfo(float).eps
        return int(np.sum(lam <= rtol * lam[0]))

    def reconstruct(self) -> np.ndarray:
        return (self.Umat * self.Lambda) @ self.Vmat.T


@dataclass(frozen=True)
class MajoranaCorrelations:
    """Two-point Majorana correlators ``<-i a_i b_j>``, ``<-i a_i a_j>``, ``<-i b_i b_j>``."""

    K_ab: np.ndarray
    K_aa: np.ndarray
    K_bb: np.ndarray
    tau: float = 0.0

    @property
    def L(self) -> int:
        return self.K_ab.shape[0]

    @property
    def is_equilibrium(self) -> bool:
        return not (np.any(self.K_aa) or np.any(self.K_bb))

    def covariance(self) -> np.ndarray:
        """Full antisymmetric matrix ``<-i psi_mu psi_nu>`` for ``psi = (a, b)``."""
        return np.block([[self.K_aa, self.K_ab], [-self.K_ab.T, self.K_bb]])

    @classmethod
    def from_covariance(cls, gamma: np.ndarray, tau: float = 0.0) -> "MajoranaCorrelations":
        L = gamma.shape[0] // 2
        return cls(gamma[:L, L:], gamma[:L, :L], gamma[L:, L:], tau)


def svd_canonical(B) -> CanonicalForm:
    """Decompose ``B = U diag(Lambda) V^T`` with descending ``Lambda``.

    Accepts a :class:`BMatrix` (its offset is carried along) or a bare array.
    """
    offset = 0.0
    if isinstance(B, BMatrix):
        offset = B.offset
        B = B.matrix
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"B must be square (got shape {B.shape})")
    if not np.all(np.isfinite(B)):
        raise np.linalg.LinAlgError("B contains non-finite entries")
    U, lam, Vt = np.linalg.svd(B)
    sign = int(np.linalg.slogdet(B)[0])
    return CanonicalForm(U, Vt.T, lam, -0.5 * float(lam.sum()), sign, offset)


def equilibrium_correlations(canonical: CanonicalForm, warn: bool = True) -> MajoranaCorrelations:
    """Sector vacuum with ``<-i a~_k b~_k> = +1`` for every mode."""
    if warn:
        n0 = canonical.zero_modes()
        if n0:
            warnings.warn(ZeroModeWarning(n0), stacklevel=2)
    L = canonical.L
    zeros = np.zeros((L, L))
    return MajoranaCorrelations(canonical.Umat @ canonical.Vmat.T, zeros, zeros.copy(), 0.0)


def band_reference(theta, U: float, t: float = 1.0):
    """Bulk band ``2t sqrt((U/2t)^2 + 1 - (U/t) cos theta)``.

    Note this is half the singular values of ``B``: the bulk singular values of
    a homogeneous sector fill ``[2|U - 2t|, 2(|U| + 2t)]``.
    """
    if U == 0:
        raise ValueError("band formula requires U != 0")
    x = U / (2.0 * t)
    return 2.0 * t * np.sqrt(np.maximum(x * x + 1.0 - (U / t) * np.cos(theta), 0.0))


def band_edges(U: float, t: float = 1.0) -> tuple[float, float]:
    return abs(abs(U) - 2 * t), abs(U) + 2 * t


def edge_gap_reference(U: float, t: float, alpha: float, L: int) -> float:
    """Asymptotic edge-mode value in the topological phase ``|U| < 2t``.

    Same normalisation as :func:`band_reference` (half a singular value of ``B``).
    """
    x = U / (2.0 * t)
    if abs(x) >= 1:
        raise ValueError("edge-mode formula requires |U| < 2t")
    if U == 0 or alpha == 0:
        return 0.0
    return 2.0 * t * abs(alpha) * (1 - x * x) / np.sqrt(1 + (alpha * alpha - 1) * x * x) * abs(x) ** L


def out_of_band(canonical: CanonicalForm, U: float, t: float = 1.0, tol: float = 1e-3) -> np.ndarray:
    """Singular values lying outside the (B-normalised) bulk band by more than ``tol``."""
    lo, hi = band_edges(U, t)
    lam = canonical.Lambda
    return lam[(lam < 2 * lo - tol) | (lam > 2 * hi + tol)]
