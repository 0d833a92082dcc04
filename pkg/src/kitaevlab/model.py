"""Sector-reduced quadratic data for the symmetric-point spinful Kitaev chain.

Within a fixed configuration ``r`` of the conserved charges the chain maps onto
a single-flavour Majorana model

    H = (i/2) sum_ij a_i B_ij b_j + offset

and everything downstream (spectra, correlators, dynamics) starts from the
real matrix ``B`` built here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

BOUNDARIES = ("open", "periodic", "antiperiodic")

FAMILIES = (
    "homogeneous-plus",
    "homogeneous-minus",
    "staggered-A",
    "staggered-B",
    "bulk-homogeneous",
    "custom",
)

DEFAULT_ALPHA0 = 1e-6


class ModelError(ValueError):
    """Raised when parameters violate a model invariant."""


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the chain at the symmetric point (Delta = t, mu = 0).

    ``u`` may be given as a scalar and is broadcast to length ``L``.
    ``boundary="antiperiodic"`` closes the ring with the opposite sign of the
    periodic closure; it only exists for the mapped model and is used to avoid
    exact gap closings at finite size.
    """

    t: float = 1.0
    u: np.ndarray | float = 0.0
    lam: float = 0.0
    delta0: float = 0.0
    h: float = 0.0
    L: int = 4
    boundary: str = "open"

    def __post_init__(self):
        L = int(self.L)
        object.__setattr__(self, "L", L)
        if L < 2 or L % 2:
            raise ModelError(f"L must be even and >= 2 (got {L})")
        if not self.t > 0:
            raise ModelError(f"t must be positive (got {self.t})")
        for name in ("t", "lam", "delta0", "h"):
            value = getattr(self, name)
            if np.ndim(value) != 0 or not np.isfinite(value):
                raise ModelError(f"{name} must be a finite scalar (got {value!r})")
            object.__setattr__(self, name, float(value))
        if self.boundary not in BOUNDARIES:
            raise ModelError(f"unknown boundary {self.boundary!r}")
        if self.boundary != "open" and (self.delta0 != 0 or self.h != 0):
            raise ModelError("periodic boundary requires delta0 = h = 0")
        u = np.asarray(self.u, dtype=float)
        if u.ndim == 0:
            u = np.full(L, float(u))
        if u.shape != (L,):
            raise ModelError(f"u must be a scalar or have length L={L} (got shape {u.shape})")
        if not np.all(np.isfinite(u)):
            raise ModelError("u must be finite")
        object.__setattr__(self, "u", _readonly(u))

    @property
    def c0(self) -> float:
        return 0.5 * (self.delta0 - 0.5 * self.h)

    @property
    def edge_coupling(self) -> float:
        """Coefficient ``Delta0 + h/2`` of the boundary term ``R_L a_L b_L``."""
        return self.delta0 + 0.5 * self.h

    @property
    def homogeneous_u(self) -> float:
        if not np.all(self.u == self.u[0]):
            raise ModelError("interaction pattern is not homogeneous")
        return float(self.u[0])

    def alpha(self, r_L: int) -> float:
        """Boundary renormalisation ``alpha`` with ``alpha U = (Delta0 + h/2) r_L / 2 + U``."""
        U = self.u[-1]
        if U == 0:
            raise ModelError("alpha is undefined at U_L = 0")
        return (0.5 * self.edge_coupling * r_L + U) / U

    def with_alpha(self, alpha: float, r_L: int = 1) -> "ModelParams":
        """Copy whose singlet pairing ``delta0`` realises ``alpha`` (field set to zero).

        At ``U_L = 0`` the edge term cannot be expressed through alpha and the
        boundary couplings are simply switched off.
        """
        U = float(self.u[-1])
        delta0 = 2.0 * U * (alpha - 1.0) * r_L if U != 0 else 0.0
        return self.replace(delta0=delta0, h=0.0)

    def replace(self, **changes) -> "ModelParams":
        kw = dict(t=self.t, u=self.u, lam=self.lam, delta0=self.delta0,
                  h=self.h, L=self.L, boundary=self.boundary)
        kw.update(changes)
        return ModelParams(**kw)

    def as_dict(self) -> dict:
        u = self.u
        return {
            "t": self.t,
            "u": float(u[0]) if np.all(u == u[0]) else u.tolist(),
            "lambda": self.lam,
            "delta0": self.delta0,
            "h": self.h,
            "L": self.L,
            "boundary": self.boundary,
        }


@dataclass(frozen=True)
class SectorConfig:
    """Eigenvalues ``r_j = +-1`` of the conserved charges, plus a family tag."""

    r: tuple
    family: str = "custom"

    def __post_init__(self):
        r = tuple(int(x) for x in self.r)
        if any(x not in (1, -1) for x in r):
            raise ModelError("sector entries must be +1 or -1")
        if self.family not in FAMILIES:
            raise ModelError(f"unknown sector family {self.family!r}")
        object.__setattr__(self, "r", r)

    @property
    def L(self) -> int:
        return len(self.r)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.r, dtype=float)

    def flipped(self) -> "SectorConfig":
        flip = {
            "homogeneous-plus": "homogeneous-minus",
            "homogeneous-minus": "homogeneous-plus",
            "staggered-A": "staggered-B",
            "staggered-B": "staggered-A",
        }
        return SectorConfig(tuple(-x for x in self.r), flip.get(self.family, self.family))

    @classmethod
    def custom(cls, r: Sequence[int]) -> "SectorConfig":
        return cls(tuple(r), "custom")


def make_sector(family: str, L: int, edge_signs: Optional[tuple] = None,
                bulk: int = 1) -> SectorConfig:
    """r-vector of a named sector family.

    ``edge_signs=(r_1, r_L)`` and ``bulk`` are only meaningful for
    ``"bulk-homogeneous"``.
    """
    L = int(L)
    if L < 2 or L % 2:
        raise ModelError(f"L must be even and >= 2 (got {L})")
    if edge_signs is not None and family != "bulk-homogeneous":
        raise ModelError("edge_signs only apply to the bulk-homogeneous family")
    if family == "homogeneous-plus":
        r = [1] * L
    elif family == "homogeneous-minus":
        r = [-1] * L
    elif family in ("staggered-A", "staggered-B"):
        r = []
        for j in range(1, L // 2 + 1):
            r += [(-1) ** (j + 1), (-1) ** j]
        if family == "staggered-B":
            r = [-x for x in r]
    elif family == "bulk-homogeneous":
        if bulk not in (1, -1):
            raise ModelError("bulk sign must be +1 or -1")
        first, last = edge_signs if edge_signs is not None else (-bulk, -bulk)
        r = [bulk] * L
        r[0], r[-1] = first, last
    else:
        raise ModelError(f"unknown sector family {family!r}")
    return SectorConfig(tuple(r), family)


def family_candidates(L: int) -> list[SectorConfig]:
    """The restricted search space: homogeneous, staggered and bulk-homogeneous sectors."""
    out = [make_sector(f, L) for f in ("homogeneous-plus", "homogeneous-minus",
                                       "staggered-A", "staggered-B")]
    seen = {s.r for s in out}
    for bulk in (1, -1):
        for edges in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            s = make_sector("bulk-homogeneous", L, edges, bulk)
            if s.r not in seen:
                seen.add(s.r)
                out.append(s)
    return out


def classify_sector(r: Sequence[int]) -> str:
    """Region label of an r-vector: homogeneous, bulk-homogeneous, staggered or other."""
    r = tuple(r)
    L = len(r)
    if len(set(r)) == 1:
        return "homogeneous"
    if L > 2 and len(set(r[1:-1])) == 1:
        return "bulk-homogeneous"
    if r in (make_sector("staggered-A", L).r, make_sector("staggered-B", L).r):
        return "staggered"
    return "other"


@dataclass(frozen=True)
class BMatrix:
    matrix: np.ndarray
    offset: float
    params: Optional[ModelParams] = field(default=None, compare=False)
    sector: Optional[SectorConfig] = field(default=None, compare=False)

    @property
    def L(self) -> int:
        return self.matrix.shape[0]


def sector_offset(params: ModelParams, sector: SectorConfig) -> float:
    """Scalar part ``c0 r_L + lambda sum_i r_{2i} r_{2i-1}`` of the sector energy."""
    r = sector.array
    dimer = float(np.sum(r[1::2] * r[0::2]))
    edge = params.c0 * r[-1] if params.boundary == "open" else 0.0
    return edge + params.lam * dimer


def build_b_matrix(params: ModelParams, sector: SectorConfig) -> BMatrix:
    if sector.L != params.L:
        raise ModelError(f"sector length {sector.L} does not match L={params.L}")
    L = params.L
    r = sector.array
    B = np.diag(-2.0 * params.u)
    bonds = -2.0 * (r[:-1] + r[1:]) * params.t
    B[np.arange(L - 1), np.arange(1, L)] = bonds
    if params.boundary == "open":
        B[L - 1, L - 1] -= params.edge_coupling * r[-1]
    else:
        sign = 1.0 if params.boundary == "periodic" else -1.0
        B[L - 1, 0] += sign * (-2.0) * (r[-1] + r[0]) * params.t
    B.setflags(write=False)
    return BMatrix(B, sector_offset(params, sector), params, sector)


def build_disorder_pattern(x: float, N: int, U: float, L: int) -> np.ndarray:
    """Interaction pattern with ``U`` on sites N, 2N, ... and ``x U`` elsewhere."""
    if N < 1:
        raise ModelError("N must be >= 1")
    if N > L:
        raise ModelError(f"N={N} exceeds L={L}")
    if x < 0:
        raise ModelError("x must be non-negative")
    u = np.full(L, x * U, dtype=float)
    u[N - 1::N] = U
    return u


def random_disorder_pattern(x: float, fraction: float, U: float, L: int,
                            seed: int) -> np.ndarray:
    """Sites take ``x U`` with probability ``fraction`` and ``U`` otherwise."""
    if not 0 <= fraction <= 1:
        raise ModelError("fraction must lie in [0, 1]")
    if x < 0:
        raise ModelError("x must be non-negative")
    rng = np.random.default_rng(seed)
    mask = rng.random(L) < fraction
    return np.where(mask, x * U, U).astype(float)
