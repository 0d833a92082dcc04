"""Ground-sector search, (U, lambda) phase diagram and Majorana-number diagnostics."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .model import (ModelError, ModelParams, SectorConfig, build_disorder_pattern,
                    classify_sector, family_candidates, random_disorder_pattern)

REGIONS = ("homogeneous", "bulk-homogeneous", "staggered")
PRECEDENCE = REGIONS + ("other",)
EXHAUSTIVE_MAX_L = 20
DEGENERACY_RTOL = 1e-9


class SearchTooLarge(ModelError):
    pass


@dataclass(frozen=True)
class PhasePoint:
    U: float
    lam: float
    family: str
    energy: float
    degeneracy: int
    region: str
    sector: tuple
    minimizers: tuple = ()
    topological: Optional[int] = None


# ---------------------------------------------------------------------------
# vectorised sector energies

def _b_stack(params: ModelParams, R: np.ndarray) -> np.ndarray:
    """B matrices for a batch of r-vectors (rows of ``R``)."""
    n, L = R.shape
    B = np.zeros((n, L, L))
    idx = np.arange(L)
    B[:, idx, idx] = -2.0 * params.u
    B[:, idx[:-1], idx[1:]] = -2.0 * params.t * (R[:, :-1] + R[:, 1:])
    if params.boundary == "open":
        B[:, L - 1, L - 1] -= params.edge_coupling * R[:, -1]
    else:
        sign = 1.0 if params.boundary == "periodic" else -1.0
        B[:, L - 1, 0] += -2.0 * sign * params.t * (R[:, -1] + R[:, 0])
    return B


def free_energies(params: ModelParams, R: np.ndarray, chunk: int = 8192) -> np.ndarray:
    """``E0 = -sum(Lambda)/2`` for each row of ``R`` (no lambda / c0 offset)."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    out = np.empty(R.shape[0])
    for s in range(0, R.shape[0], chunk):
        sv = np.linalg.svd(_b_stack(params, R[s:s + chunk]), compute_uv=False)
        out[s:s + chunk] = -0.5 * sv.sum(axis=1)
    return out


def dimer_sums(R: np.ndarray) -> np.ndarray:
    R = np.atleast_2d(R)
    return np.sum(R[:, 1::2] * R[:, 0::2], axis=1)


def offsets(params: ModelParams, R: np.ndarray, lam=None) -> np.ndarray:
    """Scalar offsets; ``lam`` may be an array, giving shape (len(lam), n)."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    edge = params.c0 * R[:, -1] if params.boundary == "open" else np.zeros(R.shape[0])
    lam = params.lam if lam is None else lam
    return edge + np.multiply.outer(lam, dimer_sums(R))


def all_sectors(L: int) -> np.ndarray:
    return np.array(list(itertools.product((1, -1), repeat=L)), dtype=float)


def _pick(U, lam, energies, R, families, rtol):
    emin = float(energies.min())
    tol = rtol * max(1.0, abs(emin))
    winners = np.flatnonzero(energies <= emin + tol)
    labels = [classify_sector(R[k]) for k in winners]
    best = min(range(len(winners)), key=lambda m: (PRECEDENCE.index(labels[m]), winners[m]))
    k = winners[best]
    mins = tuple(tuple(int(x) for x in R[w]) for w in winners)
    return PhasePoint(float(U), float(lam), families[k], emin, len(winners), labels[best],
                      tuple(int(x) for x in R[k]), mins)


def ground_sector_search(params: ModelParams, mode: str = "families", rtol: float = DEGENERACY_RTOL,
                         allow_large: bool = False) -> PhasePoint:
    """Lowest ``E0 + offset`` over the family candidates or over all ``2^L`` sectors.

    Ties within ``rtol`` (relative) are all listed in ``minimizers``; the
    reported region follows homogeneous > bulk-homogeneous > staggered.
    """
    L = params.L
    if mode == "families":
        cands = family_candidates(L)
        R = np.array([s.r for s in cands], dtype=float)
        fams = [s.family for s in cands]
    elif mode == "exhaustive":
        if L > EXHAUSTIVE_MAX_L and not allow_large:
            raise SearchTooLarge(f"exhaustive search over 2^{L} sectors refused (L > {EXHAUSTIVE_MAX_L})")
        R = all_sectors(L)
        fams = ["custom"] * len(R)
    else:
        raise ValueError(f"mode must be 'families' or 'exhaustive' (got {mode!r})")
    E = free_energies(params, R) + offsets(params, R)
    U = float(params.u[0]) if params.homogeneous_u else float("nan")
    return _pick(U, params.lam, E, R, fams, rtol)


# ---------------------------------------------------------------------------
# phase scan

def grid_values(lo: float, hi: float, step: float) -> np.ndarray:
    if step <= 0:
        raise ValueError("step must be positive")
    if hi < lo:
        raise ValueError(f"empty range [{lo}, {hi}]")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


@dataclass
class PhaseGrid:
    """Row-major grid: ``points[i][j]`` sits at ``lam[i]``, ``U[j]``."""

    U: np.ndarray
    lam: np.ndarray
    points: list
    L: int
    meta: dict = field(default_factory=dict)

    def labels(self) -> np.ndarray:
        return np.array([[p.region for p in row] for row in self.points])

    def energies(self) -> np.ndarray:
        return np.array([[p.energy for p in row] for row in self.points])

    def components(self) -> dict:
        """Number of 4-connected patches per region label."""
        lab = self.labels()
        return {str(r): int(ndimage.label(lab == r)[1]) for r in np.unique(lab)}

    def lambda_c(self, U: float) -> float:
        """Smallest lambda on the grid where the staggered region wins at the column nearest ``U``."""
        j = int(np.argmin(np.abs(self.U - U)))
        col = self.labels()[:, j]
        hits = np.flatnonzero(col == "staggered")
        return float(self.lam[hits[0]]) if hits.size else float("nan")

    def rows(self):
        for row in self.points:
            for p in row:
                yield p


def _scan_column(U, lams, base: ModelParams, R, fams, rtol):
    p = base.replace(u=U)
    E = free_energies(p, R)[None, :] + offsets(p, R, lams)
    return [_pick(U, lam, E[i], R, fams, rtol) for i, lam in enumerate(lams)]


def phase_scan(U_range=(-4.0, 4.0), lambda_range=(0.0, 1.5), steps=(0.02, 0.005), L: int = 16,
               base: Optional[ModelParams] = None, mode: str = "families",
               rtol: float = DEGENERACY_RTOL, workers: Optional[int] = None) -> PhaseGrid:
    Us = grid_values(*U_range, steps[0])
    lams = grid_values(*lambda_range, steps[1])
    base = (base or ModelParams(L=L)).replace(L=L)
    if mode == "families":
        cands = family_candidates(L)
        R = np.array([s.r for s in cands], dtype=float)
        fams = [s.family for s in cands]
    else:
        if L > EXHAUSTIVE_MAX_L:
            raise SearchTooLarge(f"exhaustive scan refused for L={L}")
        R = all_sectors(L)
        fams = ["custom"] * len(R)

    def column(U):
        return _scan_column(float(U), lams, base, R, fams, rtol)

    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            cols = list(pool.map(column, Us))
    else:
        cols = [column(U) for U in Us]
    points = [[cols[j][i] for j in range(len(Us))] for i in range(len(lams))]
    meta = {"L": L, "U_range": list(U_range), "lambda_range": list(lambda_range),
            "U_step": steps[0], "lambda_step": steps[1], "mode": mode,
            "degeneracy_rtol": rtol, "tie_precedence": list(PRECEDENCE),
            "base_params": base.as_dict()}
    return PhaseGrid(Us, lams, points, L, meta)


def exhaustive_gap(U_values: Sequence[float], lam_values: Sequence[float], L: int,
                   base: Optional[ModelParams] = None) -> np.ndarray:
    """``E_families - E_exhaustive`` on a grid (rows lambda, columns U)."""
    base = (base or ModelParams(L=L)).replace(L=L)
    R_all = all_sectors(L)
    R_fam = np.array([s.r for s in family_candidates(L)], dtype=float)
    lams = np.asarray(lam_values, dtype=float)
    out = np.empty((lams.size, len(U_values)))
    for j, U in enumerate(U_values):
        p = base.replace(u=float(U))
        e_all = (free_energies(p, R_all)[None, :] + offsets(p, R_all, lams)).min(axis=1)
        e_fam = (free_energies(p, R_fam)[None, :] + offsets(p, R_fam, lams)).min(axis=1)
        out[:, j] = e_fam - e_all
    return out


def region_intervals(U: float, L: int = 16, base: Optional[ModelParams] = None,
                     lam_max: float = 10.0) -> list:
    """Exact sequence ``[(lam_start, lam_end, region), ...]`` along a lambda line.

    Family energies are affine in lambda, so the ground region follows from
    the lower envelope of a handful of lines.  Requires ``c0 = 0``.
    """
    base = (base or ModelParams(L=L)).replace(L=L, u=U)
    if base.boundary == "open" and base.c0 != 0:
        raise ModelError("region_intervals assumes c0 = 0")
    cands = family_candidates(L)
    R = np.array([s.r for s in cands], dtype=float)
    e0 = free_energies(base, R)
    D = dimer_sums(R)
    labels = [classify_sector(r) for r in R]
    out = []
    lam = 0.0
    while lam < lam_max:
        E = e0 + lam * D
        emin = E.min()
        tol = DEGENERACY_RTOL * max(1.0, abs(emin))
        tied = np.flatnonzero(E <= emin + tol)
        # leaving lam, the line with the smallest slope wins
        k = tied[np.argmin(D[tied])]
        region = labels[k]
        nxt = lam_max
        for m in range(len(D)):
            if D[m] < D[k]:
                cross = (e0[m] - e0[k]) / (D[k] - D[m])
                if lam + 1e-15 < cross < nxt:
                    nxt = cross
        if out and out[-1][2] == region:
            out[-1] = (out[-1][0], nxt, region)
        else:
            out.append((lam, nxt, region))
        lam = nxt
    return out


# ---------------------------------------------------------------------------
# topology

def bloch_matrix(u_supercell, t: float, k: float) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u_supercell, dtype=float))
    N = u.size
    B = np.diag(-2.0 * u).astype(complex)
    B[np.arange(N - 1), np.arange(1, N)] += -4.0 * t
    B[N - 1, 0] += -4.0 * t * np.exp(1j * k)
    return B


def majorana_number(u_supercell, t: float = 1.0, rtol: float = 1e-12) -> int:
    """``sgn(det B(0) det B(pi))`` of the repeated supercell; -1 is topological.

    Returns 0 at a critical point (a Bloch determinant vanishes).
    """
    u = np.atleast_1d(np.asarray(u_supercell, dtype=float))
    if u.size < 1:
        raise ValueError("supercell must contain at least one site")
    if t <= 0:
        raise ValueError("t must be positive")
    scale = (2.0 * np.abs(u).max() + 4.0 * t) ** u.size
    d0 = np.linalg.det(bloch_matrix(u, t, 0.0)).real
    dpi = np.linalg.det(bloch_matrix(u, t, np.pi)).real
    if min(abs(d0), abs(dpi)) <= rtol * scale:
        return 0
    return int(np.sign(d0 * dpi))


@dataclass(frozen=True)
class BetaEstimate:
    beta: float
    U_star: float
    bounded: bool


def beta_threshold(x: float, N: int, t: float = 1.0, U_max: float = 100.0,
                   tol: float = 1e-4, n_scan: int = 400) -> BetaEstimate:
    """Coefficient ``beta = t / U*`` where the pattern with x-ratio ``x`` stops being topological."""
    if x < 0 or N < 1:
        raise ModelError("need x >= 0 and N >= 1")

    def M(U):
        return majorana_number(build_disorder_pattern(x, N, U, N), t)

    Us = np.geomspace(1e-3 * t, U_max * t, n_scan)
    signs = np.array([M(U) for U in Us])
    flips = np.flatnonzero(signs != -1)
    if flips.size == 0:
        return BetaEstimate(0.0, float("inf"), False)
    k = flips[0]
    if k == 0:
        raise ModelError("pattern is not topological even at weak coupling")
    lo, hi = Us[k - 1], Us[k]
    while hi - lo > tol * t:
        mid = 0.5 * (lo + hi)
        if M(mid) == -1:
            lo = mid
        else:
            hi = mid
    U_star = 0.5 * (lo + hi)
    return BetaEstimate(t / U_star, float(U_star), True)


def classify_random_pattern(x: float, fraction: float, U: float, L: int, seed: int,
                            t: float = 1.0) -> int:
    """Majorana number of a random interaction pattern used as one supercell."""
    return majorana_number(random_disorder_pattern(x, fraction, U, L, seed), t)
