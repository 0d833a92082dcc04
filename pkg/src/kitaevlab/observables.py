"""Ground-state observables from Majorana correlations (Wick's theorem).

Site labels in this module are 1-based, matching the physical chain
``j = 1, ..., L``.  All spin/pairing observables reduce to string
expectations ``S(i, j) = <prod_{l=i}^{j} (-i a_l b_l)>`` weighted by the
sector charges ``r``.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import quad

from .canon import MajoranaCorrelations
from .model import SectorConfig
from .pfaffian import pfaffian


class MajoranaOpRef(NamedTuple):
    flavor: str
    site: int


def op(flavor: str, site: int) -> MajoranaOpRef:
    if flavor not in ("a", "b"):
        raise ValueError(f"flavor must be 'a' or 'b' (got {flavor!r})")
    return MajoranaOpRef(flavor, int(site))


def _check_site(corr: MajoranaCorrelations, j: int) -> None:
    if not 1 <= j <= corr.L:
        raise IndexError(f"site {j} outside 1..{corr.L}")


def string_expectation(corr: MajoranaCorrelations, i: int, j: int) -> float:
    """``<prod_{l=i}^{j} (-i a_l b_l)>`` as a minor of ``K_ab``; 1 for an empty product."""
    if j < i:
        return 1.0
    _check_site(corr, i)
    _check_site(corr, j)
    if not corr.is_equilibrium:
        return wick_expectation(corr, [op(f, l) for l in range(i, j + 1) for f in "ab"])
    return float(np.linalg.det(corr.K_ab[i - 1:j, i - 1:j]))


def tail_strings(corr: MajoranaCorrelations) -> np.ndarray:
    """Array ``s`` with ``s[j-1] = S(j, L)`` for j = 1..L+1 (last entry the empty product)."""
    L = corr.L
    out = np.ones(L + 1)
    for j in range(1, L + 1):
        out[j - 1] = string_expectation(corr, j, L)
    return out


def _element(corr: MajoranaCorrelations, p: MajoranaOpRef, q: MajoranaOpRef):
    i, j = p.site - 1, q.site - 1
    if p.flavor == "a" and q.flavor == "b":
        return corr.K_ab[i, j]
    if p.flavor == "b" and q.flavor == "a":
        return -corr.K_ab[j, i]
    if p.flavor == "a":
        return corr.K_aa[i, j]
    return corr.K_bb[i, j]


def wick_expectation(corr: MajoranaCorrelations, ops: Sequence[MajoranaOpRef],
                     imag_tol: float = 1e-10) -> float:
    """``<(-i)^{n/2} psi_1 psi_2 ... psi_n>`` for distinct Majorana operators.

    The prefactor makes the product Hermitian, so the result is the Pfaffian
    of the real antisymmetric matrix ``M_{mu nu} = <-i psi_mu psi_nu>``.
    """
    ops = [op(*o) for o in ops]
    n = len(ops)
    if n % 2:
        raise ValueError("Wick expectation needs an even number of operators")
    if len(set(ops)) != n:
        raise ValueError("operators must be pairwise distinct")
    for o in ops:
        _check_site(corr, o.site)
    if n == 0:
        return 1.0
    M = np.zeros((n, n), dtype=np.result_type(corr.K_ab, corr.K_aa, corr.K_bb))
    for mu in range(n):
        for nu in range(mu + 1, n):
            M[mu, nu] = _element(corr, ops[mu], ops[nu])
            M[nu, mu] = -M[mu, nu]
    val = pfaffian(M, check=False)
    if np.iscomplexobj(val):
        if abs(val.imag) > imag_tol:
            raise ValueError(f"expectation has imaginary part {val.imag:.3e}")
        val = val.real
    return float(val)


def _r(sector: SectorConfig, j: int) -> int:
    return sector.r[j - 1]


def singlet_onsite(corr: MajoranaCorrelations, sector: SectorConfig, j: int) -> complex:
    """``<c_{j up} c_{j down}>`` (purely imaginary)."""
    _check_site(corr, j)
    L = corr.L
    s = string_expectation(corr, j + 1, L) + string_expectation(corr, j, L)
    return 0.25j * _r(sector, j) * s


def magnetization_y(corr: MajoranaCorrelations, sector: SectorConfig, j: int) -> float:
    _check_site(corr, j)
    L = corr.L
    s = string_expectation(corr, j, L) - string_expectation(corr, j + 1, L)
    return 0.25 * _r(sector, j) * s


def singlet_profile(corr: MajoranaCorrelations, sector: SectorConfig) -> np.ndarray:
    s = tail_strings(corr)
    return 0.25j * sector.array * (s[1:] + s[:-1])


def magnetization_profile(corr: MajoranaCorrelations, sector: SectorConfig) -> np.ndarray:
    s = tail_strings(corr)
    return 0.25 * sector.array * (s[:-1] - s[1:])


def _four_strings(corr, i, j):
    if not i < j:
        raise ValueError(f"need i < j (got i={i}, j={j})")
    _check_site(corr, i)
    _check_site(corr, j)
    S = string_expectation
    return S(corr, i, j - 1), S(corr, i + 1, j - 1), S(corr, i, j), S(corr, i + 1, j)


def pair_pair(corr: MajoranaCorrelations, sector: SectorConfig, i: int, j: int) -> float:
    """``<c_{i up} c_{i down} c^dag_{j down} c^dag_{j up}>`` for i < j."""
    s1, s2, s3, s4 = _four_strings(corr, i, j)
    return _r(sector, i) * _r(sector, j) / 16.0 * (s1 + s2 + s3 + s4)


def spinspin_y(corr: MajoranaCorrelations, sector: SectorConfig, i: int, j: int) -> float:
    """``<S^y_i S^y_j>`` for i < j."""
    s1, s2, s3, s4 = _four_strings(corr, i, j)
    return _r(sector, i) * _r(sector, j) / 16.0 * (s1 - s2 - s3 + s4)


def density(corr: MajoranaCorrelations, j: int) -> float:
    """``<n_{j sigma}>``.

    ``2 n - 1`` does not commute with the conserved charges, so its expectation
    vanishes in every sector state, in and out of equilibrium.
    """
    _check_site(corr, j)
    return 0.5


def parity_zp(corr: MajoranaCorrelations, sector: SectorConfig, spin: str = "up") -> float:
    """Single-spin particle-hole parity ``<Z^p_{2,sigma}>``.

    Evaluated from ``prod_j(-r_{2j-1}) <a_1 i b_2 a_3 i b_4 ... a_{L-1} i b_L>``.
    Both spin species give the same value within a sector.
    """
    if spin not in ("up", "down"):
        raise ValueError("spin must be 'up' or 'down'")
    L = corr.L
    r = sector.array
    ops = []
    for j in range(1, L + 1, 2):
        ops += [op("a", j), op("b", j + 1)]
    # <a_1 i b_2 ...> = i^{L/2} <a_1 b_2 ...> = (-1)^{L/2} wick_expectation(...)
    prefactor = float(np.prod(-r[0::2])) * (-1) ** (L // 2)
    return prefactor * wick_expectation(corr, ops)


# ---------------------------------------------------------------------------
# closed-form references

def order_parameter(U: float, t: float = 1.0) -> float:
    """``(1 - (2t/U)^2)^(1/4)`` for ``|U| > 2t``, zero otherwise."""
    if abs(U) <= 2 * t:
        return 0.0
    return (1.0 - (2.0 * t / U) ** 2) ** 0.25


def boundary_singlet_integral(U: float, t: float = 1.0, r_L: int = 1) -> complex:
    """Boundary singlet ``<c_{L up} c_{L down}>`` of the semi-infinite chain at alpha = 1."""
    x = U / (2.0 * t)

    def integrand(k):
        return np.sin(k) ** 2 / np.sqrt(max(1.0 + x * x - 2.0 * x * np.cos(k), 0.0))

    if U == 0:
        integral = 0.0
    elif abs(abs(U) - 2 * t) < 1e-3 * t:
        # kink of the integrand at k = 0 (U > 0) or k = pi (U < 0)
        kink = 0.0 if U > 0 else np.pi
        pts = [kink + s * 10.0 ** -p for p in range(1, 7) for s in (1, -1)
               if 0 < kink + s * 10.0 ** -p < np.pi]
        integral = quad(integrand, 0, np.pi, points=sorted(pts), epsabs=1e-10, epsrel=1e-12, limit=400)[0]
    else:
        integral = quad(integrand, 0, np.pi, epsabs=1e-10, epsrel=1e-12, limit=200)[0]
    return 0.25j * r_L * (1.0 - U / (np.pi * t) * integral)


def decoupled_edge_singlet(U: float, t: float, L: int, r_L: int = 1) -> complex:
    """Finite-L boundary singlet in the limit alpha -> 0 (``a_L`` decoupled)."""
    x = U / (2.0 * t)
    if U == 0 or abs(x) == 1:
        raise ValueError("formula undefined at U = 0 and |U| = 2t")
    ratio = (x * x - 1.0) / (1.0 - x ** (-2 * L))
    return 0.25j * r_L * (1.0 - np.sqrt(ratio) / x)


def staggered_strings(U: float, t: float, i: int, j: int) -> float:
    """Exact bulk string ``S(i, j)`` (1 < i <= j < L) in a staggered sector.

    Molecules occupy sites ``(2m, 2m+1)``; a string covering whole molecules
    gives 1 and each cut molecule contributes ``g = -U / sqrt(t^2 + U^2)``.
    """
    if j < i:
        return 1.0
    g = -U / np.hypot(t, U)
    if i == j:
        return g
    return g ** ((i % 2 == 1) + (j % 2 == 0))


REFERENCE_KINDS = ("eq8", "eq9", "eq10", "eq11", "eq12", "eq13", "eq14", "eq15",
                   "appendix-string-asymptotic")


def analytic_reference(kind: str, U: float, t: float = 1.0, **kw):
    """Closed-form reference values.

    Extra keywords by kind: ``r`` (charge of the site, default +1) for eq8-eq10,
    eq12; ``L`` for eq9/eq12; ``j`` for eq12; ``i, j, r_i, r_j`` for eq13-eq15;
    ``n`` (string length) for the string asymptotic.
    """
    r = kw.get("r", 1)
    m = order_parameter(U, t)
    if kind == "eq8":
        return boundary_singlet_integral(U, t, r)
    if kind == "eq9":
        return decoupled_edge_singlet(U, t, int(kw["L"]), r)
    if kind == "eq10":
        return 0.5j * r * m if U < -2 * t else 0j
    if kind == "eq11":
        return 0.25 * m if U < -2 * t else 0.0
    if kind == "eq12":
        L, j = int(kw["L"]), int(kw["j"])
        return 0.5 * r * (-1) ** L * (-1) ** (j + 1) * m if U > 2 * t else 0.0
    if kind == "eq13":
        i, j = int(kw["i"]), int(kw["j"])
        return 0.25 * (-1) ** (j - i) * m if U > 2 * t else 0.0
    if kind in ("eq14", "eq15"):
        i, j = int(kw["i"]), int(kw["j"])
        if i == j:
            raise ValueError("eq14/eq15 need distinct sites")
        parity = 1 if (i - j) % 2 == 0 else -1
        r_ij = kw.get("r_i", 1) * kw.get("r_j", 1)
        sign = -1.0 if kind == "eq14" else 1.0
        return parity * r_ij / 8.0 * (U / np.hypot(t, U) + sign)
    if kind == "appendix-string-asymptotic":
        n = int(kw["n"])
        return (-np.sign(U)) ** n * m
    raise ValueError(f"unknown reference kind {kind!r}")
