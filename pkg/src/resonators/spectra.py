"""Closed-form spectra of the path, cycle and grid Laplacians.

The leading-order capacitance structure of each arrangement is the graph
Laplacian of its tangency graph scaled by ``pi |log eps|``.  This module
gives its eigenvalues ``a`` (grouped with multiplicities), the eigenvectors,
the characteristic polynomial ``det(kappa - a I)`` and a dense ``eigh``
oracle used to cross-check all of it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .errors import CountMismatch, DegenerateGap, IndexOutOfRange, NotSymmetric
from .geometry import Kind, TangencyGraph, standard_graph_edges

CLOSED_FORM_TOL = 1e-9
SIN_SWITCH = 1e-8


@dataclass(frozen=True)
class SpectralGroup:
    a: float
    multiplicity: int
    theta: Optional[float] = None
    # grid groups: the (gamma, alpha) axis indices (1-based) whose sums land here
    pairs: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class ClosedFormSpectrum:
    kind: str
    dims: tuple[int, ...]
    groups: tuple[SpectralGroup, ...]
    units: str = "rho"

    @property
    def values(self) -> list[tuple[float, int]]:
        return [(g.a, g.multiplicity) for g in self.groups]

    @property
    def n(self) -> int:
        return sum(g.multiplicity for g in self.groups)

    def expanded(self) -> np.ndarray:
        """All N values with repetition, ascending."""
        return np.array([g.a for g in self.groups for _ in range(g.multiplicity)])

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "dims": list(self.dims),
            "groups": [{"a": g.a, "multiplicity": g.multiplicity, "theta": g.theta} for g in self.groups],
        }
        if self.units != "rho":
            out["units"] = self.units
        return out

    def to_csv_rows(self) -> list[list]:
        return [["a", "multiplicity", "theta"]] + [[g.a, g.multiplicity, g.theta] for g in self.groups]


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray = field(repr=False)


def _group_sorted(values: Sequence[float], tol: float) -> list[list[int]]:
    order = np.argsort(values, kind="stable")
    groups: list[list[int]] = []
    for idx in order:
        if groups and values[idx] - values[groups[-1][0]] <= tol:
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
    return groups


def chain_thetas(N: int) -> np.ndarray:
    return np.arange(N) * math.pi / N


def chain_values(N: int) -> np.ndarray:
    return 2.0 * (1.0 - np.cos(chain_thetas(N)))


def chain_eigenvalues(N: int) -> ClosedFormSpectrum:
    if N < 2:
        raise IndexOutOfRange(f"chain spectrum needs N >= 2, got {N}")
    thetas = chain_thetas(N)
    vals = chain_values(N)
    vals[0] = 0.0
    groups = tuple(SpectralGroup(float(a), 1, float(t)) for a, t in zip(vals, thetas))
    return ClosedFormSpectrum(Kind.CHAIN.value, (N,), groups)


def ring_alpha(N: int) -> int:
    return (N + 1) // 2 if N % 2 else N // 2


def ring_eigenvalues(N: int) -> ClosedFormSpectrum:
    if N < 3:
        raise IndexOutOfRange(f"ring spectrum needs N >= 3, got {N}")
    groups = [SpectralGroup(0.0, 1, 0.0)]
    for t in range(2, ring_alpha(N) + 1):
        theta = 2.0 * (t - 1) * math.pi / N
        groups.append(SpectralGroup(2.0 * (1.0 - math.cos(theta)), 2, theta))
    if N % 2 == 0:
        groups.append(SpectralGroup(4.0, 1, math.pi))
    return ClosedFormSpectrum(Kind.RING.value, (N,), tuple(groups))


def grid_eigenvalues(m: int, n: int, tol: float = CLOSED_FORM_TOL) -> ClosedFormSpectrum:
    if m > n:
        m, n = n, m
    if m < 2:
        raise IndexOutOfRange(f"grid spectrum needs n >= m >= 2, got {(m, n)}")
    am, an = chain_values(m), chain_values(n)
    am[0] = an[0] = 0.0
    sums, pairs = [], []
    for g in range(m):
        for a in range(n):
            sums.append(am[g] + an[a])
            pairs.append((g + 1, a + 1))
    sums = np.array(sums)
    groups = []
    for members in _group_sorted(sums, tol):
        groups.append(SpectralGroup(
            float(np.mean(sums[members])), len(members), None,
            tuple(sorted(pairs[k] for k in members)),
        ))
    return ClosedFormSpectrum(Kind.GRID.value, (m, n), tuple(groups))


def spectrum_for(kind, dims) -> ClosedFormSpectrum:
    kind = Kind.parse(kind)
    if kind is Kind.CHAIN:
        return chain_eigenvalues(int(np.atleast_1d(dims)[0]))
    if kind is Kind.RING:
        return ring_eigenvalues(int(np.atleast_1d(dims)[0]))
    m, n = dims
    return grid_eigenvalues(int(m), int(n))


def nonuniform_chain3(eps1: float, eps2: float, ratio_bound: float = 10.0) -> ClosedFormSpectrum:
    """Three spheres with unequal gaps; values are in units of ``|log eps|``, not rho.

    The second group takes the minus sign on the radical, the third the plus sign.
    """
    for e in (eps1, eps2):
        if not (0 < e < 1):
            raise DegenerateGap(f"gaps must lie in (0, 1), got {e}")
    L1, L2 = abs(math.log(eps1)), abs(math.log(eps2))
    if not (1.0 / ratio_bound <= L1 / L2 <= ratio_bound):
        warnings.warn(f"log-gap ratio {L1 / L2:.3g} outside [1/{ratio_bound}, {ratio_bound}]", stacklevel=2)
    root = math.sqrt(L1 * L1 + L2 * L2 - L1 * L2)
    a2 = L1 + L2 - root
    a3 = L1 + L2 + root
    groups = (SpectralGroup(0.0, 1), SpectralGroup(a2, 1), SpectralGroup(a3, 1))
    return ClosedFormSpectrum("nonuniform_chain3", (3,), groups, units="|log eps|")


def structure_matrix(kind, dims) -> np.ndarray:
    """Graph Laplacian of the path, cycle or grid graph, built combinatorially."""
    kind = Kind.parse(kind)
    if kind is Kind.GRID:
        m, n = dims
        N = m * n
    else:
        N = int(np.atleast_1d(dims)[0])
    return TangencyGraph(N, standard_graph_edges(kind, dims)).laplacian().astype(float)


def charpoly(kind, dims, a: float) -> float:
    """``det(kappa - a I)`` from the closed forms.

    Chain: ``-a sin(N theta) / sin(theta)``; ring: ``2 (cos(N theta) - 1)``;
    with ``cos(theta) = (2 - a) / 2``.  Where ``sin(theta)`` vanishes or ``a``
    leaves ``[0, 4]`` the equivalent Chebyshev polynomial is used instead.
    Grid: product of ``a_m + a_n - a`` over the two axis spectra.
    """
    kind = Kind.parse(kind)
    if kind is Kind.GRID:
        m, n = dims
        am, an = chain_values(int(m)), chain_values(int(n))
        am[0] = an[0] = 0.0
        return float(np.prod(am[:, None] + an[None, :] - a))
    N = int(np.atleast_1d(dims)[0])
    x = (2.0 - a) / 2.0
    trig = -1.0 <= x <= 1.0
    if trig:
        theta = math.acos(x)
        s = math.sin(theta)
    if kind is Kind.CHAIN:
        if trig and abs(s) >= SIN_SWITCH:
            return -a * math.sin(N * theta) / s
        return float(-a * special.eval_chebyu(N - 1, x))
    if trig:
        return 2.0 * (math.cos(N * theta) - 1.0)
    return float(2.0 * (special.eval_chebyt(N, x) - 1.0))


def dense_eigen(M, sym_tol: float = 1e-10) -> list[EigenPair]:
    """All eigenpairs of a symmetric matrix, ascending, unit-norm vectors."""
    M = np.asarray(M, dtype=float)
    scale = max(np.max(np.abs(M)), np.finfo(float).tiny)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {M.shape}")
    if np.max(np.abs(M - M.T)) > sym_tol * scale:
        raise NotSymmetric("matrix is not symmetric")
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    return [EigenPair(float(w[k]), V[:, k].copy()) for k in range(len(w))]


def distinct_count(spectrum: ClosedFormSpectrum, tol: float = CLOSED_FORM_TOL) -> tuple[int, list[list[float]]]:
    """Group the expanded values of ``spectrum`` within ``tol``; return the count and the members."""
    vals = spectrum.expanded()
    groups = [[float(vals[k]) for k in members] for members in _group_sorted(vals, tol)]
    return len(groups), groups


def normalize_first(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Scale so the first entry that is not numerically zero equals 1."""
    v = np.asarray(v, dtype=float)
    nz = np.flatnonzero(np.abs(v) > tol * max(np.max(np.abs(v)), 1.0))
    return v / v[nz[0]] if nz.size else v


def chain_eigenvector(N: int, i: int) -> np.ndarray:
    """Closed-form eigenvector of the path Laplacian for the ``i``-th value (1-based)."""
    if not 1 <= i <= N:
        raise IndexOutOfRange(f"mode index {i} outside 1..{N}")
    if i == 1:
        return np.ones(N)
    theta = (i - 1) * math.pi / N
    l = np.arange(1, N + 1)
    s = math.sin(theta)
    if abs(s) < SIN_SWITCH:
        # theta -> pi limit of the difference quotient
        v = (-1.0) ** (l - 1) * (2 * l - 1)
    else:
        v = (np.sin(l * theta) - np.sin((l - 1) * theta)) / s
    return normalize_first(v)


def ring_group_count(N: int) -> int:
    return len(ring_eigenvalues(N).groups)


def ring_eigenbasis(N: int, t: int):
    """Eigenvectors of the cycle Laplacian for spectral group ``t`` (1-based).

    ``t = 1`` gives the constant vector, ``t = 2..alpha(N)`` a pair
    ``(beta1, beta2)`` spanning the double eigenspace, and for even ``N`` the
    last group the alternating vector.
    """
    if N < 3:
        raise IndexOutOfRange(f"ring needs N >= 3, got {N}")
    alpha = ring_alpha(N)
    last = alpha + 1 if N % 2 == 0 else alpha
    if not 1 <= t <= last:
        raise IndexOutOfRange(f"group index {t} outside 1..{last}")
    l = np.arange(1, N + 1)
    if t == 1:
        return np.ones(N)
    if N % 2 == 0 and t == alpha + 1:
        return (-1.0) ** (l - 1)
    th = 2.0 * (t - 1) * math.pi / N
    s = math.sin(th)
    beta1 = -np.sin((l - 2) * th) / s
    beta2 = -np.sin((l - 1) * th) / s
    return normalize_first(beta1), normalize_first(beta2)


@dataclass
class GroupResidual:
    a: float
    multiplicity: int
    eigenvalues: list[float]
    max_residual: float
    K: float


def assign_to_groups(scaled: np.ndarray, spectrum: ClosedFormSpectrum) -> list[list[int]]:
    centers = np.array([g.a for g in spectrum.groups])
    owner = np.argmin(np.abs(scaled[:, None] - centers[None, :]), axis=1)
    return [list(np.flatnonzero(owner == k)) for k in range(len(centers))]


def localization_check(C, spectrum: ClosedFormSpectrum, rho: float) -> list[GroupResidual]:
    """Match the eigenvalues of ``C / rho`` to the closed-form groups of ``spectrum``.

    Each eigenvalue is assigned to its nearest group value; every group must
    receive exactly its multiplicity.  The returned ``K`` per group is the
    smallest constant with ``|lambda / rho - a| <= K / rho``.
    """
    entries = getattr(C, "entries", C)
    vals = np.array([p.value for p in dense_eigen(entries)])
    scaled = vals / rho
    owners = assign_to_groups(scaled, spectrum)
    out = []
    for g, members in zip(spectrum.groups, owners):
        if len(members) != g.multiplicity:
            raise CountMismatch(
                f"group a={g.a:.6g} captured {len(members)} eigenvalues, expected {g.multiplicity}"
            )
        res = float(np.max(np.abs(scaled[members] - g.a)))
        out.append(GroupResidual(g.a, g.multiplicity, [float(v) for v in vals[members]], res, res * rho))
    return out
