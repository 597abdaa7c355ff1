"""Resonant-mode surface values and gap blow-up classification.

A mode is, to leading order, constant on each sphere; the vector of those
constants is an eigenvector of the structure matrix.  Where two neighbours
carry the same value the field gradient in their gap is suppressed by a
factor ``|log eps|`` relative to the generic ``1/eps`` rate.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .capacitance import entries_of, CapacitanceMatrix, rho_of
from .errors import IndexOutOfRange, MissingCapacitance, ResidualTooLarge
from .geometry import Arrangement, Kind, tangency_graph
from .spectra import (assign_to_groups, chain_eigenvector, dense_eigen, grid_eigenvalues,
                      normalize_first, ring_alpha, ring_eigenbasis, ring_eigenvalues,
                      structure_matrix)

MODE_ERROR = "O(omega_i + 1/|log eps|)"
CLOSED_TOL = 1e-9


class Rate(str, Enum):
    FULL = "Full"
    SUPPRESSED = "Suppressed"


@dataclass(frozen=True)
class ModeProfile:
    index: int
    surface_values: np.ndarray = field(repr=False)
    a_value: float
    gap_rates: dict = field(default_factory=dict)
    provenance: str = "closed-form"
    error_order: str = MODE_ERROR

    def table_form(self) -> np.ndarray:
        """Values rescaled so the first nonzero entry is 1."""
        return normalize_first(self.surface_values)

    def to_dict(self) -> dict:
        return {
            "i": self.index,
            "a": self.a_value,
            "values": [float(x) for x in self.surface_values],
            "gaps": [{"edge": list(e), "rate": r.value} for e, r in sorted(self.gap_rates.items())],
            "provenance": self.provenance,
            "error_order": self.error_order,
        }


def normalize(v, tol: float = 1e-12) -> np.ndarray:
    """Scale to ``max |v| = 1`` with the first non-negligible entry positive."""
    v = np.asarray(v, dtype=float)
    v = v / np.max(np.abs(v))
    nz = np.flatnonzero(np.abs(v) > tol)
    return -v if v[nz[0]] < 0 else v


def suppression_tol(provenance: str, eps: Optional[float] = None, R: float = 1.0,
                    rho: Optional[float] = None) -> float:
    if provenance == "closed-form":
        return CLOSED_TOL
    if rho is None:
        rho = rho_of(eps, R) if eps is not None else math.inf
    return max(1e-8, 10.0 / rho)


def _edges(arr) -> list[tuple[int, int]]:
    return tangency_graph(arr).sorted_edges()


def gap_blowup(arr: Arrangement, profile: ModeProfile, eps: Optional[float] = None,
               rho: Optional[float] = None) -> dict:
    """Rate per tangency edge (1-based labels).

    Chains use the exact rule: gap ``(l, l+1)`` of mode ``i`` is suppressed iff
    ``l (i - 1)`` is a multiple of ``N``.  Rings and grids compare adjacent
    surface values against the suppression tolerance.
    """
    edges = _edges(arr)
    if arr.kind is Kind.CHAIN and profile.provenance == "closed-form":
        N, i = arr.n, profile.index
        return {(l + 1, l + 2): Rate.SUPPRESSED if ((l + 1) * (i - 1)) % N == 0 else Rate.FULL
                for l, _ in edges}
    tol = suppression_tol(profile.provenance, eps if eps is not None else arr.gap, arr.radius, rho)
    v = profile.surface_values
    return {(i + 1, j + 1): Rate.SUPPRESSED if abs(v[i] - v[j]) <= tol else Rate.FULL for i, j in edges}


def difference_rule(values: np.ndarray, edges, tol: float = CLOSED_TOL) -> set:
    return {(i + 1, j + 1) for i, j in edges if abs(values[i] - values[j]) <= tol}


@dataclass(frozen=True)
class MixingResult:
    eigenvalue: float
    k1: float
    k2: float
    residual: float
    bound: float
    vector: np.ndarray = field(repr=False)


def estimate_rho(C: np.ndarray) -> float:
    """Gap factor recovered from a ring capacitance matrix (each diagonal is ``2 rho + O(1)``)."""
    return float(np.trace(C) / (2.0 * C.shape[0]))


def resolve_ring_mixing(C, N: int, t: int, rho: Optional[float] = None,
                        K: Optional[float] = None) -> list[MixingResult]:
    """Express the two dense eigenvectors of group ``t`` in the ``(beta1, beta2)`` basis.

    The out-of-span remainder must stay below ``K / rho``.  ``K`` defaults to
    ``10 max(1, ||C - kappa rho||_2)``.
    """
    entries = entries_of(C)
    if entries.shape != (N, N):
        raise IndexOutOfRange(f"capacitance matrix is {entries.shape}, ring has N={N}")
    if not 2 <= t <= ring_alpha(N):
        raise IndexOutOfRange(f"t={t} is not an interior (double) group of the N={N} ring")
    rho = estimate_rho(entries) if rho is None else rho
    kappa = structure_matrix(Kind.RING, (N,))
    if K is None:
        K = 10.0 * max(1.0, float(np.linalg.norm(entries - kappa * rho, 2)))
    spectrum = ring_eigenvalues(N)
    pairs = dense_eigen(entries)
    vals = np.array([p.value for p in pairs]) / rho
    members = assign_to_groups(vals, spectrum)[t - 1]
    b1, b2 = ring_eigenbasis(N, t)
    B = np.stack([b1, b2], axis=1)
    out = []
    for m in members:
        v = pairs[m].vector
        k, *_ = np.linalg.lstsq(B, v, rcond=None)
        res = float(np.linalg.norm(v - B @ k))
        if res > K / rho:
            raise ResidualTooLarge(f"group {t} remainder {res:.3g} exceeds K/rho = {K / rho:.3g}")
        out.append(MixingResult(pairs[m].value, float(k[0]), float(k[1]), res, K / rho, B @ k))
    return out


def _profile(arr, index, vec, a, provenance, rho=None) -> ModeProfile:
    prof = ModeProfile(index, normalize(vec), float(a), {}, provenance)
    rates = gap_blowup(arr, prof, rho=rho)
    return ModeProfile(index, prof.surface_values, float(a), rates, provenance)


def _chain_profiles(arr):
    N = arr.n
    out = []
    for i in range(1, N + 1):
        a = 0.0 if i == 1 else 2.0 * (1.0 - math.cos((i - 1) * math.pi / N))
        out.append(_profile(arr, i, chain_eigenvector(N, i), a, "closed-form"))
    return out


def _ring_profiles(arr, C, mixing):
    N = arr.n
    spectrum = ring_eigenvalues(N)
    out = [_profile(arr, 1, np.ones(N), 0.0, "closed-form")]
    interior = [t for t in range(2, ring_alpha(N) + 1)]
    if interior and mixing == "resolve" and C is None:
        raise MissingCapacitance("ring interior modes need a capacitance matrix to resolve mixing")
    rho = None if C is None else estimate_rho(entries_of(C))
    index = 2
    for t in interior:
        a = spectrum.groups[t - 1].a
        if mixing == "resolve":
            vecs = [m.vector for m in resolve_ring_mixing(C, N, t)]
            prov = "oracle-resolved"
        else:
            vecs = list(ring_eigenbasis(N, t))
            prov = "closed-form"
        for v in vecs:
            out.append(_profile(arr, index, v, a, prov, rho))
            index += 1
    if N % 2 == 0:
        out.append(_profile(arr, N, ring_eigenbasis(N, ring_alpha(N) + 1), 4.0, "closed-form"))
    return out


def _grid_profiles(arr, C):
    m, n = arr.grid_dims
    spectrum = grid_eigenvalues(m, n)
    kappa = structure_matrix(Kind.GRID, (m, n))
    source = kappa if C is None else entries_of(C)
    rho = 1.0 if C is None else float(np.trace(source) / np.trace(kappa))
    pairs = dense_eigen(source)
    owners = assign_to_groups(np.array([p.value for p in pairs]) / rho, spectrum)
    out = []
    index = 1
    for g, members in zip(spectrum.groups, owners):
        if g.multiplicity == 1:
            gm, an = g.pairs[0]
            vec = np.kron(chain_eigenvector(m, gm), chain_eigenvector(n, an))
            out.append(_profile(arr, index, vec, g.a, "closed-form"))
            index += 1
        else:
            prov = "dense-kappa" if C is None else "oracle-resolved"
            for k in members:
                out.append(_profile(arr, index, pairs[k].vector, g.a, prov, None if C is None else rho))
                index += 1
    return out


def mode_profiles(arr: Arrangement, C: Optional[CapacitanceMatrix] = None,
                  mixing: str = "resolve") -> list[ModeProfile]:
    """All N mode profiles in ascending order of their spectral value.

    For rings ``mixing="resolve"`` projects the eigenvectors of ``C`` onto the
    closed-form pair of each double group and needs ``C``; ``mixing="basis"``
    returns the pair itself.
    """
    if mixing not in ("resolve", "basis"):
        raise ValueError(f"unknown mixing mode {mixing!r}")
    if arr.kind is Kind.CHAIN:
        return _chain_profiles(arr)
    if arr.kind is Kind.RING:
        return _ring_profiles(arr, C, mixing)
    return _grid_profiles(arr, C)


def mode_matrix(profiles) -> np.ndarray:
    """Columns are the surface-value vectors."""
    return np.stack([p.surface_values for p in profiles], axis=1)


def modes_csv(profiles) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["resonator"] + [f"u{p.index}" for p in profiles])
    V = mode_matrix(profiles)
    for l, row in enumerate(V):
        w.writerow([l + 1] + [repr(float(x)) for x in row])
    return buf.getvalue()
