"""Independent oracles and measurement campaigns.

``two_sphere_series`` is the classical image-charge solution for two equal
spheres; ``bispherical_series`` is the same quantity summed in closed form
and serves as a cross-check of the recursion.  ``asymptotic_convergence``
measures how fast perturbed spectra approach the closed forms and
``reference_tables`` regenerates the distinct-frequency tables.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .capacitance import CapacitanceModel, realize_rho
from .errors import CountMismatch, SpheresOverlap, TableMismatch
from .frequencies import SPAN_SYMBOLS, count_formula
from .geometry import Kind
from .spectra import distinct_count, localization_check, spectrum_for, structure_matrix

DEFAULT_SEED = 0xC0FFEE
SERIES_TOL = 1e-12
MAX_TERMS = 10_000_000


def seed_from_env(default: int = DEFAULT_SEED) -> int:
    value = os.environ.get("RESONATOR_SEED")
    return int(value, 0) if value else default


def random_offsets(n: int, seed: Optional[int] = None, scale: float = 1.0) -> np.ndarray:
    """Symmetric matrix with entries uniform in ``[-scale, scale]``."""
    rng = np.random.default_rng(seed_from_env() if seed is None else seed)
    U = rng.uniform(-scale, scale, size=(n, n))
    return np.triu(U) + np.triu(U, 1).T


def two_sphere_series(R: float, d: float, tol: float = 1e-10) -> np.ndarray:
    """Kelvin image-charge capacitance matrix of two spheres of radius ``R`` at center distance ``d``.

    Sphere 1 is held at unit potential and sphere 2 grounded; a charge ``q`` at
    distance ``s`` from a sphere center has its image ``-q R / s`` at
    ``R^2 / s``.  Charges accumulated inside each sphere give ``C_11`` and
    ``C_21``.  With ratio ``r`` between consecutive images the truncation
    error is below ``|q| r / (1 - r)``, and iteration stops once that bound is
    under ``tol``.
    """
    if not d > 2 * R:
        raise SpheresOverlap(f"center distance {d} must exceed 2R = {2 * R}")
    q = 4.0 * math.pi * R
    s = 0.0  # offset of the current charge from its own sphere's center, toward the other sphere
    totals = [q, 0.0]
    side = 0
    prev = q
    for _ in range(MAX_TERMS):
        dist = d - s
        q = -q * R / dist
        s = R * R / dist
        side = 1 - side
        totals[side] += q
        r = abs(q / prev)
        prev = q
        if r < 1 and abs(q) * r / (1.0 - r) < tol:
            break
    C11, C12 = totals
    return np.array([[C11, C12], [C12, C11]])


def bispherical_series(R: float, d: float, tol: float = SERIES_TOL) -> np.ndarray:
    """Closed-form sums ``C_11 = 4 pi R sinh(m) sum_{n>=0} 1/sinh((2n+1) m)`` and
    ``C_12 = -4 pi R sinh(m) sum_{n>=1} 1/sinh(2 n m)`` with ``m = arccosh(d / 2R)``."""
    if not d > 2 * R:
        raise SpheresOverlap(f"center distance {d} must exceed 2R = {2 * R}")
    m = math.acosh(d / (2.0 * R))
    ratio = math.exp(-2.0 * m)

    def tail_sum(start, step):
        total, k = 0.0, start
        while True:
            t = 1.0 / math.sinh(k * m)
            total += t
            if t * ratio / (1.0 - ratio) < tol:
                return total
            k += step

    pref = 4.0 * math.pi * R * math.sinh(m)
    C11 = pref * tail_sum(1, 2)
    C12 = -pref * tail_sum(2, 2)
    return np.array([[C11, C12], [C12, C11]])


@dataclass
class ConvergenceReport:
    kind: str
    dims: tuple[int, ...]
    grid: list[float]
    residuals: list[float]
    exponent: Optional[float]
    constant: Optional[float]
    counts_ok: bool
    passed: bool
    seed: Optional[int] = None
    group_residuals: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dims": list(self.dims), "grid": self.grid,
                "residuals": [r if math.isfinite(r) else None for r in self.residuals],
                "exponent": self.exponent, "constant": self.constant, "counts_ok": self.counts_ok,
                "passed": self.passed, "seed": self.seed}


def asymptotic_convergence(kind, dims, rho_grid: Sequence[float], seed: Optional[int] = None,
                           mu: Optional[np.ndarray] = None, threshold: float = -0.8) -> ConvergenceReport:
    """Residual ``max_i |lambda_i / rho - a_i|`` over ``rho_grid`` for ``kappa rho + mu``.

    ``mu`` defaults to a seeded random symmetric matrix bounded by 1.  The
    fitted exponent of ``residual ~ K rho^p`` must satisfy ``p <= threshold``;
    identically zero residuals pass with no exponent.
    """
    kind = Kind.parse(kind)
    dims = (int(dims),) if isinstance(dims, (int, np.integer)) else tuple(int(x) for x in dims)
    grid = [float(r) for r in rho_grid]
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("rho_grid needs at least two strictly ascending points")
    kappa = structure_matrix(kind, dims)
    n = kappa.shape[0]
    used_seed = None
    if mu is None:
        used_seed = seed_from_env() if seed is None else seed
        mu = random_offsets(n, used_seed)
    model = CapacitanceModel(kappa, np.asarray(mu, dtype=float))
    spectrum = spectrum_for(kind, dims)
    residuals, groups, counts_ok = [], [], True
    for rho in grid:
        try:
            res = localization_check(realize_rho(model, rho), spectrum, rho)
        except CountMismatch:
            counts_ok = False
            residuals.append(math.inf)
            groups.append([])
            continue
        residuals.append(max(g.max_residual for g in res))
        groups.append(res)
    if not counts_ok:
        return ConvergenceReport(kind.value, dims, grid, residuals, None, None, False, False, used_seed, groups)
    r = np.array(residuals)
    if np.all(r <= 1e-14 * np.max(spectrum.expanded())):
        return ConvergenceReport(kind.value, dims, grid, residuals, None, None, True, True, used_seed, groups)
    slope, intercept = np.polyfit(np.log(grid), np.log(np.maximum(r, np.finfo(float).tiny)), 1)
    return ConvergenceReport(kind.value, dims, grid, residuals, float(slope), float(math.exp(intercept)),
                             True, bool(slope <= threshold), used_seed, groups)


SPAN_TABLE = {
    "chain": {"span": "(0, 2eta)", "number": "N"},
    "ring": {"span": "(0, 2eta]", "number": "(N+1)/2 if N odd, (N+2)/2 if N even"},
    "grid": {"span": "(0, 2sqrt(2)eta)", "number": "s(m,n)"},
}

COUNT_TABLE = {
    "chain": {4: 4, 5: 5, 16: 16},
    "ring": {4: 3, 5: 3, 16: 9},
    "grid": {(2, 2): 3, (2, 8): 15, (4, 4): 9},
}


@dataclass
class TableReport:
    spans: list[dict]
    counts: list[dict]
    mismatches: list[str]

    @property
    def passed(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> dict:
        return {"spans": self.spans, "counts": self.counts, "mismatches": self.mismatches,
                "passed": self.passed}


def _span_rows(sizes: Sequence[int], mismatches: list[str]) -> list[dict]:
    rows = []
    for kind in (Kind.CHAIN, Kind.RING, Kind.GRID):
        symbol, factor, closed = SPAN_SYMBOLS[kind]
        dims_list = ([(m, n) for m in range(2, 6) for n in range(m, 9)] if kind is Kind.GRID
                     else [(N,) for N in sizes])
        attained = False
        for dims in dims_list:
            spectrum = spectrum_for(kind, dims)
            top = math.sqrt(max(g.a for g in spectrum.groups))
            if top > factor + 1e-12 or (not closed and top >= factor):
                mismatches.append(f"spans {kind.value} {dims}: top frequency {top:.15g} eta outside {symbol}")
            attained |= abs(top - factor) <= 1e-12
            count = len(spectrum.groups)
            if count != count_formula(kind, dims):
                mismatches.append(f"spans {kind.value} {dims}: count {count} != formula")
        if closed and not attained:
            mismatches.append(f"spans {kind.value}: closed upper end never attained")
        if symbol != SPAN_TABLE[kind.value]["span"]:
            mismatches.append(f"spans {kind.value}: span {symbol} != {SPAN_TABLE[kind.value]['span']}")
        rows.append({"kind": kind.value, "span": symbol, "number": SPAN_TABLE[kind.value]["number"],
                     "upper_factor": factor, "upper_closed": closed})
    return rows


def reference_tables(raise_on_mismatch: bool = True, sizes: Sequence[int] = tuple(range(3, 33))) -> TableReport:
    """Regenerate both tables from the spectra and check them against the embedded values."""
    mismatches: list[str] = []
    t1 = _span_rows(sizes, mismatches)
    t2 = []
    for kind, row in COUNT_TABLE.items():
        for dims, expected in row.items():
            d = dims if isinstance(dims, tuple) else (dims,)
            got, _ = distinct_count(spectrum_for(kind, d))
            t2.append({"kind": kind, "dims": list(d), "N": int(np.prod(d)), "count": got, "expected": expected})
            if got != expected:
                mismatches.append(f"counts {kind} {d}: {got} != {expected}")
    report = TableReport(t1, t2, mismatches)
    if raise_on_mismatch and mismatches:
        raise TableMismatch("; ".join(mismatches))
    return report
