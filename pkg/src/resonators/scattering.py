"""Leading-order modal scattering by a resonator arrangement.

The coefficients ``a`` of the incident field on the resonant modes solve

    V diag(omega_i^2 - omega^2) a = -(3 delta v_b^2 / (4 pi R^3)) f,

with ``V`` the matrix of mode vectors and ``f_l`` the integral over the
``l``-th sphere of the Laplace density that reproduces the incident field.
The field is ``u_in - S^k[S^-1 u_in] + sum_i a_i u^i`` with
``u^i = sum_l alpha^i_l v_l`` and ``v_l`` the harmonic potential equal to
one on sphere ``l`` and zero on the others.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg

from .bem import BEMContext
from .errors import (DimensionMismatch, InvalidDims, NearResonance, PointInsideResonator,
                     SingularModeMatrix)
from .frequencies import PhysicalParams, ResonantFrequency
from .modes import ModeProfile, mode_matrix

DROPPED_TERMS = "O(delta^(2-beta) + delta^(1-beta) omega^2 + omega^3)"
RESONANCE_FLOOR = 1e-12
INSIDE_RTOL = 1e-9


@dataclass(frozen=True)
class IncidentWave:
    amplitude: complex
    direction: tuple[float, float, float]
    omega: float
    v: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if d.shape != (3,) or abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise InvalidDims(f"direction must be a unit 3-vector, got {self.direction}")
        if not self.omega >= 0:
            raise InvalidDims(f"omega must be nonnegative, got {self.omega}")

    @property
    def k(self) -> float:
        return self.omega / self.v

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return complex(self.amplitude) * np.exp(1j * self.k * (pts @ np.asarray(self.direction, dtype=float)))


@dataclass
class ScatteringSolution:
    coefficients: np.ndarray
    residual: float
    omega: float
    modes: np.ndarray = field(repr=False)
    field_evaluator: Optional[Callable] = field(default=None, repr=False)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "coefficients": [{"re": float(c.real), "im": float(c.imag)} for c in self.coefficients],
            "residual": self.residual,
            "omega": self.omega,
            "dropped_terms": DROPPED_TERMS,
        }


def incident_projection(ctx: BEMContext, w: IncidentWave) -> np.ndarray:
    """Per-sphere integrals of the Laplace density whose potential equals ``u_in`` on the boundary."""
    q = ctx.solve(w(ctx.panels.points))
    return ctx.per_resonator(q)


def _omegas(freqs: Sequence[ResonantFrequency], n: int) -> np.ndarray:
    out = []
    for f in sorted(freqs, key=lambda f: f.index):
        if f.re is None:
            raise DimensionMismatch(f"frequency {f.index} has no numeric value (average capacity unavailable)")
        out.extend([f.re] * f.multiplicity)
    if len(out) != n:
        raise DimensionMismatch(f"frequencies cover {len(out)} modes, expected {n}")
    return np.array(out)


def modal_system(freqs, modes, p: PhysicalParams, omega: float):
    """Matrix ``V diag(omega_i^2 - omega^2)`` and the prefactor of the right side."""
    V = mode_matrix(modes)
    om = _omegas(freqs, V.shape[1])
    d = om**2 - omega**2
    return V * d[None, :], -3.0 * p.delta * p.v_b**2 / (4.0 * math.pi * p.R**3), om, d


def solve_coefficients(freqs: Sequence[ResonantFrequency], modes: Sequence[ModeProfile], rhs,
                       p: PhysicalParams, omega: float) -> ScatteringSolution:
    """Modal coefficients at driving frequency ``omega``.

    A driving frequency within ``1e-12 omega_i^2`` of a resonance emits
    :class:`NearResonance` and still returns the amplified solution.
    """
    f = np.asarray(rhs, dtype=complex)
    V = mode_matrix(modes)
    if f.shape != (V.shape[0],):
        raise DimensionMismatch(f"rhs has length {f.size}, expected {V.shape[0]}")
    A, pref, om, d = modal_system(freqs, modes, p, omega)
    cond_v = np.linalg.cond(V)
    if not np.isfinite(cond_v) or cond_v > 1e12:
        raise SingularModeMatrix(f"mode matrix is singular (condition {cond_v:.3g})")
    near = np.abs(d) < RESONANCE_FLOOR * np.maximum(om**2, np.finfo(float).tiny)
    b = pref * f
    if np.any(near):
        warnings.warn(f"omega={omega} is within the conditioning floor of a resonance; "
                      f"condition number {np.linalg.cond(A):.3g}", NearResonance, stacklevel=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = linalg.solve(V, b) / d
    else:
        a = linalg.solve(A, b)
    scale = max(np.linalg.norm(b), np.finfo(float).tiny)
    residual = float(np.linalg.norm(A @ a - b) / scale) if np.all(np.isfinite(a)) else math.inf
    return ScatteringSolution(a, residual, float(omega), V,
                              metadata={"dropped_terms": DROPPED_TERMS,
                                        "basis": "columns normalized to max |u| = 1; a_i are basis-dependent"})


def field_at(ctx: BEMContext, sol: ScatteringSolution, w: IncidentWave, points) -> np.ndarray:
    """Leading-order total field at exterior or boundary points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    arr = ctx.arrangement
    dist = np.linalg.norm(pts[:, None, :] - arr.centers[None, :, :], axis=2)
    if np.any(dist < arr.radius * (1.0 - INSIDE_RTOL)):
        raise PointInsideResonator("field evaluation point lies inside a resonator")
    u_in = w(pts)
    q_in = ctx.solve(w(ctx.panels.points))
    scattered = ctx.evaluate(pts, q_in, k=w.k)
    chi = ctx.indicator()
    q_modes = ctx.solve(chi)
    v = ctx.evaluate(pts, q_modes)
    return u_in - scattered + v @ (sol.modes @ sol.coefficients)


def scatter(ctx: BEMContext, freqs, modes, w: IncidentWave, p: PhysicalParams) -> ScatteringSolution:
    """Projection, coefficient solve and a bound field evaluator in one call."""
    rhs = incident_projection(ctx, w)
    sol = solve_coefficients(freqs, modes, rhs, p, w.omega)
    sol.field_evaluator = lambda pts: field_at(ctx, sol, w, pts)
    return sol
