"""Leading-order subwavelength resonant frequencies.

With the gap schedule ``eps = exp(-Lambda / delta^(1 - beta))`` one has
``delta |log eps| = Lambda delta^beta``, and the frequencies above the
Minnaert-type one are ``sqrt(a) * eta`` with
``eta = sqrt(3 v_b^2 delta |log eps| / (4 R^3))``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence, Union

import numpy as np

from .capacitance import entries_of, CapacitanceMatrix, average_capacity
from .errors import DimensionMismatch, InvalidDims, InvalidGap
from .geometry import Arrangement, Kind
from .spectra import ClosedFormSpectrum, EigenPair, spectrum_for

ERROR_ORDER = "O(sqrt(delta/|log eps|)+delta)"
OMEGA1_ORDER = "(1+o(1))"
BEM_M_EPS = 0.1


@dataclass(frozen=True)
class PhysicalParams:
    """Material and gap parameters.

    Supply either the schedule ``(Lambda, beta)`` or an explicit gap
    ``eps`` (same length unit as ``R``); the logarithm is taken of ``eps / R``.
    """
    delta: float
    v: float = 1.0
    v_b: float = 1.0
    R: float = 1.0
    Lambda: Optional[float] = None
    beta: Optional[float] = None
    eps: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.delta < 1):
            raise InvalidDims(f"delta must lie in (0, 1), got {self.delta}")
        for name in ("v", "v_b", "R"):
            if not getattr(self, name) > 0:
                raise InvalidDims(f"{name} must be positive")
        schedule = self.Lambda is not None or self.beta is not None
        if schedule == (self.eps is not None):
            raise InvalidGap("give exactly one of (Lambda, beta) or eps")
        if schedule:
            if self.Lambda is None or self.beta is None:
                raise InvalidGap("the gap schedule needs both Lambda and beta")
            if not self.Lambda > 0:
                raise InvalidGap(f"Lambda must be positive, got {self.Lambda}")
            if not (0 < self.beta < 1):
                raise InvalidGap(f"beta must lie in the open interval (0, 1), got {self.beta}")
        elif not (0 < self.eps < self.R):
            raise InvalidGap(f"eps must satisfy 0 < eps < R, got {self.eps}")

    @property
    def has_schedule(self) -> bool:
        return self.Lambda is not None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class GapSchedule:
    eps: Optional[float]
    log_eps: float
    delta_log: float
    symbolic: bool = False

    @property
    def abs_log(self) -> float:
        return -self.log_eps


def epsilon_of_delta(p: PhysicalParams) -> GapSchedule:
    """Gap and ``delta |log eps|``.

    On the schedule ``delta |log eps| = Lambda delta^beta`` is evaluated
    directly.  When ``eps`` underflows it is returned as ``None`` with
    ``symbolic=True`` and only ``log_eps`` is meaningful.
    """
    if p.has_schedule:
        log_eps = -p.Lambda / p.delta ** (1.0 - p.beta)
        eps = math.exp(log_eps)
        symbolic = bool(eps < np.finfo(float).tiny)
        return GapSchedule(None if symbolic else eps * p.R, log_eps, p.Lambda * p.delta**p.beta, symbolic)
    log_eps = math.log(p.eps / p.R)
    return GapSchedule(p.eps, log_eps, p.delta * abs(log_eps))


@dataclass(frozen=True)
class ResonantFrequency:
    index: int
    re: Optional[float]
    multiplicity: int
    a_value: Optional[float]
    error_order: str
    im: Optional[float] = None
    provenance: str = "closed-form"
    symbolic: Optional[str] = None

    def to_dict(self) -> dict:
        out = {"i": self.index, "re": self.re, "multiplicity": self.multiplicity,
               "a": self.a_value, "error_order": self.error_order, "provenance": self.provenance}
        if self.im is not None:
            out["im"] = self.im
        if self.symbolic is not None:
            out["symbolic"] = self.symbolic
        return out


def eta(p: PhysicalParams) -> float:
    """Common frequency unit ``sqrt(3 v_b^2 delta |log eps| / (4 R^3))``."""
    return math.sqrt(3.0 * p.v_b**2 * epsilon_of_delta(p).delta_log / (4.0 * p.R**3))


def omega_from_a(a: float, p: PhysicalParams) -> float:
    return math.sqrt(3.0 * p.v_b**2 * a * epsilon_of_delta(p).delta_log / (4.0 * p.R**3))


def omega_one(M: float, p: PhysicalParams) -> float:
    return math.sqrt(3.0 * p.v_b**2 * M * p.delta / (4.0 * math.pi * p.R**3))


def _kind_dims(arr) -> tuple[Kind, tuple[int, ...], Optional[float]]:
    if isinstance(arr, Arrangement):
        return arr.kind, arr.dims, arr.radius
    kind, dims = arr
    dims = (int(dims),) if isinstance(dims, (int, np.integer)) else tuple(int(d) for d in dims)
    return Kind.parse(kind), dims, None


def _resolve_M(M_source, arr, p: PhysicalParams, panels: int) -> tuple[Optional[float], str]:
    if M_source is None or (isinstance(M_source, str) and M_source.lower() == "unavailable"):
        return None, "unavailable"
    if isinstance(M_source, CapacitanceMatrix):
        return average_capacity(M_source), M_source.provenance.value
    if isinstance(M_source, str) and M_source.lower() == "bem":
        from .bem import bem_capacitance
        from .geometry import build_arrangement
        kind, dims, _ = _kind_dims(arr)
        bem_arr = build_arrangement(kind, dims, p.R, BEM_M_EPS * p.R, cross_check=True)
        return average_capacity(bem_capacitance(bem_arr, panels)), f"BEM(eps={BEM_M_EPS}R)"
    return float(M_source), "user"


def resonant_frequencies(arr, p: PhysicalParams, M_source: Union[None, str, float, CapacitanceMatrix] = None,
                         panels: int = 1000) -> list[ResonantFrequency]:
    """One entry per distinct leading-order frequency, with multiplicity.

    ``arr`` is an :class:`Arrangement` or a pair ``(kind, dims)``.
    ``M_source`` is ``None``/``"unavailable"``, ``"bem"`` (average capacity
    of a BEM run at ``eps = 0.1 R``), a number, or a capacitance matrix.
    """
    kind, dims, radius = _kind_dims(arr)
    if radius is not None and abs(radius - p.R) > 1e-12 * p.R:
        raise DimensionMismatch(f"arrangement radius {radius} differs from params R={p.R}")
    spectrum = spectrum_for(kind, dims)
    M, origin = _resolve_M(M_source, arr, p, panels)
    out = []
    first = spectrum.groups[0]
    if M is None:
        out.append(ResonantFrequency(1, None, 1, 0.0, OMEGA1_ORDER, provenance="unavailable",
                                     symbolic="sqrt(3 v_b^2 M delta / (4 pi R^3))"))
    else:
        out.append(ResonantFrequency(1, omega_one(M, p), first.multiplicity, 0.0, OMEGA1_ORDER,
                                     provenance=f"average-capacity:{origin}"))
    index = 2
    for g in spectrum.groups[1:]:
        out.append(ResonantFrequency(index, omega_from_a(g.a, p), g.multiplicity, g.a, ERROR_ORDER))
        index += g.multiplicity
    return sorted(out, key=lambda f: (f.re is not None, f.re or 0.0))


def imaginary_parts(C, pairs: Sequence[EigenPair], p: PhysicalParams, volumes: Sequence[float]) -> list[float]:
    """``-delta v_b^2 / (8 pi v) (alpha^T C J C alpha) / ||alpha||_D^2`` per eigenpair.

    ``J`` is the all-ones matrix, so the quadratic form is ``(1^T C alpha)^2``
    and the result is never positive.
    """
    entries = entries_of(C)
    vol = np.asarray(volumes, dtype=float)
    n = entries.shape[0]
    if vol.shape != (n,):
        raise DimensionMismatch(f"need {n} volumes, got {vol.size}")
    out = []
    for pair in pairs:
        alpha = np.asarray(pair.vector, dtype=float)
        if alpha.shape != (n,):
            raise DimensionMismatch(f"eigenvector length {alpha.size} differs from matrix size {n}")
        s = float(np.sum(entries @ alpha))
        norm = float(np.sum(vol * alpha**2))
        out.append(-p.delta * p.v_b**2 / (8.0 * math.pi * p.v) * s * s / norm)
    return out


@dataclass(frozen=True)
class SpanSummary:
    kind: str
    dims: tuple[int, ...]
    eta: float
    span: tuple[float, float]
    span_symbolic: str
    upper_closed: bool
    count: int
    count_formula: int

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dims": list(self.dims), "eta": self.eta, "span": list(self.span),
                "span_symbolic": self.span_symbolic, "upper_closed": self.upper_closed,
                "count": self.count, "count_formula": self.count_formula}


SPAN_SYMBOLS = {Kind.CHAIN: ("(0, 2eta)", 2.0, False),
                Kind.RING: ("(0, 2eta]", 2.0, True),
                Kind.GRID: ("(0, 2sqrt(2)eta)", 2.0 * math.sqrt(2.0), False)}


def count_formula(kind, dims) -> int:
    """Distinct leading-order frequency count: ``N`` (chain), ``(N+1)/2`` or ``(N+2)/2`` (ring), ``s(m, n)`` (grid)."""
    kind = Kind.parse(kind)
    if kind is Kind.CHAIN:
        return int(dims[0])
    if kind is Kind.RING:
        N = int(dims[0])
        return (N + 1) // 2 if N % 2 else (N + 2) // 2
    return len(spectrum_for(kind, dims).groups)


def span_and_count(arr, p: PhysicalParams) -> SpanSummary:
    kind, dims, _ = _kind_dims(arr)
    e = eta(p)
    symbol, factor, closed = SPAN_SYMBOLS[kind]
    count = len(spectrum_for(kind, dims).groups)
    return SpanSummary(kind.value, dims, e, (0.0, factor * e), symbol, closed, count, count_formula(kind, dims))


def frequencies_payload(p: PhysicalParams, freqs: Sequence[ResonantFrequency]) -> dict:
    sched = epsilon_of_delta(p)
    params = p.to_dict()
    params["log_eps"] = sched.log_eps
    params["eps_symbolic"] = bool(sched.symbolic)
    return {"params": params, "eta": eta(p), "frequencies": [f.to_dict() for f in freqs]}


def frequencies_csv(freqs: Sequence[ResonantFrequency]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "re", "im", "multiplicity", "a", "error_order"])
    for f in freqs:
        w.writerow([f.index, "" if f.re is None else repr(f.re), "" if f.im is None else repr(f.im),
                    f.multiplicity, f.a_value, f.error_order])
    return buf.getvalue()
