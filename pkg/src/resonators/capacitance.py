"""Leading-order capacitance structure and its numeric realization.

Between nearly touching spheres the capacitance coefficients diverge like
``rho(eps) = pi |log(eps / length_scale)|``.  The model keeps the divergent
part as an integer matrix ``kappa`` (the tangency-graph Laplacian) and the
bounded remainder as a real matrix ``mu``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import AsymmetricOffsets, DimensionMismatch, GapTooLarge, NotSymmetric
from .geometry import Arrangement, tangency_graph

SYM_TOL = 1e-12


class Provenance(str, Enum):
    MODEL = "Model"
    BEM = "BEM"
    USER = "UserSupplied"


@dataclass(frozen=True)
class CapacitanceModel:
    kappa: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    length_scale: float = 1.0

    @property
    def n(self) -> int:
        return self.kappa.shape[0]


@dataclass(frozen=True)
class PropertyReport:
    symmetric: bool
    positive_definite: bool
    sign_pattern: bool
    diagonally_dominant: bool
    asymmetry: float
    min_eigenvalue: float

    @property
    def ok(self) -> bool:
        return self.symmetric and self.positive_definite and self.sign_pattern and self.diagonally_dominant


@dataclass(frozen=True)
class CapacitanceMatrix:
    entries: np.ndarray = field(repr=False)
    provenance: Provenance = Provenance.MODEL
    asymmetry: float = 0.0
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        E = np.asarray(self.entries, dtype=float)
        if E.ndim != 2 or E.shape[0] != E.shape[1]:
            raise DimensionMismatch(f"capacitance matrix must be square, got {E.shape}")
        E = E.copy()
        E.setflags(write=False)
        object.__setattr__(self, "entries", E)
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def check(self, sym_tol: float = 1e-6) -> PropertyReport:
        """Evaluate the four structural properties of a physical capacitance matrix."""
        C = self.entries
        scale = max(np.max(np.abs(C)), np.finfo(float).tiny)
        asym = float(np.max(np.abs(C - C.T)) / scale)
        w = np.linalg.eigvalsh(0.5 * (C + C.T))
        off = C - np.diag(np.diag(C))
        mask = ~np.eye(self.n, dtype=bool)
        signs = bool(np.all(np.diag(C) > 0) and np.all(C[mask] < 0))
        dominant = bool(np.all(np.diag(C) > np.sum(np.abs(off), axis=1)))
        return PropertyReport(asym <= sym_tol, bool(w[0] > 0), signs, dominant, max(asym, self.asymmetry), float(w[0]))

    def to_dict(self) -> dict:
        out = {"n": self.n, "provenance": self.provenance.value, "entries": self.entries.ravel().tolist()}
        if self.provenance is Provenance.BEM:
            out["asymmetry"] = self.asymmetry
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "CapacitanceMatrix":
        n = int(data["n"])
        entries = np.asarray(data["entries"], dtype=float)
        if entries.size != n * n:
            raise DimensionMismatch(f"expected {n * n} entries, got {entries.size}")
        return cls(entries.reshape(n, n), Provenance(data.get("provenance", "UserSupplied")),
                   float(data.get("asymmetry", 0.0)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["row"] + [f"c{j + 1}" for j in range(self.n)])
        for i, row in enumerate(self.entries):
            writer.writerow([i + 1] + [repr(float(x)) for x in row])
        return buf.getvalue()


@dataclass(frozen=True)
class GeneralizedCapacitanceMatrix:
    entries: np.ndarray = field(repr=False)
    delta: float
    v_b: float
    volumes: tuple[float, ...]


def _check_symmetric(M: np.ndarray, exc, what: str) -> None:
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
    if np.max(np.abs(M - M.T), initial=0.0) > SYM_TOL * scale:
        raise exc(f"{what} must be symmetric")


def leading_model(arr: Arrangement, offsets: Optional[np.ndarray] = None,
                  length_scale: Optional[float] = None) -> CapacitanceModel:
    """``kappa`` from the tangency graph and ``mu`` from ``offsets`` (zero by default)."""
    kappa = tangency_graph(arr).laplacian()
    n = arr.n
    if offsets is None:
        mu = np.zeros((n, n))
    else:
        mu = np.array(offsets, dtype=float)
        if mu.shape != (n, n):
            raise DimensionMismatch(f"offsets must be {n}x{n}, got {mu.shape}")
        _check_symmetric(mu, AsymmetricOffsets, "offsets")
    kappa.setflags(write=False)
    mu.setflags(write=False)
    return CapacitanceModel(kappa, mu, float(length_scale if length_scale is not None else arr.radius))


def rho_of(eps: float, length_scale: float = 1.0) -> float:
    """Gap factor ``pi |log(eps / length_scale)|``; requires ``0 < eps < length_scale``."""
    x = eps / length_scale
    if not x > 0:
        raise GapTooLarge(f"gap must be positive, got {eps}")
    if x >= 1:
        raise GapTooLarge(f"eps/length_scale = {x} >= 1 flips the sign of log")
    return math.pi * abs(math.log(x))


def realize(model: CapacitanceModel, eps: float) -> CapacitanceMatrix:
    """``kappa * rho(eps) + mu`` with ``eps`` in the same length unit as ``model.length_scale``."""
    rho = rho_of(eps, model.length_scale)
    return CapacitanceMatrix(model.kappa * rho + model.mu, Provenance.MODEL, 0.0, {"rho": rho, "eps": eps})


def realize_rho(model: CapacitanceModel, rho: float) -> CapacitanceMatrix:
    """Realization at a prescribed gap factor, bypassing the logarithm (useful when eps underflows)."""
    if not rho > 0:
        raise GapTooLarge(f"rho must be positive, got {rho}")
    return CapacitanceMatrix(model.kappa * rho + model.mu, Provenance.MODEL, 0.0, {"rho": rho})


def generalized(C: CapacitanceMatrix, delta: float, v_b: float,
                volumes: Sequence[float]) -> GeneralizedCapacitanceMatrix:
    """Row scaling ``delta v_b^2 / |D_i|`` of the capacitance matrix."""
    vol = np.asarray(volumes, dtype=float)
    if vol.shape != (C.n,):
        raise DimensionMismatch(f"need {C.n} volumes, got {vol.size}")
    if not (delta > 0 and v_b > 0 and np.all(vol > 0)):
        raise DimensionMismatch("delta, v_b and volumes must be positive")
    entries = (delta * v_b**2 / vol)[:, None] * C.entries
    return GeneralizedCapacitanceMatrix(entries, float(delta), float(v_b), tuple(float(v) for v in vol))


def average_capacity(C: CapacitanceMatrix) -> float:
    """``(1/N) sum_ij C_ij``."""
    return float(np.sum(C.entries) / C.n)


def estimate_offsets(C_bem: CapacitanceMatrix, arr: Arrangement,
                     length_scale: Optional[float] = None) -> np.ndarray:
    """``mu = C_bem - kappa rho(eps)``, symmetrized."""
    model = leading_model(arr, length_scale=length_scale)
    rho = rho_of(arr.gap, model.length_scale)
    mu = C_bem.entries - model.kappa * rho
    return 0.5 * (mu + mu.T)


def model_from_bem(C_bem: CapacitanceMatrix, arr: Arrangement,
                   length_scale: Optional[float] = None) -> CapacitanceModel:
    return leading_model(arr, estimate_offsets(C_bem, arr, length_scale), length_scale)


def as_matrix(C) -> CapacitanceMatrix:
    if isinstance(C, CapacitanceMatrix):
        return C
    M = np.asarray(C, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {M.shape}")
    if np.max(np.abs(M - M.T)) > 1e-10 * max(1.0, np.max(np.abs(M))):
        raise NotSymmetric("user-supplied capacitance matrix is not symmetric")
    return CapacitanceMatrix(M, Provenance.USER)


def entries_of(C) -> np.ndarray:
    """Plain array view of a capacitance matrix or array-like."""
    return C.entries if isinstance(C, CapacitanceMatrix) else np.asarray(C, dtype=float)
