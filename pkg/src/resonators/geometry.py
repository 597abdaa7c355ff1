"""Resonator arrangements of equal spheres on a chain, ring or grid lattice.

Labels are 1-based in the physics but stored 0-based here; every index pair
in a :class:`TangencyGraph` refers to positions in ``Arrangement.resonators``.
Grid resonators are ordered row-major, resonator ``(gamma - 1) * n + alpha``
sitting in row ``gamma`` and column ``alpha``.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .errors import InvalidCutoff, InvalidDims, InvalidGap

DISTANCE_RTOL = 1e-9


class Kind(str, enum.Enum):
    CHAIN = "chain"
    RING = "ring"
    GRID = "grid"

    @classmethod
    def parse(cls, value: "Kind | str") -> "Kind":
        if isinstance(value, Kind):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidDims(f"unknown arrangement kind {value!r}") from None


@dataclass(frozen=True)
class Resonator:
    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidDims(f"radius must be positive, got {self.radius}")
        if not all(math.isfinite(c) for c in self.center):
            raise InvalidDims(f"non-finite center {self.center}")

    @property
    def volume(self) -> float:
        return 4.0 * math.pi * self.radius**3 / 3.0


@dataclass(frozen=True)
class TangencyGraph:
    n_vertices: int
    edges: frozenset[tuple[int, int]]

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def laplacian(self) -> np.ndarray:
        """Combinatorial graph Laplacian (degree on the diagonal, -1 per edge)."""
        lap = np.zeros((self.n_vertices, self.n_vertices), dtype=int)
        for i, j in self.edges:
            lap[i, j] = lap[j, i] = -1
            lap[i, i] += 1
            lap[j, j] += 1
        return lap


@dataclass(frozen=True)
class GapRegion:
    pair: tuple[int, int]
    center: tuple[float, float, float]
    r: float


@dataclass(frozen=True)
class Arrangement:
    kind: Kind
    resonators: tuple[Resonator, ...]
    gap: float
    grid_dims: Optional[tuple[int, int]] = None
    _graph: Optional[TangencyGraph] = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.resonators)

    @property
    def radius(self) -> float:
        return self.resonators[0].radius

    @property
    def eps(self) -> float:
        return self.gap

    @property
    def centers(self) -> np.ndarray:
        return np.array([r.center for r in self.resonators], dtype=float)

    @property
    def volumes(self) -> list[float]:
        return [r.volume for r in self.resonators]

    @property
    def dims(self) -> tuple[int, ...]:
        return self.grid_dims if self.grid_dims is not None else (self.n,)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind.value}
        if self.kind is Kind.GRID:
            out["dims"] = list(self.grid_dims)
        else:
            out["N"] = self.n
        out["R"] = self.radius
        out["eps"] = self.gap
        out["centers"] = self.centers.tolist()
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict[str, Any], cross_check: bool = False) -> "Arrangement":
        """Rebuild from the JSON object form; any ``centers`` entry is ignored and recomputed."""
        kind = Kind.parse(data["kind"])
        dims = data.get("dims", data.get("N"))
        if dims is None:
            raise InvalidDims("arrangement needs 'N' or 'dims'")
        return build_arrangement(kind, dims, float(data["R"]), float(data["eps"]),
                                 cross_check=cross_check)

    @classmethod
    def from_json(cls, text: str) -> "Arrangement":
        return cls.from_dict(json.loads(text))


def _chain_centers(n: int, pitch: float) -> list[tuple[float, float, float]]:
    return [(l * pitch, 0.0, 0.0) for l in range(n)]


def _ring_centers(n: int, pitch: float) -> list[tuple[float, float, float]]:
    circumradius = pitch / (2.0 * math.sin(math.pi / n))
    return [
        (circumradius * math.cos(2 * math.pi * l / n), circumradius * math.sin(2 * math.pi * l / n), 0.0)
        for l in range(n)
    ]


def _grid_centers(m: int, n: int, pitch: float) -> list[tuple[float, float, float]]:
    return [(alpha * pitch, gamma * pitch, 0.0) for gamma in range(m) for alpha in range(n)]


def build_arrangement(kind, dims, R: float, eps: float, cross_check: bool = False) -> Arrangement:
    """Place N equal spheres of radius ``R`` with adjacent gap ``eps``.

    ``dims`` is ``N`` for chains and rings and ``(m, n)`` with ``2 <= m <= n``
    for grids.  ``cross_check=True`` admits the one- and two-sphere chains used
    to compare against classical two-body results.
    """
    kind = Kind.parse(kind)
    if not R > 0:
        raise InvalidDims(f"radius must be positive, got {R}")
    if not (0 < eps < R):
        raise InvalidGap(f"gap must satisfy 0 < eps < R, got eps={eps}, R={R}")
    pitch = 2.0 * R + eps

    grid_dims = None
    if kind is Kind.GRID:
        try:
            m, n = (int(d) for d in dims)
        except TypeError:
            raise InvalidDims("grid dims must be a pair (m, n)") from None
        if m > n:
            m, n = n, m
        if m < 2:
            raise InvalidDims(f"grid needs 2 <= m <= n, got {(m, n)}")
        centers = _grid_centers(m, n, pitch)
        grid_dims = (m, n)
    else:
        if not isinstance(dims, (int, np.integer)):
            (dims,) = dims
        count = int(dims)
        minimum = 1 if (cross_check and kind is Kind.CHAIN) else 3
        if count < minimum:
            raise InvalidDims(f"{kind.value} needs N > 2 (got N={count})")
        centers = _chain_centers(count, pitch) if kind is Kind.CHAIN else _ring_centers(count, pitch)

    resonators = tuple(Resonator(c, R) for c in centers)
    return Arrangement(kind, resonators, eps, grid_dims)


def tangency_graph(arr: Arrangement) -> TangencyGraph:
    """Edges are exactly the pairs whose center distance equals ``2R + eps``."""
    target = 2.0 * arr.radius + arr.gap
    centers = arr.centers
    edges = set()
    for i, j in itertools.combinations(range(arr.n), 2):
        if abs(np.linalg.norm(centers[i] - centers[j]) - target) <= DISTANCE_RTOL * target:
            edges.add((i, j))
    return TangencyGraph(arr.n, frozenset(edges))


def gap_regions(arr: Arrangement, r: Optional[float] = None) -> list[GapRegion]:
    """One narrow region per tangent pair, centered at the midpoint of the two centers.

    The cutoff defaults to ``R/5`` and must stay below ``R/4``.
    """
    R = arr.radius
    if r is None:
        r = R / 5.0
    if not (0 < r < R / 4.0):
        raise InvalidCutoff(f"cutoff must satisfy 0 < r < R/4, got r={r}")
    centers = arr.centers
    out = []
    for i, j in tangency_graph(arr).sorted_edges():
        mid = 0.5 * (centers[i] + centers[j])
        out.append(GapRegion((i, j), tuple(float(x) for x in mid), r))
    return out


def neighbour_directions(arr: Arrangement) -> list[list[np.ndarray]]:
    """Unit vectors from each center toward each of its tangent neighbours."""
    centers = arr.centers
    dirs: list[list[np.ndarray]] = [[] for _ in range(arr.n)]
    for i, j in tangency_graph(arr).sorted_edges():
        d = centers[j] - centers[i]
        d /= np.linalg.norm(d)
        dirs[i].append(d)
        dirs[j].append(-d)
    return dirs


def standard_graph_edges(kind, dims: Sequence[int] | int) -> frozenset[tuple[int, int]]:
    """Path, cycle or 4-neighbour grid edge set, built combinatorially."""
    kind = Kind.parse(kind)
    if kind is Kind.CHAIN:
        n = int(dims if isinstance(dims, (int, np.integer)) else dims[0])
        return frozenset((l, l + 1) for l in range(n - 1))
    if kind is Kind.RING:
        n = int(dims if isinstance(dims, (int, np.integer)) else dims[0])
        return frozenset(tuple(sorted((l, (l + 1) % n))) for l in range(n))
    m, n = dims
    edges = set()
    for g in range(m):
        for a in range(n):
            i = g * n + a
            if a + 1 < n:
                edges.add((i, i + 1))
            if g + 1 < m:
                edges.add((i, i + n))
    return frozenset(edges)
