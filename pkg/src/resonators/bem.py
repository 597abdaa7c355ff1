"""Boundary-element oracle for the Laplace capacitance of sphere arrangements.

Each sphere carries a quasi-uniform Fibonacci point set, one piecewise-constant
panel per point.  Near the contact points an optional graded polar patch
replaces the Fibonacci points so that narrow gaps are resolved.

The unknowns are panel charges ``q_k = A_k psi_k``.  The assembled matrix is
the panel-averaged kernel ``G_ij = (1/A_j) int_{panel j} G0(x_i, y) dy`` with
``G0(x, y) = -1 / (4 pi |x - y|)``, so the single-layer matrix is
``S = G diag(A)``.  ``G`` is symmetrized and ``-G`` is factored by Cholesky.
"""

from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from .capacitance import CapacitanceMatrix, Provenance
from .errors import SingularSystem, ResolutionWarning
from .geometry import Arrangement, neighbour_directions

log = logging.getLogger(__name__)

NEAR_FACTOR = 3.0
CLOSE_FACTOR = 1.0
FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class MeshOptions:
    """Discretization controls.

    ``refine_gaps`` replaces the Fibonacci points in a cap of half-angle
    ``cap_angle`` around each contact point by rings that start at
    ``inner_fraction * eps / R`` and grow geometrically by ``growth``, with
    ring width capped at ``match_spacing`` times the Fibonacci panel spacing.
    Fibonacci points within ``boundary_margin`` spacings of a cap are dropped.
    """
    panels_per_sphere: int = 1000
    refine_gaps: bool = False
    cap_angle: float = 0.45
    inner_fraction: float = 0.4
    growth: float = 1.25
    match_spacing: float = 0.8
    boundary_margin: float = 0.35
    near_rule: tuple[int, int] = (4, 8)
    close_rule: tuple[int, int] = (8, 16)


@dataclass
class Panels:
    points: np.ndarray
    normals: np.ndarray
    areas: np.ndarray
    owner: np.ndarray
    quad: tuple[np.ndarray, np.ndarray]
    quad_fine: tuple[np.ndarray, np.ndarray]

    @property
    def size(self) -> int:
        return len(self.areas)

    @property
    def radii(self) -> np.ndarray:
        """Radius of the flat disc with the panel's area."""
        return np.sqrt(self.areas / math.pi)


def fibonacci_directions(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    phi = math.pi * (1.0 + math.sqrt(5.0)) * k
    r = np.sqrt(1.0 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(axis, e1)


def _frames(normals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.where(np.abs(normals[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
    e1 = np.cross(normals, helper)
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    return e1, np.cross(normals, e1)


def _disc_rule(nr: int, nphi: int) -> tuple[np.ndarray, np.ndarray]:
    """Points on the unit disc and weights summing to 1 (Gauss in r^2, midpoint in angle)."""
    x, w = np.polynomial.legendre.leggauss(nr)
    r = np.sqrt(0.5 * (x + 1.0))
    ang = 2.0 * math.pi * (np.arange(nphi) + 0.5) / nphi
    pts = np.array([(ri * math.cos(t), ri * math.sin(t)) for ri in r for t in ang])
    wts = np.repeat(0.5 * w, nphi) / nphi
    return pts, wts


def _disc_quadrature(centers, normals, radii, sphere_centers, R, rule):
    """Tangent-disc rule projected radially onto the sphere, weights scaled to the panel area."""
    pts2, w = _disc_rule(*rule)
    e1, e2 = _frames(normals)
    y = (centers[:, None, :]
         + radii[:, None, None] * (pts2[None, :, 0, None] * e1[:, None, :] + pts2[None, :, 1, None] * e2[:, None, :]))
    rel = y - sphere_centers[:, None, :]
    y = sphere_centers[:, None, :] + R * rel / np.linalg.norm(rel, axis=2)[:, :, None]
    areas = math.pi * radii**2
    return y, areas[:, None] * w[None, :]


def _ring_edges(theta1: float, cap: float, growth: float, max_step: float) -> np.ndarray:
    edges = [0.0, theta1]
    while edges[-1] < cap:
        step = min(max_step, max(theta1, (growth - 1.0) * edges[-1]))
        edges.append(min(cap, edges[-1] + step))
    if len(edges) > 2 and edges[-1] - edges[-2] < 0.3 * (edges[-2] - edges[-3]):
        edges.pop(-2)
    return np.array(edges)


def _cap_patch(center, R, axis, e1, e2, theta1, cap, growth, max_step, rules):
    """Graded polar panels on the cap ``angle(x - center, axis) < cap``.

    Returns points, normals, areas and two quadrature rules, each exact in
    area because the sectors are integrated in spherical coordinates.
    """
    edges = _ring_edges(theta1, cap, growth, max_step)
    pts, nrm, area = [], [], []
    quads = [([], []) for _ in rules]

    def place(theta, phi):
        st = np.sin(theta)
        d = (np.cos(theta)[..., None] * axis
             + (st * np.cos(phi))[..., None] * e1 + (st * np.sin(phi))[..., None] * e2)
        return d

    for k in range(len(edges) - 1):
        t0, t1 = edges[k], edges[k + 1]
        if k == 0:
            nphi = 1
        else:
            nphi = max(6, int(round(2.0 * math.pi * math.sin(0.5 * (t0 + t1)) / (t1 - t0))))
        dphi = 2.0 * math.pi / nphi
        zone = 2.0 * math.pi * R * R * (math.cos(t0) - math.cos(t1))
        tc = math.acos(0.5 * (math.cos(t0) + math.cos(t1)))
        for s in range(nphi):
            phc = (s + 0.5) * dphi if nphi > 1 else 0.0
            d = place(np.array(tc), np.array(phc))
            pts.append(center + R * d)
            nrm.append(d)
            area.append(zone / nphi)
            for (qp, qw), (nr, nf) in zip(quads, rules):
                x, w = np.polynomial.legendre.leggauss(nr)
                th = t0 + 0.5 * (x + 1.0) * (t1 - t0)
                ph = s * dphi + (np.arange(nf) + 0.5) * dphi / nf
                TH, PH = np.meshgrid(th, ph, indexing="ij")
                W = np.outer(0.5 * w * (t1 - t0) * np.sin(th), np.full(nf, dphi / nf)) * R * R
                qp.append((center + R * place(TH, PH)).reshape(-1, 3))
                qw.append(W.ravel())
    out = [(np.array(qp), np.array(qw)) for qp, qw in quads]
    return np.array(pts), np.array(nrm), np.array(area), out


def build_panels(arr: Arrangement, opts: MeshOptions) -> Panels:
    R = arr.radius
    centers = arr.centers
    base = fibonacci_directions(opts.panels_per_sphere)
    dirs = neighbour_directions(arr) if opts.refine_gaps else [[] for _ in range(arr.n)]

    cap = opts.cap_angle
    if opts.refine_gaps:
        for nb in dirs:
            for a, b in itertools.combinations(nb, 2):
                sep = math.acos(float(np.clip(a @ b, -1.0, 1.0)))
                cap = min(cap, 0.45 * sep)
    theta1 = opts.inner_fraction * arr.gap / R
    # Fibonacci discs centred just outside the cap would overlap its outer ring
    margin = opts.boundary_margin * math.sqrt(4.0 * math.pi / opts.panels_per_sphere)

    # mirror-symmetric azimuth frames: both sides of a gap share (e1, e2)
    frames = {}
    for nb in dirs:
        for d in nb:
            key = _line_key(d)
            if key not in frames:
                frames[key] = _frame(np.array(key))

    pts, nrm, area, own = [], [], [], []
    q_pts, q_w, f_pts, f_w = [], [], [], []
    for i in range(arr.n):
        c = centers[i]
        keep = np.ones(len(base), dtype=bool)
        cap_area = 0.0
        for d in dirs[i]:
            keep &= base @ d < math.cos(cap + margin)
            cap_area += 2.0 * math.pi * R * R * (1.0 - math.cos(cap))
        fib = base[keep]
        if len(fib) == 0:
            raise SingularSystem("gap refinement left no Fibonacci panels")
        fib_area = (4.0 * math.pi * R * R - cap_area) / len(fib)
        fp = c + R * fib
        fa = np.full(len(fib), fib_area)
        fr = np.sqrt(fa / math.pi)
        cc = np.repeat(c[None, :], len(fib), axis=0)
        qn = _disc_quadrature(fp, fib, fr, cc, R, opts.near_rule)
        qf = _disc_quadrature(fp, fib, fr, cc, R, opts.close_rule)
        pts.append(fp); nrm.append(fib); area.append(fa); own.append(np.full(len(fib), i))
        q_pts.append(qn[0]); q_w.append(qn[1]); f_pts.append(qf[0]); f_w.append(qf[1])
        for d in dirs[i]:
            e1, e2 = frames[_line_key(d)]
            p, nv, a, (qn, qf) = _cap_patch(c, R, d, e1, e2, theta1, cap, opts.growth,
                                            opts.match_spacing * math.sqrt(fib_area) / R,
                                            (opts.near_rule, opts.close_rule))
            pts.append(p); nrm.append(nv); area.append(a); own.append(np.full(len(a), i))
            q_pts.append(qn[0]); q_w.append(qn[1]); f_pts.append(qf[0]); f_w.append(qf[1])

    quad = _stack_quad(q_pts, q_w)
    quad_fine = _stack_quad(f_pts, f_w)
    return Panels(np.concatenate(pts), np.concatenate(nrm), np.concatenate(area),
                  np.concatenate(own), quad, quad_fine)


def _line_key(d: np.ndarray) -> tuple[float, ...]:
    """Direction of the line through ``d``, signed so its first nonzero component is positive."""
    d = np.round(d, 12) + 0.0
    nz = np.flatnonzero(d)
    if d[nz[0]] < 0:
        d = -d
    return tuple(float(x) for x in d)


def _stack_quad(pts_list, w_list):
    qmax = max(p.shape[1] for p in pts_list)
    outp, outw = [], []
    for p, w in zip(pts_list, w_list):
        if p.shape[1] < qmax:
            pad = qmax - p.shape[1]
            p = np.concatenate([p, np.repeat(p[:, :1], pad, axis=1)], axis=1)
            w = np.concatenate([w, np.zeros((w.shape[0], pad))], axis=1)
        outp.append(p)
        outw.append(w)
    return np.concatenate(outp), np.concatenate(outw)


def _quad_kernel(x, qp, qw, k=0.0):
    """``sum_q w_q G^k(x, y_q)`` for matched rows of ``x`` and panel rules."""
    r = np.linalg.norm(qp - x[:, None, :], axis=2)
    if k == 0.0:
        return -np.sum(qw / r, axis=1) / FOUR_PI
    return -np.sum(qw * np.exp(1j * k * r) / r, axis=1) / FOUR_PI


def _near_values(i, j, xs, panels: Panels, dist_ij):
    """Panel-averaged kernel from points ``xs[i]`` over source panels ``j``."""
    radii = panels.radii
    fine = dist_ij < CLOSE_FACTOR * radii[j]
    vals = np.empty(len(i))
    for sel, (qp, qw) in ((~fine, panels.quad), (fine, panels.quad_fine)):
        if np.any(sel):
            vals[sel] = _quad_kernel(xs[i[sel]], qp[j[sel]], qw[j[sel]]) / panels.areas[j[sel]]
    return vals


def _near_correct(G, xs, panels: Panels, dist, chunk=20000):
    """Overwrite entries of point-to-panel kernel ``G`` whose source panel is close by."""
    rows, cols = np.nonzero(dist < NEAR_FACTOR * panels.radii[None, :])
    for s in range(0, len(rows), chunk):
        i, j = rows[s:s + chunk], cols[s:s + chunk]
        G[i, j] = _near_values(i, j, xs, panels, dist[i, j])
    return len(rows)


def _near_correct_symmetric(G, panels: Panels, dist, chunk=20000):
    """Symmetric near-field entries for the collocation matrix.

    Comparable panels get the mean of both one-sided rules; otherwise the
    smaller panel is treated as a point and the larger one is integrated.
    """
    r = panels.radii
    x = panels.points
    rows, cols = np.nonzero(np.triu(dist < NEAR_FACTOR * np.maximum(r[:, None], r[None, :]), 1))
    for s in range(0, len(rows), chunk):
        i, j = rows[s:s + chunk], cols[s:s + chunk]
        d = dist[i, j]
        fwd = _near_values(i, j, x, panels, d)
        bwd = _near_values(j, i, x, panels, d)
        ratio = r[j] / r[i]
        vals = np.where(ratio > 1.2, fwd, np.where(ratio < 1.0 / 1.2, bwd, 0.5 * (fwd + bwd)))
        G[i, j] = vals
        G[j, i] = vals
    return len(rows)


@dataclass
class BEMContext:
    """Assembled and factored single-layer system for an arrangement.

    Read-only after construction; ``solve`` and ``evaluate`` may be called
    concurrently.
    """
    arrangement: Arrangement
    panels: Panels
    G: np.ndarray = field(repr=False)
    factor: tuple = field(repr=False)
    options: MeshOptions

    @property
    def n_panels(self) -> int:
        return self.panels.size

    @property
    def S(self) -> np.ndarray:
        """Single-layer matrix acting on panel densities."""
        return self.G * self.panels.areas[None, :]

    def indicator(self) -> np.ndarray:
        chi = np.zeros((self.n_panels, self.arrangement.n))
        chi[np.arange(self.n_panels), self.panels.owner] = 1.0
        return chi

    def solve(self, values: np.ndarray) -> np.ndarray:
        """Panel charges ``q`` whose single-layer potential takes ``values`` at the collocation points."""
        values = np.asarray(values)
        if np.iscomplexobj(values):
            return self.solve(values.real) + 1j * self.solve(values.imag)
        return -linalg.cho_solve(self.factor, values)

    def per_resonator(self, q: np.ndarray) -> np.ndarray:
        """Sum of charges over each sphere (the integral of the density over each boundary)."""
        out = np.zeros((self.arrangement.n,) + q.shape[1:], dtype=q.dtype)
        np.add.at(out, self.panels.owner, q)
        return out

    def evaluate(self, points: np.ndarray, charges: np.ndarray, k: float = 0.0) -> np.ndarray:
        """Single-layer potential of ``charges`` at ``points`` with kernel ``-exp(ikr)/(4 pi r)``.

        ``charges`` may be a vector or a ``(panels, m)`` array.  Points that
        coincide with a collocation point reuse the assembled matrix row.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        q = np.asarray(charges)
        dist = cdist(pts, self.panels.points)
        with np.errstate(divide="ignore"):
            K = -1.0 / (FOUR_PI * dist)
        _near_correct(K, pts, self.panels, dist)
        hit = np.argmin(dist, axis=1)
        on = dist[np.arange(len(pts)), hit] <= 1e-12 * self.arrangement.radius
        if np.any(on):
            K[on] = self.G[hit[on]]
        if k != 0.0:
            K = K * np.exp(1j * k * dist)
            if np.any(on):
                K[on, hit[on]] += -1j * k / FOUR_PI
        return K @ q


def assemble(arr: Arrangement, opts: Optional[MeshOptions] = None) -> BEMContext:
    opts = opts or MeshOptions()
    if opts.panels_per_sphere < 100:
        raise SingularSystem(f"panels_per_sphere must be at least 100, got {opts.panels_per_sphere}")
    panels = build_panels(arr, opts)
    if arr.n > 1:
        near_gap = _gap_panel_diameter(arr, panels)
        if near_gap > arr.gap:
            warnings.warn(
                f"panel diameter {near_gap:.3g} next to the gap exceeds eps={arr.gap:.3g}",
                ResolutionWarning, stacklevel=3,
            )
    x = panels.points
    G = cdist(x, x)
    dist = G.copy()
    np.fill_diagonal(G, 1.0)
    np.divide(-1.0 / FOUR_PI, G, out=G)
    np.fill_diagonal(dist, np.inf)
    n_near = _near_correct_symmetric(G, panels, dist)
    del dist
    G[np.diag_indices_from(G)] = -1.0 / (2.0 * math.pi * panels.radii)
    try:
        factor = linalg.cho_factor(-G, lower=False, check_finite=False)
    except linalg.LinAlgError as exc:
        raise SingularSystem(f"single-layer matrix is not negative definite: {exc}") from None
    log.debug("assembled %d panels, %d near-field corrections", panels.size, n_near)
    return BEMContext(arr, panels, G, factor, opts)


def _gap_panel_diameter(arr: Arrangement, panels: Panels) -> float:
    """Diameter of the panel closest to any contact point."""
    c = arr.centers
    worst = 0.0
    for i, nb in enumerate(neighbour_directions(arr)):
        mine = panels.owner == i
        for d in nb:
            tip = c[i] + arr.radius * d
            k = np.argmin(np.linalg.norm(panels.points[mine] - tip, axis=1))
            worst = max(worst, 2.0 * panels.radii[mine][k])
    return worst


def capacitance_from_context(ctx: BEMContext) -> CapacitanceMatrix:
    chi = ctx.indicator()
    q = ctx.solve(chi)
    raw = -(chi.T @ q)
    asym = float(np.max(np.abs(raw - raw.T)) / np.max(np.abs(raw)))
    return CapacitanceMatrix(0.5 * (raw + raw.T), Provenance.BEM, asym,
                             {"panels": ctx.n_panels, "refine_gaps": ctx.options.refine_gaps,
                              "eps": ctx.arrangement.gap})


def bem_capacitance(arr: Arrangement, panels_per_sphere: int = 1000, refine_gaps: bool = False,
                    return_context: bool = False, **mesh_kwargs):
    """Capacitance matrix by collocation on the single-layer equation.

    Solves ``S psi_j = chi_j`` for each sphere ``j`` and returns
    ``C_ij = -sum_{panels on i} psi_j A``.
    """
    opts = MeshOptions(panels_per_sphere=panels_per_sphere, refine_gaps=refine_gaps, **mesh_kwargs)
    ctx = assemble(arr, opts)
    C = capacitance_from_context(ctx)
    return (C, ctx) if return_context else C
