"""Structured grids for periodic strips and the unit torus.

A strip grid discretizes {s < y . xi_hat < s + R} in sheared coordinates:
lateral axes follow the boundary period lattice vectors ell_j (so lateral
wraparound is an exact lattice translation and coefficient fields stay
periodic across the identification), the last axis follows xi_hat.  Every
cell is the same parallelepiped, so the multilinear element geometry is a
single constant Jacobian.

Gradients are evaluated once per cell at the cell center (one point
quadrature); this is part of the definition of the discrete operator.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import InvalidMeshError
from .lattice import RationalDirection

__all__ = ["StripGrid", "TorusGrid", "build_strip_grid", "planar_strip_grid"]

_DIV_TOL = 1e-9
_MAX_SPACING = 1.0 / 8.0  # at least 8 cells per unit length


class _MeshBase:
    """Shared cell-corner machinery; subclasses fix topology and geometry."""

    def _setup(self, edges):
        d = self.d
        self.edges = np.asarray(edges, dtype=float)  # columns are cell edge vectors
        self.jacobian = self.edges
        self.cellvol = abs(float(np.linalg.det(self.jacobian)))
        self.grad_map = np.linalg.inv(self.jacobian).T  # ref gradient -> physical
        self.corners = tuple(itertools.product((0, 1), repeat=d))
        W = np.empty((d, 2**d))
        for ci, c in enumerate(self.corners):
            for ax in range(d):
                W[ax, ci] = (1.0 if c[ax] else -1.0) / 2.0 ** (d - 1)
        self.ref_weights = W
        self.phi = self.grad_map @ W  # physical gradient weights per corner

    # topology hooks -----------------------------------------------------
    def _gather_corner(self, U, c):
        raise NotImplementedError

    def _scatter_corner(self, out, c, contrib):
        raise NotImplementedError

    # calculus -----------------------------------------------------------
    def gather(self, U):
        """Corner values per cell: list of 2^d arrays (..., *cell_shape)."""
        return [self._gather_corner(U, c) for c in self.corners]

    def ref_gradient(self, U):
        corners = self.gather(U)
        g = np.zeros((self.d,) + corners[0].shape)
        for ci in range(len(self.corners)):
            for ax in range(self.d):
                w = self.ref_weights[ax, ci]
                if w:
                    g[ax] += w * corners[ci]
        return g

    def phys_gradient(self, U):
        g = self.ref_gradient(U)
        return np.tensordot(self.grad_map, g, axes=(1, 0))

    def scatter_flux(self, q):
        """Adjoint of phys_gradient including the cell volume weight.

        q has shape (d, N, *cell_shape); result (N, *node_shape).  The
        entries are the partial derivatives of sum_cells vol * F(grad u)
        with respect to nodal values when q = DF(grad u).
        """
        q_ref = np.tensordot(self.grad_map.T, q, axes=(1, 0)) * self.cellvol
        out = np.zeros(q.shape[1:2] + self.node_shape)
        for ci, c in enumerate(self.corners):
            contrib = None
            for ax in range(self.d):
                w = self.ref_weights[ax, ci]
                if not w:
                    continue
                piece = w * q_ref[ax]
                contrib = piece if contrib is None else contrib + piece
            self._scatter_corner(out, c, contrib)
        return out

    def apply_reference(self, U):
        """Discrete Laplacian (A = I) applied componentwise."""
        return self.scatter_flux(self.phys_gradient(U))


class StripGrid(_MeshBase):
    """Periodic-lateral strip mesh.

    ``periods`` are the lateral translation vectors (the identification of
    opposite lateral faces), ``normal`` the unit vector of the strip axis.
    ``xi`` keeps the originating RationalDirection when there is one.
    """

    def __init__(self, periods, normal, s, R, lat_cells, n_vert, xi=None, check_resolution=True):
        normal = np.asarray(normal, dtype=float)
        self.xi = xi
        self.d = normal.shape[0]
        self.normal = normal
        self.s = float(s)
        self.R = float(R)
        self.lat_cells = tuple(int(n) for n in lat_cells)
        self.n_vert = int(n_vert)
        if len(self.lat_cells) != self.d - 1:
            raise InvalidMeshError("one lateral cell count per period vector required")
        if self.n_vert < 2 or any(n < 2 for n in self.lat_cells):
            raise InvalidMeshError("need at least 2 cells per direction")
        lat_edges = [
            np.asarray(ell, dtype=float) / n for ell, n in zip(periods, self.lat_cells)
        ]
        h_r = self.R / self.n_vert
        edges = np.column_stack(lat_edges + [h_r * normal])
        self.spacings = tuple(float(np.linalg.norm(e)) for e in edges.T)
        if check_resolution and max(self.spacings) > _MAX_SPACING * (1.0 + 1e-9):
            raise InvalidMeshError(
                f"spacing {max(self.spacings):.4g} coarser than 8 cells per unit length"
            )
        self.node_shape = self.lat_cells + (self.n_vert + 1,)
        self.cell_shape = self.lat_cells + (self.n_vert,)
        self.origin = self.s * normal
        self._setup(edges)

    # --- topology: lateral axes periodic, vertical axis sliced ----------
    def _gather_corner(self, U, c):
        A = U
        for ax in range(self.d - 1):
            if c[ax]:
                A = np.roll(A, -1, axis=A.ndim - self.d + ax)
        return A[..., 1:] if c[-1] else A[..., :-1]

    def _scatter_corner(self, out, c, contrib):
        A = contrib
        for ax in range(self.d - 1):
            if c[ax]:
                A = np.roll(A, 1, axis=A.ndim - self.d + ax)
        if c[-1]:
            out[..., 1:] += A
        else:
            out[..., :-1] += A

    # --- coordinates -----------------------------------------------------
    def _coords(self, shape, offset):
        idx = np.meshgrid(*[np.arange(n) for n in shape], indexing="ij")
        pts = np.zeros((self.d,) + tuple(shape))
        for ax in range(self.d):
            coord = idx[ax] + offset
            for comp in range(self.d):
                pts[comp] += coord * self.edges[comp, ax]
        return pts + self.origin.reshape((self.d,) + (1,) * len(shape))

    def node_coords(self):
        return self._coords(self.node_shape, 0.0)

    def cell_centers(self):
        return self._coords(self.cell_shape, 0.5)

    def bottom_coords(self):
        return self.node_coords()[..., 0]

    def top_coords(self):
        return self.node_coords()[..., -1]

    @property
    def n_nodes(self):
        return int(np.prod(self.node_shape))

    def level_index(self, z):
        """Grid level closest to physical height z above the boundary."""
        h_r = self.R / self.n_vert
        k = int(round(z / h_r))
        if abs(k * h_r - z) > 1e-9 * max(1.0, abs(z)):
            raise InvalidMeshError(f"height {z} is not a grid level (h_r = {h_r})")
        return k

    def describe(self):
        return {
            "xi": self.xi.xi.tolist() if self.xi is not None else None,
            "normal": self.normal.tolist(),
            "s": self.s,
            "R": self.R,
            "lat_cells": list(self.lat_cells),
            "n_vert": self.n_vert,
            "spacings": list(self.spacings),
        }


class TorusGrid(_MeshBase):
    """Uniform grid on the unit torus [0,1)^d, periodic in every axis."""

    def __init__(self, d, n_cells):
        self.d = d
        self.n_cells = int(n_cells)
        if self.n_cells < 2:
            raise InvalidMeshError("need at least 2 cells per direction")
        self.node_shape = (self.n_cells,) * d
        self.cell_shape = self.node_shape
        self._setup(np.eye(d) / self.n_cells)
        self.spacings = (1.0 / self.n_cells,) * d

    def _gather_corner(self, U, c):
        A = U
        for ax in range(self.d):
            if c[ax]:
                A = np.roll(A, -1, axis=A.ndim - self.d + ax)
        return A

    def _scatter_corner(self, out, c, contrib):
        A = contrib
        for ax in range(self.d):
            if c[ax]:
                A = np.roll(A, 1, axis=A.ndim - self.d + ax)
        out += A

    def cell_centers(self):
        idx = np.meshgrid(*[np.arange(self.n_cells)] * self.d, indexing="ij")
        pts = np.stack([(g + 0.5) / self.n_cells for g in idx])
        return pts

    @property
    def n_nodes(self):
        return self.n_cells**self.d


def _cells_from_spacing(length, h, what):
    n = int(round(length / h))
    if n < 1 or abs(n * h - length) > _DIV_TOL * max(1.0, length):
        raise InvalidMeshError(f"h = {h} does not divide {what} = {length}")
    return n


def build_strip_grid(xi: RationalDirection, s, R, h=None, cells=None) -> StripGrid:
    """Grid for the strip {s < y . xi_hat < s + R}.

    With ``h`` given, h must divide the height R and every lateral period
    length exactly (InvalidMeshError otherwise).  ``cells`` overrides the
    per-direction cell counts directly, which is the only way to mesh
    geometries whose period lengths are incommensurable.
    """
    if cells is not None:
        lat_cells = tuple(cells[:-1])
        n_vert = cells[-1]
    else:
        if h is None:
            raise InvalidMeshError("either h or cells must be given")
        lat_cells = tuple(
            _cells_from_spacing(math.sqrt(float(ell @ ell)), h, "lateral period")
            for ell in xi.periods
        )
        n_vert = _cells_from_spacing(R, h, "strip height R")
    return StripGrid(xi.periods, xi.xi_hat, s, R, lat_cells, n_vert, xi=xi)


def planar_strip_grid(period, R, n_lat, n_vert, s=0.0) -> StripGrid:
    """Axis-aligned 2-d strip [0, period) x (s, s + R).

    Used for reduced problems whose lateral period is not tied to a
    lattice direction (it may be incommensurable with R).
    """
    return StripGrid(
        [np.array([float(period), 0.0])],
        np.array([0.0, 1.0]),
        s,
        R,
        (n_lat,),
        n_vert,
    )
