"""Galerkin assembly on structured grids and fast reference solvers.

The discrete operator is multilinear elements with one-point (cell
center) quadrature.  Because every cell shares one Jacobian, the element
geometry collapses to a single d x 2^d weight matrix ``grid.phi`` and the
constant-coefficient operator is diagonalized exactly by lateral FFTs:
periodic lateral axes give a circulant structure, the vertical axis
leaves one Hermitian tridiagonal system per lateral Fourier mode.  That
factorization is used as the harmonic-extension initial guess and as the
preconditioner of the nonlinear solvers.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

__all__ = [
    "assemble_matrix",
    "corner_node_ids",
    "strip_dof_partition",
    "StripReferenceSolver",
    "TorusReferenceSolver",
]


def corner_node_ids(grid):
    """Global node index of each cell corner: array (2^d, n_cells)."""
    ids = np.arange(grid.n_nodes).reshape(grid.node_shape)
    out = []
    for c in grid.corners:
        out.append(grid._gather_corner(ids, c).ravel())
    return np.stack(out)


def assemble_matrix(grid, tensor):
    """CSR matrix of the bilinear form for a LinearTensorField.

    Dof layout: component-major, dof = i * n_nodes + node.  Rows are test
    functions; nonsymmetric tensors produce nonsymmetric matrices.
    """
    N = tensor.n_components
    nn = grid.n_nodes
    centers = grid.cell_centers()
    A = tensor(centers)  # (d, d, N, N, *cells)
    A = A.reshape(A.shape[:4] + (-1,))  # flatten cells
    phi = grid.phi
    vals = np.einsum("ac,abijs,bd->sicjd", phi, A, phi, optimize=True) * grid.cellvol
    cid = corner_node_ids(grid)  # (2^d, ncells)
    ncells = cid.shape[1]
    nc = len(grid.corners)
    comp = np.arange(N) * nn
    rows = comp[None, :, None, None, None] + cid.T[:, None, :, None, None]
    cols = comp[None, None, None, :, None] + cid.T[:, None, None, None, :]
    rows = np.broadcast_to(rows, vals.shape).ravel()
    cols = np.broadcast_to(cols, vals.shape).ravel()
    K = sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(N * nn, N * nn))
    return K.tocsr()


def strip_dof_partition(grid, n_components, top_dirichlet):
    """(free, bottom, top) dof index arrays for a strip grid."""
    nn = grid.n_nodes
    node_ids = np.arange(nn).reshape(grid.node_shape)
    bottom = node_ids[..., 0].ravel()
    top = node_ids[..., -1].ravel()
    fixed_nodes = np.concatenate([bottom, top]) if top_dirichlet else bottom
    fixed_mask = np.zeros(nn, dtype=bool)
    fixed_mask[fixed_nodes] = True
    free_nodes = np.nonzero(~fixed_mask)[0]
    comp = np.arange(n_components) * nn

    def expand(nodes):
        return (comp[:, None] + nodes[None, :]).ravel()

    return expand(free_nodes), expand(bottom), expand(top)


def _element_matrix_identity(grid):
    return grid.cellvol * (grid.phi.T @ grid.phi)


def _lateral_phases(grid, lat_shape):
    thetas = []
    for n in lat_shape:
        thetas.append(2.0 * np.pi * np.arange(n) / n)
    return np.meshgrid(*thetas, indexing="ij") if thetas else []


class StripReferenceSolver:
    """Exact solver for the constant-coefficient (A = I) strip operator.

    Solves K_ref x = r on the free nodes (bottom Dirichlet, top either
    natural or Dirichlet) by lateral FFT plus one tridiagonal solve per
    Fourier mode, factorized once.
    """

    def __init__(self, grid, top_dirichlet=False):
        self.grid = grid
        self.top_dirichlet = bool(top_dirichlet)
        d = grid.d
        Ke = _element_matrix_identity(grid)
        lat_shape = grid.lat_cells
        self.lat_axes = tuple(range(1, d))  # axes of (N, *lat, levels) arrays
        th = _lateral_phases(grid, lat_shape)
        zero = np.zeros(lat_shape, dtype=complex)
        T = {-1: zero.copy(), 0: zero.copy(), 1: zero.copy()}
        Ttop = {-1: zero.copy(), 0: zero.copy()}
        for ci, c in enumerate(grid.corners):
            for cj, c2 in enumerate(grid.corners):
                phase = np.ones(lat_shape, dtype=complex)
                for ax in range(d - 1):
                    diff = c2[ax] - c[ax]
                    if diff:
                        phase = phase * np.exp(1j * diff * th[ax])
                delta = c2[-1] - c[-1]
                T[delta] += Ke[ci, cj] * phase
                if c[-1] == 1:
                    Ttop[delta] += Ke[ci, cj] * phase
        nv = grid.n_vert
        n_free = nv - 1 if self.top_dirichlet else nv
        if n_free < 1:
            raise ValueError("strip too shallow for a free interior")
        diag = np.empty((n_free,) + lat_shape, dtype=complex)
        lower = np.empty_like(diag)
        upper = np.empty_like(diag)
        diag[:] = T[0]
        lower[:] = T[-1]
        upper[:] = T[1]
        if not self.top_dirichlet:
            diag[-1] = Ttop[0]
            lower[-1] = Ttop[-1]
        # Lateral modes on which every band vanishes are hourglass modes of
        # the one-point quadrature (zero discrete energy); pseudo-invert.
        scale = max(np.abs(b).max() for b in (T[-1], T[0], T[1]))
        null = np.maximum.reduce(
            [np.abs(b) for b in (T[-1], T[0], T[1], Ttop[-1], Ttop[0])]
        ) <= 1e-12 * scale
        self.null_mask = null
        if null.any():
            diag[:, null] = 1.0
            lower[:, null] = 0.0
            upper[:, null] = 0.0
        self._keep = np.where(null, 0.0, 1.0)[..., None]
        self.n_free = n_free
        # in-place LU of the Hermitian tridiagonal, vectorized over modes
        self._denom = np.empty_like(diag)
        self._l = np.zeros_like(diag)
        self._upper = upper
        self._denom[0] = diag[0]
        for k in range(1, n_free):
            self._l[k] = lower[k] / self._denom[k - 1]
            self._denom[k] = diag[k] - self._l[k] * upper[k - 1]

    def solve_free(self, r_free):
        """Solve for the free-level block; r_free is (N, *lat, n_free)."""
        rhat = np.fft.fftn(r_free, axes=self.lat_axes).astype(complex)
        y = np.empty_like(rhat)
        y[..., 0] = rhat[..., 0]
        for k in range(1, self.n_free):
            y[..., k] = rhat[..., k] - self._l[k] * y[..., k - 1]
        x = np.empty_like(y)
        x[..., -1] = y[..., -1] / self._denom[-1]
        for k in range(self.n_free - 2, -1, -1):
            x[..., k] = (y[..., k] - self._upper[k] * x[..., k + 1]) / self._denom[k]
        x = x * self._keep
        return np.real(np.fft.ifftn(x, axes=self.lat_axes))

    def solve(self, r_full):
        """Solve with zero correction on fixed levels; r_full (N, *lat, levels)."""
        stop = -1 if self.top_dirichlet else r_full.shape[-1]
        corr = np.zeros_like(r_full)
        corr[..., 1:stop] = self.solve_free(r_full[..., 1:stop])
        return corr

    def lift(self, bottom, top=None):
        """Discrete harmonic extension of boundary values.

        bottom: (N, *lat); top: same shape (required iff top Dirichlet).
        """
        grid = self.grid
        levels = grid.n_vert + 1
        U = np.repeat(bottom[..., None], levels, axis=-1)
        if self.top_dirichlet:
            if top is None:
                raise ValueError("top values required for a Dirichlet top")
            frac = np.linspace(0.0, 1.0, levels)
            U = bottom[..., None] * (1.0 - frac) + top[..., None] * frac
        res = grid.apply_reference(U)
        return U - self.solve(res)


class TorusReferenceSolver:
    """FFT pseudo-inverse of the constant-coefficient torus operator.

    The symbol vanishes on the constant mode (and, for even cell counts,
    on the hourglass modes of the one-point quadrature); those modes are
    projected out, which fixes the zero-mean gauge of cell correctors.
    """

    def __init__(self, grid):
        self.grid = grid
        d = grid.d
        Ke = _element_matrix_identity(grid)
        th = _lateral_phases(grid, grid.node_shape)
        sigma = np.zeros(grid.node_shape, dtype=complex)
        for ci, c in enumerate(grid.corners):
            for cj, c2 in enumerate(grid.corners):
                phase = np.ones(grid.node_shape, dtype=complex)
                for ax in range(d):
                    diff = c2[ax] - c[ax]
                    if diff:
                        phase = phase * np.exp(1j * diff * th[ax])
                sigma += Ke[ci, cj] * phase
        tol = 1e-12 * np.abs(sigma).max()
        self.null_mask = np.abs(sigma) <= tol
        inv = np.zeros_like(sigma)
        inv[~self.null_mask] = 1.0 / sigma[~self.null_mask]
        self._inv = inv
        self.axes = tuple(range(1, d + 1))

    def solve(self, r):
        rhat = np.fft.fftn(r, axes=self.axes)
        return np.real(np.fft.ifftn(rhat * self._inv, axes=self.axes))

    def project_out_null(self, U):
        uhat = np.fft.fftn(U, axes=self.axes)
        uhat[..., self.null_mask] = 0.0
        return np.real(np.fft.ifftn(uhat, axes=self.axes))
