"""Fibers of spectral datasets, per-cell Gramian fields, group symmetrization
of channels, periodic-multiplier membership tests, and dilation transport.

The fiber of channel i at torus cell u is the vector of samples over the
offset set K.  All statements about invariant subspaces reduce to independent
linear algebra on these vectors; the Gramian field collects their inner
products.  Cells whose Gramian trace is exactly zero carry no information and
are skipped everywhere (synthesized zeros are exact zeros, so this loses
nothing).
"""

import numpy as np

from .lattice import dilate_lattice, _cell_permutations, _offset_permutations
from .spectral import FrequencyGrid, SpectralDataset

__all__ = [
    "FiberVector",
    "GramianField",
    "fiber",
    "gramian_field",
    "symmetrize",
    "membership_test",
    "dilation_transport",
    "regrid_to_lattice",
    "gramian_covariance_check",
]

# debug hook: when set, gramian_field drops the conjugation on the second
# factor, which silently breaks Hermiticity; the covariance suite must catch
# it.  Enable via the PWSIS_BUG_GRAMIAN_NO_CONJ environment variable.
_BUG_GRAMIAN_NO_CONJ = False


class FiberVector:
    """Samples of one channel over all offsets at a fixed cell."""

    def __init__(self, cell, entries):
        self.cell = int(cell)
        self.entries = np.asarray(entries, dtype=np.complex128)

    def norm(self):
        return float(np.linalg.norm(self.entries))

    def __repr__(self):
        return "FiberVector(cell=%d, entries=%s)" % (self.cell, self.entries)


def _flat_cell(grid, cell):
    if isinstance(cell, (tuple, list, np.ndarray)):
        idx = np.ravel_multi_index(np.asarray(cell, dtype=np.int64), (grid.r,) * grid.d)
        return int(idx)
    cell = int(cell)
    if cell < 0 or cell >= grid.n_cells:
        raise IndexError("cell index %d out of range" % cell)
    return cell


def fiber(F, i, cell):
    """Fiber of channel i at a cell (flat index or d-tuple of cell indices)."""
    if i < 0 or i >= F.m:
        raise IndexError("channel index %d out of range" % i)
    c = _flat_cell(F.grid, cell)
    return FiberVector(c, F.values[i, :, c].copy())


class GramianField:
    """Hermitian m x m Gramians G(u)_ij = <fiber_i(u), fiber_j(u)>, stored on
    the active cells only (trace > 0)."""

    def __init__(self, grid, m, active_idx, mats, trace):
        self.grid = grid
        self.m = m
        self.active_idx = active_idx
        self.mats = mats
        self.trace = trace
        for a in (self.active_idx, self.mats, self.trace):
            a.setflags(write=False)

    @property
    def n_active(self):
        return self.active_idx.shape[0]

    def dense_at(self, cell):
        """Gramian at one flat cell index, zero if the cell is inactive."""
        pos = np.searchsorted(self.active_idx, cell)
        if pos < self.n_active and self.active_idx[pos] == cell:
            return self.mats[pos]
        return np.zeros((self.m, self.m), dtype=np.complex128)

    def __repr__(self):
        return "GramianField(m=%d, active=%d/%d)" % (self.m, self.n_active, self.grid.n_cells)


def _cell_trace(values):
    """Sum of |value|^2 per cell, one channel at a time to bound temporaries."""
    m = values.shape[0]
    out = np.zeros(values.shape[2])
    for i in range(m):
        v = values[i]
        out += (v.real ** 2 + v.imag ** 2).sum(axis=0)
    return out


def gramian_field(F):
    """Per-cell Gramian of all channel fibers, summed in ascending offset
    order (einsum over the offset axis is a fixed-order reduction)."""
    import os

    trace = _cell_trace(F.values)
    active = np.flatnonzero(trace > 0.0)
    va = np.ascontiguousarray(F.values[:, :, active])
    other = va.conj()
    if _BUG_GRAMIAN_NO_CONJ or os.environ.get("PWSIS_BUG_GRAMIAN_NO_CONJ"):
        other = va
    mats = np.einsum("ikc,jkc->cij", va, other)
    return GramianField(F.grid, F.m, active, mats, trace[active])


def symmetrize(F, group):
    """Expand channels by the group action: channel (g, i) holds R_g f_i.

    The output has m * |G| channels ordered g-major.  Channel (g, i) at index
    (k, u) reads channel i of F at the inverse-image index, so the identity
    block is an exact copy and every channel is an index permutation of its
    source (energies are preserved exactly).
    """
    if group.d != F.grid.d:
        raise ValueError("group dimension %d does not match grid" % group.d)
    cell_perms = _cell_permutations(F.grid, group)
    off_perms = _offset_permutations(F.grid, group)
    m, n = F.m, len(group)
    out = np.empty((m * n, F.grid.n_offsets, F.grid.n_cells), dtype=np.complex128)
    for gi in range(n):
        inv = group.inverse_index(gi)
        src = np.ix_(off_perms[inv], cell_perms[inv])
        for i in range(m):
            out[gi * m + i] = F.values[i][src]
    return SpectralDataset(F.lattice, F.grid, out, check_finite=False)


def membership_test(F, i, Psi, j, tol=1e-9):
    """Whether channel i of F lies in the invariant space generated by
    channel j of Psi: at every cell the fiber of f must be colinear with the
    fiber of psi (and vanish where psi does).

    The per-cell residual of projecting T f(u) onto span{T psi(u)} equals
    |T f(u)|^2 sin^2(angle) and must not exceed tol * |T f(u)|^2, a bound
    invariant under rescaling either fiber; zero psi-fibers admit only zero
    f-fibers.
    """
    if not F.grid.compatible(Psi.grid):
        raise ValueError("mismatched grid between datasets")
    a = F.values[i]
    b = Psi.values[j]
    na2 = (a.real ** 2 + a.imag ** 2).sum(axis=0)
    nb2 = (b.real ** 2 + b.imag ** 2).sum(axis=0)
    ip = (b.conj() * a).sum(axis=0)
    ip2 = ip.real ** 2 + ip.imag ** 2
    resid = np.where(nb2 > 0.0, na2 - ip2 / np.where(nb2 > 0.0, nb2, 1.0), na2)
    bound = tol * na2
    return bool(np.all(resid <= bound))


def dilation_transport(F, A):
    """Dataset of the unitary dilations D_A f_i, living on the lattice
    A^-1 (lattice of F).

    D_A f(x) = |det A|^(1/2) f(Ax) has spectrum |det A|^(-1/2) f_hat(Ahat xi),
    so on the transported lattice the sample points coincide with F's and the
    transport is a pure scaling of the stored values with the same (r, K)
    layout.  Transporting F from Lambda to A Lambda is the same call with
    A^-1.
    """
    A = np.asarray(A, dtype=float)
    lat = dilate_lattice(F.lattice, np.linalg.inv(A))
    grid = FrequencyGrid(lat, F.grid.r, F.grid.offsets)
    scale = abs(np.linalg.det(A)) ** -0.5
    return SpectralDataset(lat, grid, scale * F.values, check_finite=False)


_REGRID_VALUE_CAP = 1 << 24


def regrid_to_lattice(F, lat):
    """Re-index the dataset's samples as a grid over another commensurable
    lattice, so per-lattice optima are computed from the same frequency set.

    Writing a sample as Ahat (j + r k) / r, the target layout needs the scale
    sigma = (det A / det A')^(1/d) to give an integer resolution r' = sigma r
    and the map C = (r'/r) A'^T Ahat to be an integer matrix; C then has
    determinant +-1 automatically, so samples land on distinct grid boxes of
    equal measure.  Raises ValueError for incommensurable targets.
    """
    src = F.lattice
    grid = F.grid
    d = src.d
    if lat.d != d:
        raise ValueError(
            "lattice dimension %d does not match the dataset's %d" % (lat.d, d))
    if lat.same_as(src):
        return F
    sigma = (src.det_abs / lat.det_abs) ** (1.0 / d)
    r2 = int(round(sigma * grid.r))
    if r2 < 1 or abs(sigma * grid.r - r2) > 1e-6 * max(1.0, sigma * grid.r):
        raise ValueError(
            "incommensurable lattices: resolution scale %.12g does not give "
            "an integer resolution at r=%d" % (sigma, grid.r))
    M = (lat.basis.T @ src.dual_basis) * (float(r2) / grid.r)
    C = np.rint(M)
    if np.max(np.abs(M - C)) > 1e-9:
        raise ValueError(
            "incommensurable lattices: the sample map is not integer "
            "(max deviation %.3g)" % float(np.max(np.abs(M - C))))
    C = C.astype(np.int64)
    if abs(int(round(np.linalg.det(C)))) != 1:
        raise ValueError("incommensurable lattices: the sample map is not unimodular")

    full = (grid.cell_vectors()[None, :, :]
            + grid.r * grid.offsets[:, None, :]).reshape(-1, d)
    full2 = full @ C.T
    k2 = np.floor_divide(full2, r2)
    j2 = full2 - r2 * k2
    K2, inverse = np.unique(np.vstack([k2, np.zeros((1, d), dtype=np.int64)]),
                            axis=0, return_inverse=True)
    if F.m * K2.shape[0] * r2 ** d > _REGRID_VALUE_CAP:
        raise ValueError(
            "regridded dataset too large: %d values exceeds the supported bound"
            % (F.m * K2.shape[0] * r2 ** d))
    grid2 = FrequencyGrid(lat, r2, K2)
    assert np.array_equal(grid2.offsets, K2)
    ki = np.asarray(inverse).ravel()[: k2.shape[0]]
    ci = np.ravel_multi_index(j2.T, (r2,) * d)
    vals = np.zeros((F.m, grid2.n_offsets, grid2.n_cells), dtype=np.complex128)
    vals[:, ki, ci] = F.values.reshape(F.m, -1)
    return SpectralDataset(lat, grid2, vals, check_finite=False)


def gramian_covariance_check(F, A):
    """Max deviation over cells of |G_F(u) - |det A| * G_{F_D}(u)| where F_D
    is the dilation transport.

    Both Gramian fields are computed independently from their own datasets;
    the identity ties the field over A Lambda to the field of the dilated
    data over Lambda.
    """
    A = np.asarray(A, dtype=float)
    D = dilation_transport(F, A)
    GF = gramian_field(F)
    GD = gramian_field(D)
    scale = abs(np.linalg.det(A))
    pos_f = {int(c): k for k, c in enumerate(GF.active_idx)}
    pos_d = {int(c): k for k, c in enumerate(GD.active_idx)}
    dev = 0.0
    for c in sorted(set(pos_f) | set(pos_d)):
        gf = GF.mats[pos_f[c]] if c in pos_f else 0.0
        gd = GD.mats[pos_d[c]] if c in pos_d else 0.0
        dev = max(dev, float(np.max(np.abs(gf - scale * gd))))
    return dev
