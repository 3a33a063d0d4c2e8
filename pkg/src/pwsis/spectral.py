"""Discretized frequency domain: grids of torus cells times dual-lattice
offsets, scene-driven synthesis of spectral datasets, band-limitation masks
and their projections.

The grid samples frequency points xi = Ahat @ (u + k) where u = j/r runs over
the left corners of the half-open torus cells [j/r, (j+1)/r) and k runs over a
finite integer offset set K.  Corner sampling plus half-open membership makes
two things exact: indicator partitions of aligned breakpoints, and the index
permutation action of integer dual-group matrices.
"""

import numpy as np

from .lattice import Lattice

__all__ = [
    "FrequencyGrid",
    "SpectralDataset",
    "PWMask",
    "Scene",
    "Box",
    "Ball",
    "interval",
    "make_grid",
    "synthesize",
    "pw_mask",
    "project_pw",
    "residual_energy",
]


def _sorted_offsets(offsets, d):
    arr = np.array(offsets, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] != d:
        raise ValueError("offsets must be integer %d-vectors" % d)
    arr = np.unique(arr, axis=0)  # unique sorts rows lexicographically
    return arr


class FrequencyGrid:
    """Sampling layout: resolution r per torus unit, offset set K, weights.

    cell_weight = |det Ahat| / r^d is the Lebesgue measure represented by one
    sample; the total represented measure is |K| * |det Ahat|.
    """

    def __init__(self, lattice, r, offsets):
        if int(r) != r or r < 1:
            raise ValueError("resolution must be a positive integer")
        self.lattice = lattice
        self.d = lattice.d
        self.r = int(r)
        self.offsets = _sorted_offsets(offsets, self.d)
        if self.offsets.shape[0] == 0:
            raise ValueError("empty offset set")
        if not any(np.all(k == 0) for k in self.offsets):
            raise ValueError("offset set must contain 0")
        self.n_offsets = self.offsets.shape[0]
        self.n_cells = self.r ** self.d
        # |det Ahat| = 1 / |det A|
        self.cell_weight = 1.0 / (lattice.det_abs * self.n_cells)
        self._offset_lookup = {tuple(int(v) for v in k): i for i, k in enumerate(self.offsets)}
        self._cells = None
        self.offsets.setflags(write=False)

    def cell_vectors(self):
        """(n_cells, d) integer cell indices j in C order."""
        if self._cells is None:
            axes = [np.arange(self.r)] * self.d
            mesh = np.meshgrid(*axes, indexing="ij")
            cells = np.stack([m.ravel() for m in mesh], axis=1).astype(np.int64)
            cells.setflags(write=False)
            self._cells = cells
        return self._cells

    def torus_points(self):
        return self.cell_vectors() / float(self.r)

    def frequency_points(self, k_index):
        """Physical sample points Ahat @ (u + k) for one offset, (n_cells, d)."""
        k = self.offsets[k_index]
        x = self.cell_vectors() / float(self.r) + k
        return x @ self.lattice.dual_basis.T

    def offset_index(self, k):
        t = tuple(int(v) for v in np.atleast_1d(k))
        if t not in self._offset_lookup:
            raise KeyError("offset %s not in grid" % (t,))
        return self._offset_lookup[t]

    def compatible(self, other):
        return (
            self.r == other.r
            and self.d == other.d
            and self.lattice.same_as(other.lattice)
            and np.array_equal(self.offsets, other.offsets)
        )

    def __repr__(self):
        return "FrequencyGrid(d=%d, r=%d, offsets=%d)" % (self.d, self.r, self.n_offsets)


def make_grid(lattice, r, offsets):
    return FrequencyGrid(lattice, r, offsets)


# ---------------------------------------------------------------------------
# scenes


class Box:
    """Half-open axis-aligned box prod_i [lo_i, hi_i)."""

    def __init__(self, lo, hi):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise ValueError("box bounds must be vectors of equal length")
        if not np.all(self.lo < self.hi):
            raise ValueError("box needs lo < hi in every coordinate")
        self.d = self.lo.shape[0]

    def contains(self, pts):
        return np.all((pts >= self.lo) & (pts < self.hi), axis=1)

    def bbox(self):
        return self.lo, self.hi

    def __repr__(self):
        if self.d == 1:
            return "interval [%g, %g)" % (self.lo[0], self.hi[0])
        return "box %s x %s" % (self.lo.tolist(), self.hi.tolist())


class Ball:
    """Open euclidean ball |xi - center| < radius."""

    def __init__(self, center, radius):
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.radius = float(radius)
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")
        self.d = self.center.shape[0]

    def contains(self, pts):
        diff = pts - self.center
        return np.einsum("nd,nd->n", diff, diff) < self.radius ** 2

    def bbox(self):
        return self.center - self.radius, self.center + self.radius

    def __repr__(self):
        return "ball(center=%s, radius=%g)" % (self.center.tolist(), self.radius)


def interval(a, b):
    """One-dimensional half-open box [a, b)."""
    return Box([a], [b])


class Scene:
    """Channel definitions: finite sums coeff * chi_primitive, each term
    optionally modulated by exp(-2 pi i <h, xi>) (a time translate by h).
    """

    def __init__(self, d):
        self.d = d
        self.terms = []  # (channel, coeff, primitive, h or None)

    def add(self, channel, coeff, primitive, mod=None):
        if primitive.d != self.d:
            raise ValueError("primitive dimension mismatch")
        if channel < 0 or int(channel) != channel:
            raise ValueError("channel must be a nonnegative integer")
        h = None
        if mod is not None:
            h = np.atleast_1d(np.asarray(mod, dtype=float))
            if h.shape != (self.d,):
                raise ValueError("modulation vector must have dimension %d" % self.d)
        self.terms.append((int(channel), complex(coeff), primitive, h))
        return self

    @property
    def n_channels(self):
        if not self.terms:
            return 0
        return max(t[0] for t in self.terms) + 1


def _offset_hull(primitive, lattice):
    """Conservative integer offset hull a primitive can touch, per dimension.

    The physical bounding box is mapped to lattice coordinates x = A^T xi
    (corner-wise, so rotated lattices get a conservative hull); actual
    membership at each candidate offset is decided later on the real samples.
    """
    lo, hi = primitive.bbox()
    d = lattice.d
    corners = np.array(np.meshgrid(*[(lo[i], hi[i]) for i in range(d)], indexing="ij"))
    corners = corners.reshape(d, -1).T @ lattice.basis  # rows: A^T @ corner
    xlo = corners.min(axis=0)
    xhi = corners.max(axis=0)
    return np.floor(xlo).astype(np.int64), np.floor(xhi).astype(np.int64)


def _validate_band(primitives, lattice, grid):
    """Error if a primitive has grid samples at offsets missing from K.

    Candidates come from the bounding-box hull; only candidates where some
    sample point actually lands inside the primitive count, so half-open
    boundaries aligned with the band edge stay legal.
    """
    torus = None
    for prim in primitives:
        los, his = _offset_hull(prim, lattice)
        ranges = [np.arange(los[i], his[i] + 1) for i in range(lattice.d)]
        mesh = np.meshgrid(*ranges, indexing="ij")
        candidates = np.stack([m.ravel() for m in mesh], axis=1)
        for k in candidates:
            key = tuple(int(v) for v in k)
            if key in grid._offset_lookup:
                continue
            if torus is None:
                torus = grid.torus_points()
            pts = (torus + k) @ lattice.dual_basis.T
            if np.any(prim.contains(pts)):
                raise ValueError(
                    "band too small: %r needs offset %s outside the grid" % (prim, key)
                )


class SpectralDataset:
    """m channels of complex frequency samples over (offset, cell) indices.

    values has shape (m, n_offsets, n_cells), complex128, read-only.
    """

    def __init__(self, lattice, grid, values, check_finite=True):
        values = np.ascontiguousarray(values, dtype=np.complex128)
        if values.ndim != 3 or values.shape[1:] != (grid.n_offsets, grid.n_cells):
            raise ValueError(
                "values must have shape (m, %d, %d)" % (grid.n_offsets, grid.n_cells)
            )
        if check_finite and not np.all(np.isfinite(values)):
            raise ValueError("dataset contains non-finite values")
        self.lattice = lattice
        self.grid = grid
        self.values = values
        self.values.setflags(write=False)

    @property
    def m(self):
        return self.values.shape[0]

    def energy(self, i=None):
        """Squared norms per channel (Plancherel is exact on the grid)."""
        if i is not None:
            v = self.values[i]
            return float((v.real ** 2 + v.imag ** 2).sum() * self.grid.cell_weight)
        out = np.empty(self.m)
        for ch in range(self.m):
            out[ch] = self.energy(ch)
        return out

    def select_channels(self, indices):
        return SpectralDataset(
            self.lattice, self.grid, self.values[list(indices)], check_finite=False
        )

    def __repr__(self):
        return "SpectralDataset(m=%d, grid=%r)" % (self.m, self.grid)


def synthesize(scene, lattice, grid):
    """Sample a scene on the grid.

    Indicator membership is half-open for boxes and open for balls; the
    modulation term multiplies by exp(-2 pi i <h, xi>) at the physical sample
    point xi.  Every primitive must fit inside the covered band, otherwise a
    "band too small" error names the offender.
    """
    if scene.d != grid.d:
        raise ValueError("scene dimension %d does not match grid" % scene.d)
    if not lattice.same_as(grid.lattice):
        raise ValueError("mismatched grid: lattice differs from grid lattice")
    _validate_band([t[2] for t in scene.terms], lattice, grid)
    m = scene.n_channels
    values = np.zeros((m, grid.n_offsets, grid.n_cells), dtype=np.complex128)
    for ki in range(grid.n_offsets):
        pts = None
        for channel, coeff, prim, h in scene.terms:
            if pts is None:
                pts = grid.frequency_points(ki)
            hit = np.nonzero(prim.contains(pts))[0]
            if hit.size == 0:
                continue
            if h is None:
                values[channel, ki, hit] += coeff
            else:
                phase = np.exp(-2j * np.pi * (pts[hit] @ h))
                values[channel, ki, hit] += coeff * phase
    return SpectralDataset(lattice, grid, values, check_finite=False)


class PWMask:
    """Boolean field over (offset, cell): a band-limitation region as a union
    of grid cells."""

    def __init__(self, lattice, grid, bits):
        bits = np.ascontiguousarray(bits, dtype=bool)
        if bits.shape != (grid.n_offsets, grid.n_cells):
            raise ValueError("mask bits must have shape (%d, %d)" % (grid.n_offsets, grid.n_cells))
        self.lattice = lattice
        self.grid = grid
        self.bits = bits
        self.bits.setflags(write=False)

    @property
    def measure(self):
        return float(np.count_nonzero(self.bits)) * self.grid.cell_weight

    @classmethod
    def full(cls, lattice, grid):
        return cls(lattice, grid, np.ones((grid.n_offsets, grid.n_cells), dtype=bool))

    @classmethod
    def empty(cls, lattice, grid):
        return cls(lattice, grid, np.zeros((grid.n_offsets, grid.n_cells), dtype=bool))

    def complement(self):
        return PWMask(self.lattice, self.grid, ~self.bits)

    def __repr__(self):
        return "PWMask(measure=%g)" % self.measure


def pw_mask(region, lattice, grid):
    """Mask of the union of primitives; bit true iff the sample point lies in
    some primitive (same half-open conventions as synthesis)."""
    if not isinstance(region, (list, tuple)):
        region = [region]
    _validate_band(region, lattice, grid)
    bits = np.zeros((grid.n_offsets, grid.n_cells), dtype=bool)
    for ki in range(grid.n_offsets):
        pts = grid.frequency_points(ki)
        for prim in region:
            bits[ki] |= prim.contains(pts)
    return PWMask(lattice, grid, bits)


def _require_same_grid(F, other):
    if not F.grid.compatible(other.grid):
        raise ValueError("mismatched grid between dataset and mask")


def project_pw(F, mask):
    """Zero the samples outside the mask; an orthogonal projection."""
    _require_same_grid(F, mask)
    values = np.where(mask.bits[None, :, :], F.values, 0.0)
    return SpectralDataset(F.lattice, F.grid, values, check_finite=False)


def residual_energy(F, mask):
    """Per-channel energy outside the mask, i.e. the distance squared to the
    band-limited subspace of the mask."""
    _require_same_grid(F, mask)
    off = ~mask.bits
    out = np.empty(F.m)
    for i in range(F.m):
        v = F.values[i]
        out[i] = ((v.real ** 2 + v.imag ** 2) * off).sum() * F.grid.cell_weight
    return out
