"""Optimal band selection: given a measure budget, pick the region of the
frequency grid capturing the most signal energy.

The energy density is piecewise constant on grid boxes of measure
cell_weight, so the optimum is a top-n selection of flat (offset, cell)
indices; the group-invariant variant selects whole orbits via an exact-fill
knapsack over the few distinct orbit sizes.
"""

import math

import numpy as np

from .lattice import orbit_partition
from .spectral import PWMask

__all__ = [
    "DensityField",
    "energy_density",
    "best_omega",
    "best_omega_invariant",
    "omega_duality_check",
]


class DensityField:
    """Summed squared channel magnitudes per (offset, cell) box."""

    def __init__(self, lattice, grid, phi):
        self.lattice = lattice
        self.grid = grid
        self.phi = phi
        self.phi.setflags(write=False)

    def total(self):
        return float(self.phi.sum() * self.grid.cell_weight)


def energy_density(F):
    phi = np.zeros((F.grid.n_offsets, F.grid.n_cells))
    for i in range(F.m):
        v = F.values[i]
        phi += v.real ** 2 + v.imag ** 2
    return DensityField(F.lattice, F.grid, phi)


def _box_count(grid, measure):
    """Validate that the measure is an integer number of grid boxes and
    within range; return the count."""
    w = grid.cell_weight
    q = measure / w
    n = int(round(q))
    if not math.isclose(q, n, rel_tol=1e-9, abs_tol=1e-9):
        raise ValueError(
            "measure not grid-representable: %.12g is not a multiple of the box "
            "measure %.12g; nearest representable are %.12g and %.12g"
            % (measure, w, math.floor(q) * w, math.ceil(q) * w))
    total = grid.n_offsets * grid.n_cells
    if n < 0 or n > total:
        raise ValueError("measure %.12g outside the representable range [0, %.12g]"
                         % (measure, total * w))
    return n


def best_omega(density, measure):
    """Mask of the n highest-density boxes (ties broken toward the smaller
    flat index) and the captured energy; the mask maximizes captured energy
    among all masks of the given measure."""
    grid = density.grid
    n = _box_count(grid, measure)
    flat = density.phi.ravel()
    order = np.argsort(-flat, kind="stable")
    sel = np.sort(order[:n])
    bits = np.zeros(flat.shape[0], dtype=bool)
    bits[sel] = True
    attained = float(flat[sel].sum() * grid.cell_weight)
    return PWMask(density.lattice, grid, bits.reshape(density.phi.shape)), attained


def _exact_fill_knapsack(values, weights, capacity):
    """Maximize sum(values[S]) over S with sum(weights[S]) == capacity.

    Items are grouped by weight; inside one group an optimal exact fill
    always takes a top-value prefix, so the state space is one best value
    per used-capacity level, scanned group by group.  Returns (value,
    selected indices) or None when the capacity is not reachable.
    """
    groups = {}
    for idx, (v, s) in enumerate(zip(values, weights)):
        groups.setdefault(int(s), []).append((-(v), idx))
    states = {0: (0.0, ())}
    for size in sorted(groups):
        items = sorted(groups[size])
        vals = [-nv for nv, _ in items]
        ids = [idx for _, idx in items]
        prefix = [0.0]
        for v in vals:
            prefix.append(prefix[-1] + v)
        new = {}
        for used in sorted(states):
            base_val, base_sel = states[used]
            for j in range(len(vals) + 1):
                u2 = used + j * size
                if u2 > capacity:
                    break
                cand = base_val + prefix[j]
                if u2 not in new or cand > new[u2][0]:
                    new[u2] = (cand, base_sel + tuple(ids[:j]))
        states = new
    if capacity not in states:
        return None, None
    val, sel = states[capacity]
    return val, sorted(sel)


def _reachable_units(sizes, total):
    """Boolean table of box counts expressible as whole-orbit sums.

    Bounded-knapsack reachability, one sliding-window pass per distinct
    orbit size (window OR via cumulative sums), O(total) per size class.
    """
    counts = {}
    for s in sizes:
        counts[int(s)] = counts.get(int(s), 0) + 1
    reach = np.zeros(total + 1, dtype=bool)
    reach[0] = True
    for size, count in sorted(counts.items()):
        nxt = np.zeros_like(reach)
        for res in range(size):
            sl = reach[res::size].astype(np.int64)
            c = np.cumsum(sl)
            width = count + 1
            shifted = np.zeros_like(c)
            if len(c) > width:
                shifted[width:] = c[:-width]
            nxt[res::size] = (c - shifted) > 0
        reach = nxt
    return reach


def best_omega_invariant(F, group, measure):
    """Best group-invariant mask of the given measure: selects whole orbits
    of (offset, cell) boxes maximizing captured energy with the measure met
    exactly; unreachable measures raise with the nearest reachable ones."""
    grid = F.grid
    n = _box_count(grid, measure)
    part = orbit_partition(grid, group)
    phi = energy_density(F).phi.ravel()
    orb_val = np.bincount(part.orbit_index, weights=phi, minlength=len(part.orbits))
    sizes = np.array([len(o) for o in part.orbits], dtype=np.int64)
    best, sel = _exact_fill_knapsack(orb_val, sizes, n)
    if best is None:
        total = int(sizes.sum())
        reach = np.flatnonzero(_reachable_units(sizes, total))
        w = grid.cell_weight
        below = reach[reach < n].max()
        above = reach[reach > n].min()
        raise ValueError(
            "measure %.12g is not reachable as a union of whole orbits; nearest "
            "reachable measures are %.12g and %.12g" % (measure, below * w, above * w))
    bits = np.zeros(phi.shape[0], dtype=bool)
    for oi in sel:
        bits[part.orbits[oi]] = True
    idx = np.flatnonzero(bits)
    attained = float(phi[idx].sum() * grid.cell_weight)
    return PWMask(F.lattice, grid, bits.reshape((grid.n_offsets, grid.n_cells))), attained


def omega_duality_check(F, group, measure):
    """Two routes to the group-invariant optimum: the direct masked integral
    of the density, and an independent selection over one representative box
    per orbit using the orbit-summed density and a 1/|G| measure budget.
    Returns (direct, sectioned); the two agree to rounding."""
    grid = F.grid
    mask, _ = best_omega_invariant(F, group, measure)
    phi = energy_density(F).phi.ravel()
    left = float(phi[np.flatnonzero(mask.bits.ravel())].sum() * grid.cell_weight)

    n = _box_count(grid, measure)
    part = orbit_partition(grid, group)
    n_group = len(group)
    reps = part.representatives
    sizes = part.sizes
    # orbit-summed density at the representative, counted with stabilizer
    # multiplicity: sum of phi over all group images of the rep box
    from .lattice import _cell_permutations, _offset_permutations

    cell_perms = _cell_permutations(grid, group)
    off_perms = _offset_permutations(grid, group)
    pair_perms = (off_perms[:, :, None] * grid.n_cells + cell_perms[:, None, :]).reshape(n_group, -1)
    phi_orbit = phi[pair_perms[:, reps]].sum(axis=0)
    # a representative box occupies measure size * w / |G| of the quotient,
    # so its captured energy is the multiplicity-weighted density times that
    values = phi_orbit * sizes * (grid.cell_weight / n_group)
    best, _ = _exact_fill_knapsack(values, sizes, n)
    assert best is not None
    right = float(best)
    return left, right
