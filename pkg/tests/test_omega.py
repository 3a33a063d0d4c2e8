import itertools

import numpy as np
import pytest
from hypothesis import given, seed
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pwsis.lattice import make_group, make_lattice, orbit_partition
from pwsis.omega import (best_omega, best_omega_invariant, energy_density,
                         omega_duality_check)
from pwsis.spectral import SpectralDataset, make_grid

DUALITY_TOL = 1e-10
BRUTE_TOL = 1e-12

LAT_Z = make_lattice([[1.0]])
K3 = [[-1], [0], [1]]
C4 = make_group([np.array([[0, -1], [1, 0]])])


def _dataset_from_phi(phi):
    """One-channel dataset whose density field is exactly phi (real sqrt)."""
    grid = make_grid(LAT_Z, phi.shape[1], [[0]] if phi.shape[0] == 1 else K3)
    vals = np.sqrt(phi)[None].astype(complex)
    return SpectralDataset(LAT_Z, grid, vals), grid


def test_energy_density_total():
    rng = np.random.default_rng(21)
    grid = make_grid(LAT_Z, 3, K3)
    shape = (2, 3, 3)
    F = SpectralDataset(LAT_Z, grid,
                        rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    assert energy_density(F).total() == pytest.approx(float(F.energy().sum()), rel=1e-14)


def test_best_omega_picks_top_boxes():
    F, grid = _dataset_from_phi(np.array([[9.0, 1.0, 9.0, 4.0]]))
    mask, attained = best_omega(energy_density(F), 2 * grid.cell_weight)
    assert mask.bits.ravel().tolist() == [True, False, True, False]
    assert attained == pytest.approx(18.0 * grid.cell_weight, abs=0)


def test_best_omega_breaks_ties_toward_small_index():
    F, grid = _dataset_from_phi(np.array([[9.0, 9.0, 1.0, 9.0]]))
    mask, _ = best_omega(energy_density(F), 2 * grid.cell_weight)
    assert mask.bits.ravel().tolist() == [True, True, False, False]


def test_best_omega_matches_exhaustive():
    rng = np.random.default_rng(22)
    grid = make_grid(LAT_Z, 2, K3)
    shape = (2, 3, 2)
    F = SpectralDataset(LAT_Z, grid,
                        rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    density = energy_density(F)
    flat = density.phi.ravel()
    w = grid.cell_weight
    for n in range(7):
        _, attained = best_omega(density, n * w)
        brute = max((flat[list(combo)].sum() * w if combo else 0.0)
                    for combo in itertools.combinations(range(6), n))
        assert abs(attained - brute) <= BRUTE_TOL * (1.0 + brute)


def test_best_omega_measure_validation():
    F, grid = _dataset_from_phi(np.array([[1.0, 2.0, 3.0, 4.0]]))
    density = energy_density(F)
    with pytest.raises(ValueError, match="not grid-representable"):
        best_omega(density, 0.3 * grid.cell_weight)
    with pytest.raises(ValueError, match="outside the representable range"):
        best_omega(density, -grid.cell_weight)
    with pytest.raises(ValueError, match="outside the representable range"):
        best_omega(density, 5 * grid.cell_weight)


def _c4_dataset(rng, r=3):
    lat = make_lattice(np.eye(2))
    grid = make_grid(lat, r, [[0, 0]])
    shape = (2, 1, grid.n_cells)
    vals = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return SpectralDataset(lat, grid, vals), grid


def test_invariant_mask_is_group_fixed():
    rng = np.random.default_rng(23)
    F, grid = _c4_dataset(rng)
    mask, attained = best_omega_invariant(F, C4, 5 * grid.cell_weight)
    part = orbit_partition(grid, C4)
    flat = mask.bits.ravel()
    for orbit in part.orbits:
        assert flat[orbit].all() or not flat[orbit].any()
    assert abs(mask.measure - 5 * grid.cell_weight) <= 1e-15
    _, free = best_omega(energy_density(F), 5 * grid.cell_weight)
    assert attained <= free + BRUTE_TOL * (1.0 + free)


def test_invariant_unreachable_measure_lists_neighbors():
    rng = np.random.default_rng(24)
    F, grid = _c4_dataset(rng)
    # orbit sizes on the 3x3 torus under C4 are {1, 4, 4}
    with pytest.raises(ValueError, match="union of whole orbits") as exc:
        best_omega_invariant(F, C4, 2 * grid.cell_weight)
    msg = str(exc.value)
    assert "%.12g" % (1 * grid.cell_weight) in msg
    assert "%.12g" % (4 * grid.cell_weight) in msg


def test_omega_duality_two_routes_agree():
    rng = np.random.default_rng(25)
    for _ in range(10):
        F, grid = _c4_dataset(rng, r=4)
        total = energy_density(F).total()
        for n in (0, 4, 8, 16):
            left, right = omega_duality_check(F, C4, n * grid.cell_weight)
            assert abs(left - right) <= DUALITY_TOL * (1.0 + total)


@seed(50817)
@given(
    phi=arrays(np.float64, (12,), elements=st.floats(0.0, 1e6)),
    n=st.integers(0, 12),
    pick=st.lists(st.integers(0, 11), min_size=0, max_size=12, unique=True),
)
def test_best_omega_dominates_any_equal_measure_mask(phi, n, pick):
    F, grid = _dataset_from_phi(phi[None])
    density = energy_density(F)
    _, attained = best_omega(density, n * grid.cell_weight)
    rival = [i for i in pick[:n]]
    rival_energy = float(density.phi.ravel()[rival].sum() * grid.cell_weight)
    if len(rival) == n:
        assert attained >= rival_energy - BRUTE_TOL * (1.0 + rival_energy)
