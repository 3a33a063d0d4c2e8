import numpy as np
import pytest
from hypothesis import given, seed
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pwsis.lattice import make_lattice
from pwsis.spectral import (Ball, Box, PWMask, Scene, SpectralDataset,
                            interval, make_grid, project_pw, pw_mask,
                            residual_energy, synthesize)

ENERGY_SPLIT_TOL = 1e-12

LAT_Z = make_lattice([[1.0]])
K3 = [[-1], [0], [1]]


def _two_bumps(r):
    """Two channels supported on [-1, 0) and [1, 2) with heights (1, 2) and
    (-1, 2); their fibers collide in every cell, so no lattice-invariant
    space of one generator fits both."""
    scene = Scene(1)
    scene.add(0, 1.0, interval(-1.0, 0.0))
    scene.add(0, 2.0, interval(1.0, 2.0))
    scene.add(1, -1.0, interval(-1.0, 0.0))
    scene.add(1, 2.0, interval(1.0, 2.0))
    grid = make_grid(LAT_Z, r, K3)
    return synthesize(scene, LAT_Z, grid), grid


def test_grid_cell_weight_and_sizes():
    grid = make_grid(LAT_Z, 4, K3)
    assert grid.cell_weight == 0.25
    assert grid.n_cells == 4 and grid.n_offsets == 3
    half = make_lattice([[0.5]])
    assert make_grid(half, 4, [[0]]).cell_weight == 0.5


def test_grid_offsets_sorted_and_zero_required():
    grid = make_grid(LAT_Z, 1, [[1], [-1], [0]])
    assert np.array_equal(grid.offsets.ravel(), [-1, 0, 1])
    with pytest.raises(ValueError, match="must contain 0"):
        make_grid(LAT_Z, 1, [[1]])
    with pytest.raises(ValueError, match="positive integer"):
        make_grid(LAT_Z, 0, [[0]])


def test_offset_index_lookup():
    grid = make_grid(LAT_Z, 2, K3)
    assert grid.offset_index([-1]) == 0
    with pytest.raises(KeyError):
        grid.offset_index([2])


def test_box_is_half_open():
    box = interval(0.0, 1.0)
    hits = box.contains(np.array([[0.0], [0.5], [1.0]]))
    assert hits.tolist() == [True, True, False]
    with pytest.raises(ValueError, match="lo < hi"):
        Box([0.0], [0.0])


def test_ball_is_open():
    ball = Ball([0.0, 0.0], 1.0)
    hits = ball.contains(np.array([[0.0, 0.0], [1.0, 0.0], [0.999, 0.0]]))
    assert hits.tolist() == [True, False, True]


def test_synthesize_two_bump_fibers():
    F, grid = _two_bumps(1)
    assert F.m == 2
    assert np.array_equal(F.values[0].ravel(), [1, 0, 2])
    assert np.array_equal(F.values[1].ravel(), [-1, 0, 2])
    assert F.energy(0) == 5.0 and F.energy(1) == 5.0


def test_aligned_box_energy_is_exact():
    grid = make_grid(LAT_Z, 2, [[0]])
    scene = Scene(1).add(0, 1.0, interval(0.0, 0.5))
    F = synthesize(scene, LAT_Z, grid)
    assert F.energy(0) == 0.5


def test_modulation_preserves_energy():
    grid = make_grid(LAT_Z, 8, K3)
    plain = synthesize(Scene(1).add(0, 1.0, interval(-1.0, 1.0)), LAT_Z, grid)
    shifted = synthesize(
        Scene(1).add(0, 1.0, interval(-1.0, 1.0), mod=[0.377]), LAT_Z, grid
    )
    assert shifted.energy(0) == pytest.approx(plain.energy(0), abs=1e-14)
    assert np.all(np.abs(np.abs(shifted.values) - np.abs(plain.values)) < 1e-14)


def test_band_too_small_names_offender():
    grid = make_grid(LAT_Z, 2, K3)
    scene = Scene(1).add(0, 1.0, interval(1.5, 2.5))
    with pytest.raises(ValueError, match="band too small"):
        synthesize(scene, LAT_Z, grid)
    # a box ending exactly on the band edge is fine: the edge is excluded
    scene = Scene(1).add(0, 1.0, interval(1.0, 2.0))
    assert synthesize(scene, LAT_Z, grid).energy(0) == 1.0


def test_scene_channel_validation():
    scene = Scene(1)
    with pytest.raises(ValueError, match="channel"):
        scene.add(-1, 1.0, interval(0.0, 1.0))
    scene.add(2, 1.0j, interval(0.0, 1.0))
    assert scene.n_channels == 3


def test_mask_measure_and_complement():
    grid = make_grid(LAT_Z, 4, K3)
    mask = pw_mask(interval(0.0, 1.0), LAT_Z, grid)
    assert mask.measure == 1.0
    assert mask.complement().measure == 2.0
    assert PWMask.full(LAT_Z, grid).measure == 3.0
    assert PWMask.empty(LAT_Z, grid).measure == 0.0


def test_projection_is_idempotent_and_orthogonal():
    F, grid = _two_bumps(4)
    mask = pw_mask(interval(-1.0, 1.0), LAT_Z, grid)
    P = project_pw(F, mask)
    again = project_pw(P, mask)
    assert np.array_equal(P.values, again.values)
    assert np.all(residual_energy(P, mask) == 0.0)
    split = P.energy() + residual_energy(F, mask)
    assert np.allclose(split, F.energy(), rtol=ENERGY_SPLIT_TOL, atol=0.0)


def test_dataset_validation():
    grid = make_grid(LAT_Z, 2, [[0]])
    with pytest.raises(ValueError, match="values must have shape"):
        SpectralDataset(LAT_Z, grid, np.zeros((1, 2, 3), dtype=complex))
    bad = np.full((1, 1, 2), np.nan, dtype=complex)
    with pytest.raises(ValueError, match="non-finite"):
        SpectralDataset(LAT_Z, grid, bad)


def test_grid_mismatch_rejected():
    F, _ = _two_bumps(2)
    other = make_grid(LAT_Z, 4, K3)
    with pytest.raises(ValueError, match="mismatched grid"):
        project_pw(F, PWMask.full(LAT_Z, other))


@seed(30817)
@given(
    vals=arrays(np.complex128, (2, 3, 4),
                elements=st.complex_numbers(max_magnitude=1e6, allow_nan=False,
                                            allow_infinity=False)),
    bits=arrays(np.bool_, (3, 4)),
)
def test_projection_energy_split(vals, bits):
    grid = make_grid(LAT_Z, 4, K3)
    F = SpectralDataset(LAT_Z, grid, vals)
    mask = PWMask(LAT_Z, grid, bits)
    total = project_pw(F, mask).energy() + residual_energy(F, mask)
    assert np.allclose(total, F.energy(), rtol=ENERGY_SPLIT_TOL, atol=0.0)
