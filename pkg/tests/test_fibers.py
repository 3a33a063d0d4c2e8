import numpy as np
import pytest

from pwsis.fibers import (dilation_transport, fiber, gramian_covariance_check,
                          gramian_field, membership_test, regrid_to_lattice,
                          symmetrize)
from pwsis.lattice import make_group, make_lattice
from pwsis.solver import best_sis
from pwsis.spectral import (Scene, SpectralDataset, interval, make_grid,
                            synthesize)

HERMITIAN_TOL = 1e-12
COVARIANCE_TOL = 1e-10
REGRID_TOL = 1e-9

LAT_Z = make_lattice([[1.0]])
K3 = [[-1], [0], [1]]


def _two_bumps(r):
    scene = Scene(1)
    scene.add(0, 1.0, interval(-1.0, 0.0))
    scene.add(0, 2.0, interval(1.0, 2.0))
    scene.add(1, -1.0, interval(-1.0, 0.0))
    scene.add(1, 2.0, interval(1.0, 2.0))
    grid = make_grid(LAT_Z, r, K3)
    return synthesize(scene, LAT_Z, grid), grid


def _random_dataset(rng, m=2, d=1, r=3, n_offsets=3):
    lat = make_lattice(np.eye(d) + 0.1 * rng.standard_normal((d, d)))
    ks = rng.integers(-2, 3, size=(n_offsets, d))
    ks[0] = 0
    grid = make_grid(lat, r, ks)
    shape = (m, grid.n_offsets, grid.n_cells)
    values = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return SpectralDataset(lat, grid, values)


def test_fiber_extraction():
    F, _ = _two_bumps(1)
    fib = fiber(F, 0, 0)
    assert np.array_equal(fib.entries, [1, 0, 2])
    assert fib.norm() == pytest.approx(np.sqrt(5.0))
    with pytest.raises(IndexError):
        fiber(F, 5, 0)
    with pytest.raises(IndexError):
        fiber(F, 0, 9)


def test_gramian_hand_value():
    F, _ = _two_bumps(1)
    G = gramian_field(F)
    assert np.array_equal(G.dense_at(0), [[5.0, 3.0], [3.0, 5.0]])
    lam = np.linalg.eigvalsh(G.dense_at(0))
    assert np.allclose(lam, [2.0, 8.0])


def test_gramian_skips_dead_cells():
    grid = make_grid(LAT_Z, 2, [[0]])
    values = np.zeros((1, 1, 2), dtype=complex)
    values[0, 0, 1] = 3.0
    G = gramian_field(SpectralDataset(LAT_Z, grid, values))
    assert np.array_equal(G.active_idx, [1])
    assert G.n_active == 1
    assert np.array_equal(G.dense_at(0), [[0.0]])
    assert np.array_equal(G.dense_at(1), [[9.0]])


def test_gramian_is_hermitian_psd():
    rng = np.random.default_rng(5)
    for _ in range(20):
        F = _random_dataset(rng, m=3)
        G = gramian_field(F)
        for mat in G.mats:
            assert np.max(np.abs(mat - mat.conj().T)) <= HERMITIAN_TOL * G.trace.max()
            assert np.linalg.eigvalsh(mat).min() >= -HERMITIAN_TOL * G.trace.max()


def test_gramian_debug_hook(monkeypatch):
    rng = np.random.default_rng(6)
    F = _random_dataset(rng)
    monkeypatch.setenv("PWSIS_BUG_GRAMIAN_NO_CONJ", "1")
    broken = gramian_field(F)
    dev = max(float(np.max(np.abs(m - m.conj().T))) for m in broken.mats)
    assert dev > 1e-6
    monkeypatch.delenv("PWSIS_BUG_GRAMIAN_NO_CONJ")
    good = gramian_field(F)
    dev = max(float(np.max(np.abs(m - m.conj().T))) for m in good.mats)
    assert dev <= HERMITIAN_TOL * good.trace.max()


def test_membership_accepts_scaled_copies():
    grid = make_grid(LAT_Z, 2, K3)
    base = np.zeros((2, 3, 2), dtype=complex)
    base[0] = [[1.0, 2.0], [0.5j, 0.0], [1.0, -1.0]]
    # channel 1 rescales each fiber of channel 0 by wildly different factors
    base[1] = base[0] * np.array([1e8, 1e-8])
    F = SpectralDataset(LAT_Z, grid, base)
    assert membership_test(F, 0, F, 0)
    assert membership_test(F, 1, F, 0)
    assert membership_test(F, 0, F, 1)


def test_membership_rejects_independent_and_unsupported():
    grid = make_grid(LAT_Z, 1, K3)
    vals = np.zeros((3, 3, 1), dtype=complex)
    vals[0, :, 0] = [1.0, 0.0, 2.0]
    vals[1, :, 0] = [-1.0, 0.0, 2.0]
    vals[2, :, 0] = 0.0
    F = SpectralDataset(LAT_Z, grid, vals)
    assert not membership_test(F, 0, F, 1)
    # zero generator fiber admits only the zero fiber
    assert not membership_test(F, 0, F, 2)
    assert membership_test(F, 2, F, 0)
    other = SpectralDataset(LAT_Z, make_grid(LAT_Z, 2, K3),
                            np.zeros((1, 3, 2), dtype=complex))
    with pytest.raises(ValueError, match="mismatched grid"):
        membership_test(F, 0, other, 0)


def test_symmetrize_expands_channels():
    rng = np.random.default_rng(7)
    lat = make_lattice(np.eye(2))
    grid = make_grid(lat, 2, [[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1]])
    shape = (2, grid.n_offsets, grid.n_cells)
    F = SpectralDataset(lat, grid, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    group = make_group([np.array([[0, -1], [1, 0]])])
    S = symmetrize(F, group)
    assert S.m == 8
    assert np.array_equal(S.values[:2], F.values)
    for g in range(4):
        for i in range(2):
            # each channel is an exact index permutation of its source
            assert np.array_equal(np.sort_complex(S.values[2 * g + i].ravel()),
                                  np.sort_complex(F.values[i].ravel()))


def test_dilation_transport_is_unitary():
    rng = np.random.default_rng(8)
    F = _random_dataset(rng, d=2, r=2)
    A = np.array([[2.0, 1.0], [0.0, 1.5]])
    D = dilation_transport(F, A)
    assert np.allclose(D.lattice.basis, np.linalg.inv(A) @ F.lattice.basis)
    assert np.allclose(D.energy(), F.energy(), rtol=1e-12)


def test_gramian_covariance_small():
    rng = np.random.default_rng(9)
    for _ in range(10):
        F = _random_dataset(rng, d=2, r=2)
        A = np.eye(2) + 0.3 * rng.standard_normal((2, 2))
        if abs(np.linalg.det(A)) < 0.3:
            continue
        scale = float(gramian_field(F).trace.max())
        assert gramian_covariance_check(F, A) <= COVARIANCE_TOL * scale


def test_regrid_same_lattice_is_identity():
    F, _ = _two_bumps(2)
    assert regrid_to_lattice(F, LAT_Z) is F


def test_regrid_preserves_samples_not_optimum():
    F, _ = _two_bumps(2)
    # the frequency samples carry over unchanged, but the one-generator
    # optimum depends on the lattice: the bump pair clashes inside a single
    # fiber on Z/2 and 2Z yet partially decouples on (2/3)Z
    cases = ((make_lattice([[0.5]]), 2.0), (make_lattice([[2.0]]), 2.0),
             (make_lattice([[2.0 / 3.0]]), 1.0))
    for target, expected in cases:
        R = regrid_to_lattice(F, target)
        assert R.lattice.same_as(target)
        assert np.allclose(R.energy(), F.energy(), rtol=1e-12)
        nz = R.values[np.abs(R.values) > 0]
        nz0 = F.values[np.abs(F.values) > 0]
        assert np.array_equal(np.sort_complex(nz), np.sort_complex(nz0))
        _, rep = best_sis(R, 1)
        assert abs(rep.total_error - expected) <= REGRID_TOL


def test_regrid_round_trip_keeps_error():
    F, _ = _two_bumps(4)
    back = regrid_to_lattice(regrid_to_lattice(F, make_lattice([[0.5]])), LAT_Z)
    assert np.allclose(back.energy(), F.energy(), rtol=1e-12)
    _, rep = best_sis(back, 1)
    _, rep0 = best_sis(F, 1)
    assert abs(rep.total_error - rep0.total_error) <= REGRID_TOL * (1.0 + rep0.total_error)


def test_regrid_rejects_incommensurable():
    F, _ = _two_bumps(2)
    with pytest.raises(ValueError, match="integer resolution"):
        regrid_to_lattice(F, make_lattice([[np.pi]]))
    with pytest.raises(ValueError, match="does not match the dataset"):
        regrid_to_lattice(F, make_lattice(np.eye(2)))
    rng = np.random.default_rng(10)
    F2 = _random_dataset(rng, d=2, r=2)
    th = np.pi / 6.0
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    with pytest.raises(ValueError, match="not integer"):
        regrid_to_lattice(F2, make_lattice(rot @ F2.lattice.basis))
