"""Reference configurations with independently known optima.

Each entry synthesizes a small family of band-limited signals, runs the
solvers, and compares against closed-form values.  These are the
end-to-end checks behind `pwsis examples`.
"""

import gc
import math
import time

import numpy as np

from .lattice import make_lattice
from .spectral import Ball, Box, Scene, interval, make_grid, pw_mask, synthesize
from .fibers import gramian_field
from .solver import (best_sis, eigen_field, project_then_solve,
                     refinement_inequality_check, solve_then_project)

__all__ = ["ExampleReport", "Row", "reproduce_example", "EXAMPLE_IDS"]

EXAMPLE_IDS = ("3.6", "6.1", "6.2", "6.3", "6.4", "6.5")


class Row:
    """One checked quantity: computed vs expected under a comparison kind
    ('abs' / 'rel' tolerance, exact 'int', strict 'less' / 'greater')."""

    def __init__(self, label, computed, expected, kind, tol=0.0):
        self.label = label
        self.computed = computed
        self.expected = expected
        self.kind = kind
        self.tol = tol
        if kind == "abs":
            self.ok = abs(computed - expected) <= tol
        elif kind == "rel":
            self.ok = abs(computed - expected) <= tol * abs(expected)
        elif kind == "int":
            self.ok = int(computed) == int(expected)
        elif kind == "less":
            self.ok = computed < expected
        elif kind == "greater":
            self.ok = computed > expected
        else:
            raise ValueError("unknown comparison kind %r" % kind)


class ExampleReport:
    def __init__(self, example_id, rows, notes=(), elapsed=0.0):
        self.example_id = example_id
        self.rows = rows
        self.notes = list(notes)
        self.elapsed = elapsed

    @property
    def passed(self):
        return all(row.ok for row in self.rows)


def _solve_once(F, ell):
    """Optimal error at length ell and the exact subspace length, off one
    Gramian pass."""
    G = gramian_field(F)
    ef = eigen_field(G)
    if ef.n_active == 0:
        return 0.0, 0
    density = ef.eigenvalues[:, ell:].sum(axis=1) if ell < ef.m else np.zeros(ef.n_active)
    total = float(density.sum() * F.grid.cell_weight)
    ranks = (ef.eigenvalues > 1e-9 * ef.trace[:, None]).sum(axis=1)
    return total, int(ranks.max())


def _ex_one_generator_two_bumps(r):
    """Two channels split between a low band and a doubled high band; one
    generator must drop one of them, and band-limiting the generator first
    beats clipping the unconstrained optimum."""
    lat = make_lattice([[1.0]])
    grid = make_grid(lat, r, [[-1], [0], [1]])
    sc = Scene(1)
    sc.add(0, 1, interval(-1, 0)).add(0, 2, interval(1, 2))
    sc.add(1, -1, interval(-1, 0)).add(1, 2, interval(1, 2))
    F = synthesize(sc, lat, grid)
    _, rep = best_sis(F, 1)
    mask = pw_mask(interval(-1, 1), lat, grid)
    _, rep_p = project_then_solve(F, mask, 1)
    _, rep_s = solve_then_project(F, mask, 1)
    rows = [
        Row("unconstrained optimal error, one generator", rep.total_error, 2.0, "abs", 1e-10),
        Row("project-then-solve total error", rep_p.total_error, 8.0, "abs", 1e-10),
        Row("in-band optimum after projecting", rep_p.projected_error, 0.0, "abs", 1e-10),
        Row("energy outside the band", rep_p.band_residual, 8.0, "abs", 1e-10),
        Row("solve-then-project total error", rep_s.total_error, 10.0, "abs", 1e-10),
    ]
    notes = ["The unconstrained generator lives entirely in the high band, so "
             "clipping it to the band leaves the zero space; projecting the data "
             "first recovers the low band exactly."]
    return rows, notes


def _ex_refine_no_gain(r):
    """Two disjoint half-bands: one generator suffices already, so refining
    the lattice cannot help."""
    if r % 2:
        raise ValueError("resolution must be even for this configuration")
    lat = make_lattice([[1.0]])
    grid = make_grid(lat, r, [[0]])
    sc = Scene(1)
    sc.add(0, 1, interval(0.0, 0.5))
    sc.add(1, 1, interval(0.5, 1.0))
    F = synthesize(sc, lat, grid)
    fine, coarse = refinement_inequality_check(F, 2, 1)
    rows = [
        Row("optimal error on the base lattice", coarse, 0.0, "abs", 1e-10),
        Row("optimal error on the half-step lattice", fine, 0.0, "abs", 1e-10),
    ]
    return rows, []


def _ex_refine_gain(r):
    """Two unit bands one apart: on the base lattice they collide on the
    same fibers and one generator loses half the energy; the half-step
    lattice separates them."""
    if r % 2:
        raise ValueError("resolution must be even for this configuration")
    lat = make_lattice([[1.0]])
    grid = make_grid(lat, r, [[0], [1]])
    sc = Scene(1)
    sc.add(0, 1, interval(0.0, 0.5))
    sc.add(1, 1, interval(1.0, 1.5))
    F = synthesize(sc, lat, grid)
    fine, coarse = refinement_inequality_check(F, 2, 1)
    rows = [
        Row("optimal error on the base lattice", coarse, 0.5, "abs", 1e-10),
        Row("optimal error on the half-step lattice", fine, 0.0, "abs", 1e-10),
    ]
    return rows, []


def _ex_incommensurate_shift(r, h=377.0 / 610.0):
    """A full-band signal and its translate by a step h incommensurate with
    the base lattice: the h-step lattice holds both in one generator, the
    base lattice cannot.  The translate enters as a modulation of the
    spectrum, and on the base lattice the shortfall has the closed form
    2 - 2|cos(pi h)| independent of the resolution."""
    sc = Scene(1)
    sc.add(0, 1, interval(-1.0, 1.0))
    sc.add(1, 1, interval(-1.0, 1.0), mod=[h])

    lat1 = make_lattice([[1.0]])
    grid1 = make_grid(lat1, r, [[-1], [0]])
    F1 = synthesize(sc, lat1, grid1)
    e1, _ = _solve_once(F1, 1)

    lat2 = make_lattice([[h]])
    grid2 = make_grid(lat2, r, [[-1], [0]])
    F2 = synthesize(sc, lat2, grid2)
    e2, _ = _solve_once(F2, 1)

    closed = 2.0 - 2.0 * abs(math.cos(math.pi * h))
    rows = [
        Row("optimal error on the step-h lattice", e2, 0.0, "abs", 1e-10),
        Row("optimal error on the base lattice", e1, closed, "abs", 1e-10),
        Row("base-lattice error exceeds 1e-3", e1, 1e-3, "greater"),
    ]
    notes = ["The incommensurate step is approximated by the rational 377/610; "
             "the gap between the two lattices persists for every resolution."]
    return rows, notes


def _rot30():
    c, s = math.cos(math.pi / 6.0), math.sin(math.pi / 6.0)
    return np.array([[c, -s], [s, c]])


def _square_offsets(b):
    side = np.arange(-b, b + 1)
    return np.stack(np.meshgrid(side, side, indexing="ij"), axis=-1).reshape(-1, 2)


def _ex_rotated_balls(r):
    """Two unit-coefficient balls a rotated-lattice step apart: the square
    lattice separates them into disjoint fibers, the rotated lattice stacks
    them onto the same cells."""
    R = _rot30()
    c1 = np.array([2.0 / 25.0, 3.0 / 10.0])
    gamma = R @ np.array([1.0, 0.0])
    sc = Scene(2)
    sc.add(0, 1, Ball(c1, 1.0 / 25.0))
    sc.add(1, 1, Ball(c1 + gamma, 1.0 / 25.0))
    K = _square_offsets(2)

    lat1 = make_lattice(np.eye(2))
    F1 = synthesize(sc, lat1, make_grid(lat1, r, K))
    e1, len1 = _solve_once(F1, 1)
    del F1
    gc.collect()

    lat2 = make_lattice(R)
    F2 = synthesize(sc, lat2, make_grid(lat2, r, K))
    e2, len2 = _solve_once(F2, 1)
    del F2
    gc.collect()

    disc = math.pi / 625.0
    rows = [
        Row("optimal error on the square lattice", e1, 0.0, "abs", 1e-10),
        Row("optimal error on the rotated lattice", e2, disc, "rel", 1e-2),
        Row("subspace length, square lattice", len1, 1, "int"),
        Row("subspace length, rotated lattice", len2, 2, "int"),
    ]
    notes = ["The separation step equals one rotated-lattice unit, so on the "
             "rotated lattice both balls land on the same cells and one "
             "generator must leave a full ball's energy behind: the two optima "
             "genuinely differ."]
    return rows, notes


def _ex_rotated_beats_square(r, eps):
    """Five channels mixing three near-collinear balls with two boxes: the
    square lattice needs fewer generators yet leaves more energy than the
    rotated lattice does with one generator."""
    if r % 25:
        raise ValueError("resolution must be a multiple of 25 to align the box "
                         "boundaries with cell corners")
    R = _rot30()
    c1 = np.array([2.0 / 25.0, 3.0 / 10.0])
    gamma = R @ np.array([1.0, 0.0])
    rad = 1.0 / 25.0
    q_lo = np.array([0.2, 0.04])
    q_hi = np.array([0.24, 0.08])
    sc = Scene(2)
    sc.add(0, 1, Ball(c1, rad))
    sc.add(1, 1, Ball(c1, rad))
    sc.add(1, eps, Ball(c1 + gamma, rad))
    sc.add(2, 1, Ball(c1, rad))
    sc.add(2, eps, Ball(c1 + 2 * gamma, rad))
    sc.add(3, 1, Box(q_lo, q_hi))
    sc.add(4, 1, Box(q_lo + [1, 0], q_hi + [1, 0]))
    K = _square_offsets(2)

    lat1 = make_lattice(np.eye(2))
    F1 = synthesize(sc, lat1, make_grid(lat1, r, K))
    e1, len1 = _solve_once(F1, 1)
    del F1
    gc.collect()

    lat2 = make_lattice(R)
    F2 = synthesize(sc, lat2, make_grid(lat2, r, K))
    e2, len2 = _solve_once(F2, 1)
    del F2
    gc.collect()

    c = 3.0 + eps * eps
    mu_minus = (c - math.sqrt(c * c - 4.0 * eps * eps)) / 2.0
    expected2 = (mu_minus + eps * eps) * math.pi / 625.0
    rows = [
        Row("optimal error on the square lattice", e1, 1.0 / 625.0, "abs", 1e-10),
        Row("optimal error on the rotated lattice", e2, expected2, "rel", 2e-2),
        Row("rotated beats square despite longer length", e2, e1, "less"),
        Row("subspace length, square lattice", len1, 2, "int"),
        Row("subspace length, rotated lattice", len2, 3, "int"),
    ]
    notes = ["On the square lattice the two boxes collide on the same cells "
             "(cost 1/625) while the balls separate; on the rotated lattice the "
             "three balls stack but are nearly collinear, costing only about "
             "%.6g." % expected2]
    return rows, notes


_DEFAULT_R = {"3.6": 4, "6.1": 4, "6.2": 4, "6.3": 8, "6.4": 1000, "6.5": 1000}


def reproduce_example(example_id, r=None, eps=0.1):
    """Run one reference configuration and return its checked report.

    r overrides the default resolution; eps scales the near-collinear
    perturbation in configuration 6.5.
    """
    example_id = str(example_id)
    if example_id not in EXAMPLE_IDS:
        raise ValueError("unknown example id %r (have %s)" % (example_id, ", ".join(EXAMPLE_IDS)))
    if r is None:
        r = _DEFAULT_R[example_id]
    start = time.perf_counter()
    if example_id == "3.6":
        rows, notes = _ex_one_generator_two_bumps(r)
    elif example_id == "6.1":
        rows, notes = _ex_refine_no_gain(r)
    elif example_id == "6.2":
        rows, notes = _ex_refine_gain(r)
    elif example_id == "6.3":
        rows, notes = _ex_incommensurate_shift(r)
    elif example_id == "6.4":
        rows, notes = _ex_rotated_balls(r)
    else:
        rows, notes = _ex_rotated_beats_square(r, eps)
    elapsed = time.perf_counter() - start
    return ExampleReport(example_id, rows, notes, elapsed)
