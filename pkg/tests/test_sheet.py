import math

import numpy as np
import pytest

from morsecells import (KernelDensity, PointCloud, SheetParams, WebSheet,
                        initial_sheet, relax_sheet, sheet_density, sheet_force,
                        tangent_space)
from morsecells.errors import ConstructionError, InvalidInputError

from conftest import ConstantField, LinearField


def circle_loop(count=40, radius=1.0, dim=2):
    theta = np.linspace(0, 2 * math.pi, count, endpoint=False)
    loop = np.zeros((count, dim))
    loop[:, 0] = radius * np.cos(theta)
    loop[:, 1] = radius * np.sin(theta)
    return loop


# ---------------------------------------------------------------------------
# initial_sheet

def test_initial_sheet_unit_circle_geometry():
    sheet = initial_sheet(circle_loop(), rings=10, nodes_per_ring=20)
    assert sheet.positions.shape == (1 + 10 * 20, 2)
    assert sheet.positions[0] == pytest.approx([0.0, 0.0], abs=1e-12)
    # ring j sits at radius j/10
    for j in range(1, 11):
        ring = sheet.positions[1 + (j - 1) * 20: 1 + j * 20]
        assert np.linalg.norm(ring, axis=1) == pytest.approx(
            np.full(20, j / 10), abs=1e-9)


def test_initial_sheet_boundary_is_outer_ring_only():
    sheet = initial_sheet(circle_loop(), rings=4, nodes_per_ring=8)
    assert sheet.boundary.sum() == 8
    assert sheet.boundary[1 + 3 * 8:].all()
    assert not sheet.boundary[: 1 + 3 * 8].any()


def test_initial_sheet_edge_counts():
    rings, npr = 5, 12
    sheet = initial_sheet(circle_loop(), rings=rings, nodes_per_ring=npr)
    # per ring: npr ring edges; spokes between adjacent rings: (rings-1)*npr;
    # center fan: npr
    assert len(sheet.edges) == rings * npr + (rings - 1) * npr + npr


def test_initial_sheet_interior_degrees():
    sheet = initial_sheet(circle_loop(), rings=6, nodes_per_ring=10)
    adj = sheet.neighbor_lists()
    assert len(adj[0]) == 10  # center joins the whole innermost ring
    for alpha in range(1, len(adj)):
        if not sheet.boundary[alpha]:
            assert len(adj[alpha]) == 4


def test_initial_sheet_closed_loop_duplicate_endpoint_ok():
    loop = circle_loop(12)
    closed = np.vstack([loop, loop[:1]])
    a = initial_sheet(loop, rings=3, nodes_per_ring=6)
    b = initial_sheet(closed, rings=3, nodes_per_ring=6)
    assert np.array_equal(a.positions, b.positions)


def test_initial_sheet_degenerate_loop_raises():
    with pytest.raises(ConstructionError):
        initial_sheet(np.zeros((5, 2)))


# ---------------------------------------------------------------------------
# tangent_space

def test_tangent_space_planar_neighbors():
    sheet = initial_sheet(circle_loop(dim=3), rings=3, nodes_per_ring=8)
    basis, deficient = tangent_space(sheet, 1 + 8)  # middle-ring node
    assert basis.shape == (2, 3)
    assert not deficient
    # neighbors lie in the z=0 plane, so the basis spans it
    assert np.abs(basis[:, 2]).max() < 1e-12
    assert basis @ basis.T == pytest.approx(np.eye(2), abs=1e-12)


def test_tangent_space_collinear_neighbors_deficient():
    positions = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [2.0, 0.0]])
    sheet = WebSheet(positions=positions, edges=((0, 1), (0, 2), (0, 3)),
                     boundary=np.array([False, True, True, True]),
                     rings=1, nodes_per_ring=3)
    basis, deficient = tangent_space(sheet, 0)
    assert deficient
    assert basis.shape == (1, 2)
    assert np.abs(basis[0]) == pytest.approx([1.0, 0.0])


def test_tangent_space_plane_in_five_dimensions(rng):
    # neighbors on a random 2-plane in R^5: reconstructed basis must span it
    q, _ = np.linalg.qr(rng.normal(size=(5, 2)))
    plane = q.T  # (2, 5) orthonormal
    theta = np.linspace(0, 2 * math.pi, 6, endpoint=False)
    coords = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    neighbors = coords @ plane
    positions = np.vstack([np.zeros(5), neighbors])
    edges = tuple((0, i) for i in range(1, 7))
    sheet = WebSheet(positions=positions, edges=edges,
                     boundary=np.array([False] + [True] * 6),
                     rings=1, nodes_per_ring=6)
    basis, deficient = tangent_space(sheet, 0)
    assert not deficient
    # residual of projecting the true plane onto the recovered basis
    residual = plane - (plane @ basis.T) @ basis
    assert np.abs(residual).max() < 1e-10


def test_tangent_space_too_few_neighbors_raises():
    positions = np.array([[0.0, 0.0], [1.0, 0.0]])
    sheet = WebSheet(positions=positions, edges=((0, 1),),
                     boundary=np.array([False, True]), rings=1, nodes_per_ring=3)
    with pytest.raises(InvalidInputError):
        tangent_space(sheet, 0)


# ---------------------------------------------------------------------------
# sheet_force

def test_sheet_force_constant_field_is_spring_only():
    sheet = initial_sheet(circle_loop(), rings=3, nodes_per_ring=8)
    field = ConstantField(2)
    adj = sheet.neighbor_lists()
    for alpha in np.flatnonzero(~sheet.boundary):
        expected = (sheet.positions[adj[alpha]] - sheet.positions[alpha]).sum(axis=0)
        assert sheet_force(field, sheet, alpha, 1.0) == pytest.approx(expected)


def test_sheet_force_linear_field_perpendicular_component():
    # planar web in R^3 with gradient along z: g_perp = g, so force gains c*w
    sheet = initial_sheet(circle_loop(dim=3), rings=3, nodes_per_ring=8)
    w = np.array([0.0, 0.0, 2.0])
    field = LinearField(w)
    adj = sheet.neighbor_lists()
    alpha = 1 + 8  # middle-ring interior node
    spring = (sheet.positions[adj[alpha]] - sheet.positions[alpha]).sum(axis=0)
    c = 1.5
    assert sheet_force(field, sheet, alpha, c) == pytest.approx(spring + c * w)


def test_sheet_force_in_plane_gradient_removed():
    # gradient parallel to the web plane projects away entirely
    sheet = initial_sheet(circle_loop(dim=3), rings=3, nodes_per_ring=8)
    field = LinearField([1.0, -2.0, 0.0])
    adj = sheet.neighbor_lists()
    alpha = 1 + 8
    spring = (sheet.positions[adj[alpha]] - sheet.positions[alpha]).sum(axis=0)
    assert sheet_force(field, sheet, alpha, 3.0) == pytest.approx(spring, abs=1e-12)


def test_sheet_force_boundary_node_raises():
    sheet = initial_sheet(circle_loop(), rings=2, nodes_per_ring=6)
    with pytest.raises(InvalidInputError):
        sheet_force(ConstantField(2), sheet, int(np.flatnonzero(sheet.boundary)[0]), 1.0)


# ---------------------------------------------------------------------------
# relax_sheet

def test_relax_sheet_constant_field_reaches_harmonic_equilibrium():
    sheet = initial_sheet(circle_loop(), rings=5, nodes_per_ring=12)
    out = relax_sheet(ConstantField(2), sheet,
                      SheetParams(rings=5, nodes_per_ring=12,
                                  gradient_constant=1.0, tolerance=1e-6))
    assert out is not None
    adj = out.neighbor_lists()
    for alpha in np.flatnonzero(~out.boundary):
        avg = out.positions[adj[alpha]].mean(axis=0)
        # near-equilibrium: each interior node sits at its neighbor average
        assert np.linalg.norm(out.positions[alpha] - avg) < 1e-3


def test_relax_sheet_planar_input_stays_planar_in_three_dimensions():
    sheet = initial_sheet(circle_loop(dim=3), rings=4, nodes_per_ring=10)
    field = KernelDensity(PointCloud([[0.0, 0.0, 0.0]]), 1.0)
    out = relax_sheet(field, sheet, SheetParams(rings=4, nodes_per_ring=10))
    assert out is not None
    assert np.abs(out.positions[:, 2]).max() <= 1e-9


def test_relax_sheet_boundary_bitwise_untouched():
    sheet = initial_sheet(circle_loop(), rings=4, nodes_per_ring=10)
    field = KernelDensity(PointCloud([[0.3, -0.2]]), 0.8)
    out = relax_sheet(field, sheet, SheetParams(rings=4, nodes_per_ring=10))
    assert out is not None
    idx = np.flatnonzero(sheet.boundary)
    assert np.array_equal(out.positions[idx], sheet.positions[idx])


def test_relax_sheet_max_steps_returns_none():
    sheet = initial_sheet(circle_loop(), rings=3, nodes_per_ring=8)
    field = KernelDensity(PointCloud([[0.0, 0.0]]), 1.0)
    out = relax_sheet(field, sheet,
                      SheetParams(rings=3, nodes_per_ring=8,
                                  tolerance=1e-300, max_steps=5))
    assert out is None


def test_relax_sheet_two_gaussian_density_floor():
    # web spanning a loop around both modes: min density on the relaxed sheet
    # cannot exceed the density at either mode
    pts = PointCloud([[-1.5, 0.0], [1.5, 0.0]])
    field = KernelDensity(pts, 1.0)
    sheet = initial_sheet(circle_loop(radius=2.5), rings=5, nodes_per_ring=16)
    out = relax_sheet(field, sheet, SheetParams(rings=5, nodes_per_ring=16))
    assert out is not None
    d = sheet_density(field, out)
    assert d <= field.value(np.array([-1.5, 0.0])) + 1e-12
    assert d == pytest.approx(field.value_batch(out.positions).min())


# ---------------------------------------------------------------------------
# batched force path agrees with the single-node reference

def test_batched_forces_match_single_node(rng):
    from morsecells.sheet import _degree_groups, _interior_forces
    sheet = initial_sheet(circle_loop(dim=3), rings=4, nodes_per_ring=9)
    positions = sheet.positions + 0.05 * rng.normal(size=sheet.positions.shape)
    jittered = WebSheet(positions=positions, edges=sheet.edges,
                        boundary=sheet.boundary, rings=sheet.rings,
                        nodes_per_ring=sheet.nodes_per_ring)
    field = KernelDensity(PointCloud(rng.normal(size=(20, 3))), 0.9)
    adj = jittered.neighbor_lists()
    interior = np.flatnonzero(~jittered.boundary)
    groups = _degree_groups(adj, interior)
    batched = _interior_forces(field, positions, interior, groups, 2.0)
    for row, alpha in enumerate(interior):
        single = sheet_force(field, jittered, int(alpha), 2.0)
        assert batched[row] == pytest.approx(single, abs=1e-10)
