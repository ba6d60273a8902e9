"""Sticks, dividing segments, order-parameter grids, and the vectorized
unit-scale scan.

Hand-built configurations pin the geometry; the fast array scan is then
held to exact agreement with the object-level path on sampled output.
"""

import numpy as np
import pytest

import oracles
from hldimer.lattice import Rect
from hldimer.model import DimerConfig, ModelParams, Periodic, Vacant
from hldimer.order import (
    EPSILON0,
    PsiGrid,
    Stick,
    escape_probability,
    percolation_report,
    properly_divides,
    psi_grid,
    stick_edge_masks,
    stick_edges,
    sticks,
    divides,
    unit_order_scan,
    wilson_interval,
)


def canon(w, h):
    return Rect(-1, -1, w, h)


# -- stick construction ----------------------------------------------------------


def test_stick_validation():
    with pytest.raises(ValueError):
        Stick("x", 1, -1, 3)
    with pytest.raises(ValueError):
        Stick("v", 1, 3, 3)
    with pytest.raises(ValueError):
        Stick("v", 1, -1, 2)
    s = Stick("v", 1, -1, 3)
    assert s.n_edges == 2


def test_packed_torus_stick_masks():
    cfg = DimerConfig.packed_vertical(canon(4, 4), Periodic())
    vstick, hstick = stick_edge_masks(cfg)
    assert vstick.all() and not hstick.any()
    runs = sticks(cfg)
    assert len(runs) == 4
    for s, axis in zip(runs, (1, 3, 5, 7)):
        assert (s.orientation, s.axis_d, s.is_cycle) == ("v", axis, True)
        assert s.n_edges == 4
    ph = DimerConfig.packed_horizontal(canon(4, 4), Periodic())
    vs2, hs2 = stick_edge_masks(ph)
    assert hs2.all() and not vs2.any()


def test_single_column_makes_no_stick():
    # a stick needs two adjacent covered columns
    cfg = DimerConfig(canon(4, 4), Vacant(), [(0, 1), (0, 5)])
    vstick, hstick = stick_edge_masks(cfg)
    assert not vstick.any() and not hstick.any()
    assert sticks(cfg) == []


def test_two_by_two_block_stick_geometry():
    # two vertical dimers side by side: one 2-edge vertical stick between
    # their columns
    cfg = DimerConfig(canon(4, 4), Vacant(), [(0, 1), (2, 1)])
    runs = sticks(cfg)
    assert len(runs) == 1
    s = runs[0]
    assert (s.orientation, s.axis_d, s.start_d, s.end_d, s.is_cycle) == \
        ("v", 1, -1, 3, False)
    assert stick_edges(cfg) == {((1, -1), (1, 1)), ((1, 1), (1, 3))}
    # region filtering keeps only dual edges whose midpoint is inside
    assert stick_edges(cfg, Rect(-1, -1, 2, 1)) == {((1, -1), (1, 1))}
    clipped = sticks(cfg, Rect(-1, -1, 2, 1))
    assert len(clipped) == 1 and clipped[0].n_edges == 1


def test_divides_hand_cases():
    s = Stick("v", 1, -1, 3)
    assert divides(s, Rect(-1, -1, 2, 2))
    assert divides(s, Rect(-1, -1, 2, 1))
    assert not divides(s, Rect(1, -1, 2, 2))  # axis on the boundary
    assert not divides(s, Rect(-3, -1, 2, 2))  # axis outside
    assert not divides(s, Rect(-1, -3, 2, 4))  # does not reach the bottom
    h = Stick("h", 1, -1, 7)
    assert divides(h, Rect(-1, -1, 4, 2))
    assert not divides(h, Rect(-1, -1, 4, 1))  # axis is the top boundary


def test_divides_with_torus_wrap():
    wrap = canon(4, 4)
    cycle = Stick("v", 1, -1, 7, is_cycle=True)
    for x0 in (-1, 3, 7):
        rect = Rect(x0, -1, 4, 4)
        # axis offset (1 - x0) mod 8 must be strictly between 0 and 8
        assert divides(cycle, rect, wrap=wrap) == (0 < (1 - x0) % 8 < 8)
    # a non-cycle segment must cover the rect modulo the periods
    seg = Stick("v", 1, 3, 11)
    assert divides(seg, Rect(-1, 3, 2, 4), wrap=wrap)
    assert not divides(seg, Rect(-1, 1, 2, 4), wrap=wrap)


def test_properly_divides_needs_margin():
    # dividing the rect but not its concentric core is not enough
    s = Stick("v", 1, -9, 9)
    rect = Rect(-1, -1, 4, 4)
    assert divides(s, rect)
    assert not properly_divides(s, rect, N=4)  # axis 1 == core boundary
    s2 = Stick("v", 3, -9, 9)
    assert properly_divides(s2, rect, N=4)


# -- psi grids ----------------------------------------------------------------------


def test_psi_grid_packed_torus_fully_on():
    cfg = DimerConfig.packed_vertical(canon(4, 4), Periodic())
    g = psi_grid(cfg, 1, 1, 4, "v")
    assert g.periodic and (g.nx, g.ny) == (4, 4)
    assert g.points == frozenset((x, y) for x in range(4) for y in range(4))
    assert psi_grid(cfg, 1, 1, 4, "h").points == frozenset()
    rep = percolation_report(g)
    assert rep["spans_horizontally"] and rep["spans_vertically"]
    assert rep["largest_fraction"] == 1.0
    assert rep["component_sizes"] == [16]


def test_psi_grid_margin_three_has_no_interior_line():
    cfg = DimerConfig.packed_vertical(canon(6, 6), Periodic())
    assert psi_grid(cfg, 1, 1, 3, "v").points == frozenset()


def test_psi_grid_scale_validation():
    cfg = DimerConfig.packed_vertical(canon(4, 4), Periodic())
    with pytest.raises(ValueError):
        psi_grid(cfg, 1, 1, 2)
    with pytest.raises(ValueError):
        psi_grid(cfg, 0, 1, 4)
    with pytest.raises(ValueError):
        psi_grid(cfg, 3, 1, 4)  # K does not divide W
    with pytest.raises(ValueError):
        psi_grid(cfg, 2, 1, 4)  # K*N exceeds the torus
    with pytest.raises(ValueError):
        psi_grid(cfg, 1, 1, 4, "diag")


def test_psi_grid_window_scan_covers_hull():
    # columns x = 0..7 fully packed with vertical dimers on a vacant 8x8
    # window: vertical edge midpoints (2i, 4j+1); every interior dual line
    # is then an 8-edge stick from -1 to 15
    edges = [(2 * i, 4 * j + 1) for i in range(8) for j in range(4)]
    cfg = DimerConfig(canon(8, 8), Vacant(), edges)
    g = psi_grid(cfg, 1, 1, 4, "v")
    assert not g.periodic
    # the anchor (x, y) needs the core line 2x+3 among the stick axes
    # 1..13 and the rect's y-extent [2y-1, 2y+7] inside [-1, 15]
    want = {(x, y) for x in range(-1, 6) for y in range(0, 5)}
    assert set(g.points) == want
    rep = percolation_report(g)
    assert rep["component_sizes"] == [35]
    assert not rep["spans_horizontally"] and not rep["spans_vertically"]


def test_rect_for_matches_scan_geometry():
    g = PsiGrid(scaleK=2, scaleL=1, N=4, orientation="v",
                points=frozenset(), nx=4, ny=8, periodic=True)
    r = g.rect_for(1, 3)
    assert (r.x0d, r.y0d, r.width, r.height) == (3, 5, 8, 4)


# -- unit-scale vectorized scan -------------------------------------------------------


def test_unit_scan_matches_object_path_on_samples():
    from hldimer.sampler import ChainSpec, run

    combos = [
        (ModelParams(1.0, 0.0, 1.0), "empty", 201),
        (ModelParams(6.0, 0.0, 1.0), "packed_vertical", 202),
        (ModelParams(2.0, -0.5, 1.0), "empty", 203),
    ]
    for params, init, seed in combos:
        spec = ChainSpec(torus=canon(8, 8), params=params, seed=seed,
                         sweeps=40, burn_in=20, measure_every=10,
                         snapshot_every=1, init=init)
        for cfg in run(spec).snapshots:
            occ_h, occ_v = cfg.to_arrays()
            for N in (3, 4, 5):
                scan = unit_order_scan(occ_h, occ_v, N=N)
                vstick, hstick = stick_edge_masks(cfg)
                assert np.array_equal(scan["vstick"], vstick.astype(bool))
                assert np.array_equal(scan["hstick"], hstick.astype(bool))
                ver = psi_grid(cfg, 1, 1, N, "v").points
                hor = psi_grid(cfg, 1, 1, N, "h").points
                assert {(int(x), int(y)) for x, y in zip(*np.nonzero(scan["psi_ver"]))} == set(ver)
                assert {(int(x), int(y)) for x, y in zip(*np.nonzero(scan["psi_hor"]))} == set(hor)
                assert scan["sticks_disjoint"]
                assert scan["psi_excluded"]


def test_unit_scan_detectors_fire_on_corrupted_masks():
    # feed geometrically impossible occupancies straight into the scan:
    # crossing packed rows and columns share dual vertices
    W = H = 8
    occ_h = np.zeros((W, H), dtype=np.uint8)
    occ_v = np.zeros((W, H), dtype=np.uint8)
    occ_v[2:4, :] = 1  # two adjacent packed columns (every cell: impossible)
    occ_h[:, 2:4] = 1  # two adjacent packed rows crossing them
    scan = unit_order_scan(occ_h, occ_v, N=4)
    assert scan["vstick"].any() and scan["hstick"].any()
    assert not scan["sticks_disjoint"]
    assert not scan["psi_excluded"]


def test_unit_scan_validation():
    good = np.zeros((8, 8), dtype=np.uint8)
    with pytest.raises(ValueError):
        unit_order_scan(good, np.zeros((8, 7), dtype=np.uint8))
    with pytest.raises(ValueError):
        unit_order_scan(good, good, N=2)
    with pytest.raises(ValueError):
        unit_order_scan(good, good, N=9)
    with pytest.raises(ValueError):
        unit_order_scan(np.zeros(8, dtype=np.uint8), good)


def test_unit_scan_single_stick_pair_of_columns():
    W = H = 8
    occ_v = np.zeros((W, H), dtype=np.uint8)
    occ_v[2, 0::2] = 1
    occ_v[3, 0::2] = 1
    occ_h = np.zeros((W, H), dtype=np.uint8)
    scan = unit_order_scan(occ_h, occ_v, N=4)
    # the only candidate line for anchor x is the stick between columns
    # 2 and 3, one transverse offset in: x + 1 = 2
    want = {(1, y) for y in range(H)}
    got = {(int(x), int(y)) for x, y in zip(*np.nonzero(scan["psi_ver"]))}
    assert got == want
    assert not scan["psi_hor"].any()


# -- statistics helpers -----------------------------------------------------------------


def test_wilson_interval_matches_oracle():
    for s, n in ((0, 10), (3, 10), (10, 10), (97, 100), (1, 1)):
        lo, hi = wilson_interval(s, n)
        olo, ohi = oracles.wilson_bounds(s, n)
        assert lo == pytest.approx(max(0.0, olo), abs=1e-12)
        assert hi == pytest.approx(min(1.0, ohi), abs=1e-12)
        assert 0.0 <= lo <= hi <= 1.0
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_escape_probability_hand_cases():
    # no blocked points: always escapes; a full ring at distance 1 in the
    # Boxtimes metric traps the origin
    ring = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)
            if (dx, dy) != (0, 0)]
    out = escape_probability([set(), set(ring), {(5, 5)}], (0, 0), 2)
    assert out["n"] == 3 and out["escaped"] == 2
    assert out["estimate"] == pytest.approx(2 / 3)
    assert 0 <= out["lo"] <= out["estimate"] <= out["hi"] <= 1
    # starting on a blocked point never escapes
    trapped = escape_probability([{(0, 0)}], (0, 0), 1)
    assert trapped["escaped"] == 0
    with pytest.raises(ValueError):
        escape_probability([set()], (0, 0), 0)


def test_epsilon0_constant():
    assert EPSILON0 == pytest.approx(1 / 21)
