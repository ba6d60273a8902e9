"""Mesoscopic orientation order: sticks, divided rectangles, Psi grids.

A dual-lattice edge is a stick edge when both endpoints of the primal
edge it bisects are covered by dimers of the dual edge's own orientation;
a stick is a maximal straight run of stick edges.  Sticks of a given
orientation that properly divide a grid of mesoscopic rectangles define
the Psi point sets whose percolation signals orientational order.

Doubled coordinates throughout: a vertical stick lives on a dual line
x = axis_d (odd) and spans [start_d, end_d]; each dual edge covers 2
doubled units, so a stick has (end_d - start_d) / 2 edges.  On the torus
a run may close into a cycle; it is kept unwrapped (end_d = start_d +
2 * side) and flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import Rect, components
from .model import DimerConfig

# recorded threshold for strong-percolation annotations in reports; no
# bound using it is certified here
EPSILON0 = 1.0 / 21.0


@dataclass(frozen=True)
class Stick:
    """Maximal straight run of stick edges on one dual line."""

    orientation: str  # "v" or "h"
    axis_d: int       # doubled coordinate of the dual line (odd)
    start_d: int      # doubled coordinate along the line (odd)
    end_d: int
    is_cycle: bool = False

    def __post_init__(self):
        if self.orientation not in ("v", "h"):
            raise ValueError("orientation must be 'v' or 'h'")
        if self.end_d <= self.start_d or (self.end_d - self.start_d) % 2:
            raise ValueError("stick extent must be a positive run of dual edges")

    @property
    def n_edges(self) -> int:
        return (self.end_d - self.start_d) // 2


def _occupancy(cfg: DimerConfig):
    occ_h, occ_v = cfg.to_arrays()
    return occ_h.astype(bool), occ_v.astype(bool)


def stick_edge_masks(cfg: DimerConfig):
    """Boolean masks (vstick, hstick).

    vstick[i, j] marks the vertical dual edge bisecting the horizontal
    primal edge from vertex (i, j) to (i+1, j); hstick[i, j] marks the
    horizontal dual edge bisecting the vertical primal edge from (i, j)
    to (i, j+1).  On a torus the index ranges wrap; on a window the
    boundary rows/columns that would need outside dimers are absent.
    """
    occ_h, occ_v = _occupancy(cfg)
    W, H = occ_h.shape
    if cfg.is_torus:
        vert_cov = occ_v | np.roll(occ_v, 1, axis=1)
        hor_cov = occ_h | np.roll(occ_h, 1, axis=0)
        vstick = vert_cov & np.roll(vert_cov, -1, axis=0)
        hstick = hor_cov & np.roll(hor_cov, -1, axis=1)
        return vstick, hstick
    vert_cov = occ_v.copy()
    vert_cov[:, 1:] |= occ_v[:, :-1]
    hor_cov = occ_h.copy()
    hor_cov[1:, :] |= occ_h[:-1, :]
    vstick = vert_cov[:-1, :] & vert_cov[1:, :]
    hstick = hor_cov[:, :-1] & hor_cov[:, 1:]
    return vstick, hstick


def _vstick_dual_edge(window: Rect, i: int, j: int):
    x = window.x0d + 2 + 2 * i
    y = window.y0d + 2 * j
    return ((x, y), (x, y + 2))


def _hstick_dual_edge(window: Rect, i: int, j: int):
    x = window.x0d + 2 * i
    y = window.y0d + 2 + 2 * j
    return ((x, y), (x + 2, y))


def stick_edges(cfg: DimerConfig, region: Rect | None = None) -> set:
    """Stick dual edges as sorted endpoint pairs, optionally only those
    whose midpoint lies in region."""
    vstick, hstick = stick_edge_masks(cfg)
    window = cfg.window
    out = set()
    for i, j in zip(*np.nonzero(vstick)):
        if region is None or region.contains((window.x0d + 2 + 2 * int(i),
                                              window.y0d + 1 + 2 * int(j))):
            out.add(_vstick_dual_edge(window, int(i), int(j)))
    for i, j in zip(*np.nonzero(hstick)):
        if region is None or region.contains((window.x0d + 1 + 2 * int(i),
                                              window.y0d + 2 + 2 * int(j))):
            out.add(_hstick_dual_edge(window, int(i), int(j)))
    return out


def _runs(mask_line: np.ndarray, cyclic: bool):
    """Maximal runs of True as (start_index, length), cyclically merged
    when cyclic; a full line is one run flagged as a cycle."""
    n = mask_line.shape[0]
    idx = np.nonzero(mask_line)[0]
    if idx.size == 0:
        return [], False
    if idx.size == n:
        return [(0, n)], cyclic
    breaks = np.nonzero(np.diff(idx) > 1)[0]
    starts = [int(idx[0])] + [int(idx[b + 1]) for b in breaks]
    ends = [int(idx[b]) for b in breaks] + [int(idx[-1])]
    runs = [(s, e - s + 1) for s, e in zip(starts, ends)]
    if cyclic and len(runs) > 1 and runs[0][0] == 0 \
            and runs[-1][0] + runs[-1][1] == n:
        first = runs.pop(0)
        last = runs.pop()
        runs.append((last[0], last[1] + first[1]))
    return runs, False


def sticks(cfg: DimerConfig, region: Rect | None = None) -> list[Stick]:
    """All maximal sticks, vertical then horizontal, in scan order."""
    vstick, hstick = stick_edge_masks(cfg)
    if region is not None:
        vstick = vstick.copy()
        hstick = hstick.copy()
        window = cfg.window
        for i, j in zip(*np.nonzero(vstick)):
            if not region.contains((window.x0d + 2 + 2 * int(i),
                                    window.y0d + 1 + 2 * int(j))):
                vstick[i, j] = False
        for i, j in zip(*np.nonzero(hstick)):
            if not region.contains((window.x0d + 1 + 2 * int(i),
                                    window.y0d + 2 + 2 * int(j))):
                hstick[i, j] = False
    window = cfg.window
    cyclic = cfg.is_torus
    out = []
    for i in range(vstick.shape[0]):
        runs, is_cycle = _runs(vstick[i, :], cyclic)
        axis = window.x0d + 2 + 2 * i
        for j0, length in runs:
            start = window.y0d + 2 * j0
            out.append(Stick("v", axis, start, start + 2 * length,
                             is_cycle=is_cycle))
    for j in range(hstick.shape[1]):
        runs, is_cycle = _runs(hstick[:, j], cyclic)
        axis = window.y0d + 2 + 2 * j
        for i0, length in runs:
            start = window.x0d + 2 * i0
            out.append(Stick("h", axis, start, start + 2 * length,
                             is_cycle=is_cycle))
    return out


def divides(seg: Stick, rect: Rect, wrap: Rect | None = None) -> bool:
    """True when the segment's line is strictly interior to the rect in
    its transverse direction and the segment covers the rect's full
    extent along the line.  wrap supplies the torus fundamental domain
    for modular comparisons."""
    if seg.orientation == "v":
        t_lo, t_hi = rect.x0d, rect.x1d
        r_lo, r_hi = rect.y0d, rect.y1d
        period_t = 2 * wrap.width if wrap else 0
        period_r = 2 * wrap.height if wrap else 0
    else:
        t_lo, t_hi = rect.y0d, rect.y1d
        r_lo, r_hi = rect.x0d, rect.x1d
        period_t = 2 * wrap.height if wrap else 0
        period_r = 2 * wrap.width if wrap else 0
    if wrap is not None:
        off = (seg.axis_d - t_lo) % period_t
        if not 0 < off < t_hi - t_lo:
            return False
        if seg.is_cycle:
            return True
        t = (r_lo - seg.start_d) % period_r
        return t + (r_hi - r_lo) <= seg.end_d - seg.start_d
    if not t_lo < seg.axis_d < t_hi:
        return False
    if seg.is_cycle:
        return True
    return seg.start_d <= r_lo and r_hi <= seg.end_d


def properly_divides(stick: Stick, rect: Rect, N: int = 4,
                     wrap: Rect | None = None) -> bool:
    """Divides both the rect and its concentric (1 - 2/N)-scaled core."""
    return (divides(stick, rect, wrap)
            and divides(stick, rect.shrunk_concentric(N), wrap))


@dataclass(frozen=True)
class PsiGrid:
    """Grid points whose mesoscopic rectangle is properly divided by a
    stick of the given orientation.

    Points are plain grid integers (x, y): the rectangle for (x, y) has
    its lower-left corner at doubled (2*scaleK*x - 1, 2*scaleL*y - 1)
    and sides scaleK*N by scaleL*N.  For a torus the grid is the
    fundamental domain {0..W/K-1} x {0..H/L-1} with wraparound.
    """

    scaleK: int
    scaleL: int
    N: int
    orientation: str
    points: frozenset
    nx: int
    ny: int
    periodic: bool
    x0: int = 0  # smallest scanned grid coordinates (0 on a torus)
    y0: int = 0

    def rect_for(self, x: int, y: int) -> Rect:
        return Rect(2 * self.scaleK * x - 1, 2 * self.scaleL * y - 1,
                    self.scaleK * self.N, self.scaleL * self.N)


def psi_grid(cfg: DimerConfig, K: int, L: int, N: int = 4,
             orientation: str = "v") -> PsiGrid:
    """Scan every grid rectangle meeting the domain for a properly
    dividing stick of the requested orientation."""
    if N <= 2:
        raise ValueError("margin N must exceed 2")
    if K < 1 or L < 1:
        raise ValueError("scales must be positive")
    if orientation not in ("v", "h"):
        raise ValueError("orientation must be 'v' or 'h'")
    window = cfg.window
    W, H = window.width, window.height
    all_sticks = [s for s in sticks(cfg) if s.orientation == orientation]
    pts = set()
    if cfg.is_torus:
        if W % K or H % L or K * N > W or L * N > H:
            raise ValueError("torus grid needs K | W, L | H and a rect "
                             "no larger than the torus")
        nx, ny = W // K, H // L
        for x in range(nx):
            for y in range(ny):
                rect = Rect(2 * K * x - 1, 2 * L * y - 1, K * N, L * N)
                if any(properly_divides(s, rect, N, wrap=window)
                       for s in all_sticks):
                    pts.add((x, y))
        return PsiGrid(K, L, N, orientation, frozenset(pts), nx, ny, True)
    # window: scan all anchors whose rectangle meets the window hull
    x_lo = -(-(window.x0d + 1 - 2 * K * N) // (2 * K))
    x_hi = (window.x1d + 1) // (2 * K)
    y_lo = -(-(window.y0d + 1 - 2 * L * N) // (2 * L))
    y_hi = (window.y1d + 1) // (2 * L)
    for x in range(x_lo, x_hi + 1):
        for y in range(y_lo, y_hi + 1):
            rect = Rect(2 * K * x - 1, 2 * L * y - 1, K * N, L * N)
            if any(properly_divides(s, rect, N) for s in all_sticks):
                pts.add((x, y))
    nx = x_hi - x_lo + 1
    ny = y_hi - y_lo + 1
    return PsiGrid(K, L, N, orientation, frozenset(pts), nx, ny, False,
                   x0=x_lo, y0=y_lo)


def unit_order_scan(occ_h: np.ndarray, occ_v: np.ndarray, N: int = 4) -> dict:
    """Torus orientation-order scan at unit grid scales, straight from
    occupancy arrays.

    Builds the stick-edge masks, checks that vertical and horizontal
    stick edges touch disjoint dual-vertex sets, forms the K = L = 1 Psi
    point masks (psi_ver[x, y] true iff a vertical stick properly
    divides the N x N rectangle anchored at grid point (x, y)), and
    checks that no point of one Psi set coincides with or is Box-adjacent
    to a point of the other.  Point sets and stick masks agree with
    psi_grid / stick_edge_masks on the periodic window Rect(-1, -1, W, H);
    everything is computed by array rolls so that large batches of
    sampled configurations can be audited quickly.
    """
    occ_h = np.asarray(occ_h, dtype=bool)
    occ_v = np.asarray(occ_v, dtype=bool)
    if occ_h.ndim != 2 or occ_h.shape != occ_v.shape:
        raise ValueError("occupancy arrays must share one 2d shape")
    if N <= 2:
        raise ValueError("margin N must exceed 2")
    W, H = occ_h.shape
    if N > W or N > H:
        raise ValueError("grid rectangle may not exceed the torus")
    vert_cov = occ_v | np.roll(occ_v, 1, axis=1)
    hor_cov = occ_h | np.roll(occ_h, 1, axis=0)
    vstick = vert_cov & np.roll(vert_cov, -1, axis=0)
    hstick = hor_cov & np.roll(hor_cov, -1, axis=1)
    # dual vertices of vstick[i, j] are also endpoints of the horizontal
    # dual edges hstick[i, j], [i+1, j], [i, j-1], [i+1, j-1]
    touched = hstick | np.roll(hstick, -1, axis=0)
    touched |= np.roll(touched, 1, axis=1)
    disjoint = not np.any(vstick & touched)
    # a stick properly divides the rect at (x, y) iff its dual line is
    # strictly inside the shrunken rect (N - 3 candidate lines; none for
    # N = 3) and N consecutive stick edges cover the rect's full extent
    vrun = vstick.copy()
    hrun = hstick.copy()
    for d in range(1, N):
        vrun &= np.roll(vstick, -d, axis=1)
        hrun &= np.roll(hstick, -d, axis=0)
    psi_ver = np.zeros_like(vrun)
    psi_hor = np.zeros_like(hrun)
    for t in range(1, N - 2):
        psi_ver |= np.roll(vrun, -t, axis=0)
        psi_hor |= np.roll(hrun, -t, axis=1)
    near = psi_hor | np.roll(psi_hor, 1, axis=0) | np.roll(psi_hor, -1, axis=0) \
        | np.roll(psi_hor, 1, axis=1) | np.roll(psi_hor, -1, axis=1)
    excluded = not np.any(psi_ver & near)
    return {
        "vstick": vstick,
        "hstick": hstick,
        "sticks_disjoint": bool(disjoint),
        "psi_ver": psi_ver,
        "psi_hor": psi_hor,
        "psi_excluded": bool(excluded),
    }


def _wrapped_components(points: set, nx: int, ny: int) -> list[set]:
    todo = set(points)
    out = []
    while todo:
        seed = todo.pop()
        comp = {seed}
        frontier = [seed]
        while frontier:
            x, y = frontier.pop()
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                q = ((x + dx) % nx, (y + dy) % ny)
                if q in todo:
                    todo.remove(q)
                    comp.add(q)
                    frontier.append(q)
        out.append(comp)
    return out


def percolation_report(grid: PsiGrid, domain: tuple[int, int] | None = None) -> dict:
    """Box-component statistics of the grid's point set.

    Spanning means one component touches both opposite sides of the
    (unrolled) domain.  domain overrides the grid's own (nx, ny).
    """
    nx, ny = domain if domain is not None else (grid.nx, grid.ny)
    if grid.periodic:
        comps = _wrapped_components(set(grid.points), nx, ny)
    else:
        comps = components(grid.points, "box")
    sizes = sorted((len(c) for c in comps), reverse=True)
    spans_h = False
    spans_v = False
    for c in comps:
        xs = {p[0] for p in c}
        ys = {p[1] for p in c}
        if grid.x0 in xs and (grid.x0 + nx - 1) in xs:
            spans_h = True
        if grid.y0 in ys and (grid.y0 + ny - 1) in ys:
            spans_v = True
    total = nx * ny
    return {
        "component_sizes": sizes,
        "spans_horizontally": spans_h,
        "spans_vertically": spans_v,
        "largest_fraction": (sizes[0] / total) if sizes else 0.0,
    }


def _escapes(blocked: set, u: tuple[int, int], d: int) -> bool:
    if u in blocked:
        return False
    seen = {u}
    frontier = [u]
    ux, uy = u
    while frontier:
        x, y = frontier.pop()
        if max(abs(x - ux), abs(y - uy)) >= d:
            return True
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                q = (x + dx, y + dy)
                if q not in seen and q not in blocked:
                    seen.add(q)
                    frontier.append(q)
    return False


def wilson_interval(successes: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n <= 0:
        return 0.0, 1.0
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def escape_probability(samples, u: tuple[int, int], d: int) -> dict:
    """Fraction of sampled point sets whose complement lets a Boxtimes
    path run from u out to sup-distance >= d, with a Wilson 95% CI."""
    if d < 1:
        raise ValueError("distance must be >= 1")
    n = 0
    k = 0
    for pts in samples:
        n += 1
        if _escapes(set(pts), u, d):
            k += 1
    lo, hi = wilson_interval(k, n)
    return {"estimate": (k / n) if n else float("nan"),
            "lo": lo, "hi": hi, "n": n, "escaped": k}
