"""Two-sample disagreement analysis.

Two configurations on the same geometry disagree on the edge set
Delta = {e : sigma(e) != sigma'(e)}.  Edges are identified with their
midpoints throughout, so Delta is a plain set of edge ids.  Two edges
are ddag-adjacent when they share an endpoint or are colinear one edge
apart; the extra colinear pairs let a component hop the gap bridged by
a link, which is what makes the occupancy field Markov with respect to
this adjacency.

Sealed rectangles.  Around an anchor vertex, with scales (a, c, N) and
writing A = N*a, C = N*c for the side lengths, the probed tiles are
(doubled offsets relative to the anchor)

    central slab   Rect(-1, -2C-1, A, 3C)
    side slabs     Rect(-2A-1, -2C-1, A, 3C), Rect(2A-1, -2C-1, A, 3C)
    lower block    Rect(-1, -2C-1, A, C)
    upper block    Rect(-1,  2C-1, A, C)
    core           Rect(-1, -1, A, C)

Sigma_0: every A x 1 rectangle inside a side slab meets a vertical
dimer.  Sigma_1: every dimer meeting the central slab is vertical.
Sigma_2: every 1 x C column of the lower and upper blocks holds a
coincident vacancy or a coincident vertical dimer of the pair.  The
core is sealed when Sigma_1 holds for both configurations and Sigma_2
holds jointly; Sigma_0 is reported alongside because experiments
condition on it, but it does not enter the sealed predicate.

Because every probed rectangle has half-integer corners and a dimer
extends half a lattice unit from its midpoint in each direction, "the
dimer intersects the rectangle" is equivalent to "the rectangle
contains the midpoint", which is how all the scans below are phrased.

When the core at an anchor is sealed, the ddag-component of any
disagreement edge inside it is a single-column run of vertical edges
confined to the open vertical band of the central slab: a coincident
vacancy kills both its incident column edges in both configurations,
and a coincident vertical dimer kills both its colinear extensions, so
in either case the surviving disagreement edges flanking the pattern
sit five half-steps apart, beyond ddag reach.  confinement_check
verifies the confinement directly and returns the violating pairs.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .lattice import (
    EdgeId,
    Rect,
    VertexId,
    ddag_neighbors,
    edge_endpoints,
    edge_is_horizontal,
)
from .model import DimerConfig, Periodic


# -- disagreement sets and ddag-components --------------------------------


def _check_same_geometry(a: DimerConfig, b: DimerConfig) -> None:
    if a.window != b.window or a.bc != b.bc:
        raise ValueError("configurations live on different geometries")


def delta(sigma: DimerConfig, sigma_prime: DimerConfig,
          region: Optional[Rect] = None) -> frozenset:
    """Edges whose occupancy differs, optionally restricted to midpoints
    inside region (canonical representatives on the torus)."""
    _check_same_geometry(sigma, sigma_prime)
    diff = sigma.edges ^ sigma_prime.edges
    if region is not None:
        diff = {e for e in diff if region.contains(e)}
    return frozenset(diff)


@dataclass(frozen=True)
class PairSample:
    """Two configurations on the same geometry and their disagreement set."""

    sigma: DimerConfig
    sigma_prime: DimerConfig
    delta: frozenset

    @staticmethod
    def of(sigma: DimerConfig, sigma_prime: DimerConfig) -> "PairSample":
        return PairSample(sigma, sigma_prime, delta(sigma, sigma_prime))

    def components(self) -> list:
        return ddag_components(self.delta, self.sigma)


def _periods(cfg: Optional[DimerConfig]):
    if cfg is not None and isinstance(cfg.bc, Periodic):
        w = cfg.window
        return 2 * w.width, 2 * w.height, w
    return None


def _edge_neighbor_fn(cfg: Optional[DimerConfig], ddag: bool):
    base = ddag_neighbors if ddag else _line_graph_neighbors
    per = _periods(cfg)
    if per is None:
        return base
    px, py, w = per

    def wrapped(e):
        return tuple((w.x0d + (f[0] - w.x0d) % px, w.y0d + (f[1] - w.y0d) % py)
                     for f in base(e))

    return wrapped


def _line_graph_neighbors(e: EdgeId):
    u, w = edge_endpoints(e)
    out = []
    for v in (u, w):
        x, y = v
        for f in ((x + 1, y), (x, y + 1), (x - 1, y), (x, y - 1)):
            if f != e:
                out.append(f)
    return tuple(out)


def _edge_components(edges, cfg, ddag):
    """Connected parts of an edge set, deterministically ordered (size
    descending, then smallest member)."""
    pending = set(edges)
    nbrs = _edge_neighbor_fn(cfg, ddag)
    comps = []
    while pending:
        seed = min(pending)
        comp = {seed}
        pending.discard(seed)
        queue = [seed]
        while queue:
            cur = queue.pop()
            for f in nbrs(cur):
                if f in pending:
                    pending.discard(f)
                    comp.add(f)
                    queue.append(f)
        comps.append(frozenset(comp))
    comps.sort(key=lambda k: (-len(k), min(k)))
    return comps


def ddag_components(edges, cfg: Optional[DimerConfig] = None) -> list:
    """Partition an edge set into ddag-components; adjacency wraps when cfg
    is periodic."""
    return _edge_components(edges, cfg, ddag=True)


def line_graph_components(edges, cfg: Optional[DimerConfig] = None) -> list:
    """Components under endpoint-sharing only; the control showing which
    merges the two extra colinear neighbors are responsible for."""
    return _edge_components(edges, cfg, ddag=False)


def _unwrapped_positions(component, cfg, seed):
    """Search positions of a component's members relative to one
    representative of the seed, without reducing modulo the torus.  Also
    returns the members reached again at a different unwrapped position:
    a nonempty conflict list means the component wraps around a period
    (its plain coordinate span can understate that by one step)."""
    per = _periods(cfg)
    pos = {}
    conflicts = []
    canon = (lambda p: p) if per is None else (
        lambda p: (per[2].x0d + (p[0] - per[2].x0d) % per[0],
                   per[2].y0d + (p[1] - per[2].y0d) % per[1]))
    pos[canon(seed)] = seed
    queue = [seed]
    while queue:
        cur = queue.pop()
        for f in ddag_neighbors(cur):
            c = canon(f)
            if c not in component:
                continue
            if c not in pos:
                pos[c] = f
                queue.append(f)
            elif pos[c] != f:
                conflicts.append(c)
    return pos, conflicts


def component_report(pair: PairSample) -> dict:
    """Sizes, diameters, and spanning flags of the disagreement components.

    Diameters are sup-norm extents in doubled coordinates.  A component
    spans when its unwrapped extent covers a full period (torus) or
    reaches both walls of the window; absence of spanning components is
    the finite-volume stand-in for all components being finite.
    """
    comps = pair.components()
    w = pair.sigma.window
    periodic = isinstance(pair.sigma.bc, Periodic)
    sizes, diameters, spans = [], [], []
    for comp in comps:
        pos, conflicts = _unwrapped_positions(comp, pair.sigma, min(comp))
        xs = [p[0] for p in pos.values()]
        ys = [p[1] for p in pos.values()]
        span_x, span_y = max(xs) - min(xs), max(ys) - min(ys)
        sizes.append(len(comp))
        diameters.append(max(span_x, span_y))
        if periodic:
            spans.append(bool(conflicts)
                         or span_x >= 2 * w.width or span_y >= 2 * w.height)
        else:
            spans.append((min(xs) <= w.x0d + 2 and max(xs) >= w.x1d - 2)
                         or (min(ys) <= w.y0d + 2 and max(ys) >= w.y1d - 2))
    n_edges = len(pair.delta)
    return {
        "n_edges": n_edges,
        "n_components": len(comps),
        "sizes": sizes,
        "diameters": diameters,
        "spanning": spans,
        "any_spanning": any(spans),
        "max_diameter": max(diameters, default=0),
        "largest_fraction": (sizes[0] / n_edges) if n_edges else 0.0,
    }


# -- sealed rectangles -----------------------------------------------------


@dataclass(frozen=True)
class SealScales:
    """Sealing scales: rectangle sides are (N*a_scale) x (N*c_scale)."""

    a_scale: int
    c_scale: int
    N: int = 4

    def __post_init__(self):
        if self.N <= 2:
            raise ValueError("grain N must exceed 2")
        if self.a_scale < 1 or self.c_scale < 1:
            raise ValueError("scales must be positive")

    @property
    def side_a(self) -> int:
        return self.N * self.a_scale

    @property
    def side_c(self) -> int:
        return self.N * self.c_scale


def default_c_scale(params, N: int, knob: float = 1.0) -> int:
    """Vertical scale tied to the anisotropy length: max(1, round(knob*l0/N))."""
    return max(1, round(knob * params.ell0 / N))


class SealTiles(NamedTuple):
    central: Rect
    side_left: Rect
    side_right: Rect
    lower: Rect
    upper: Rect
    core: Rect


def seal_tiles(anchor: VertexId, scales: SealScales) -> SealTiles:
    ax, ay = anchor
    if ax % 2 or ay % 2:
        raise ValueError("anchor must be a vertex")
    a, c = scales.side_a, scales.side_c
    return SealTiles(
        central=Rect(ax - 1, ay - 2 * c - 1, a, 3 * c),
        side_left=Rect(ax - 2 * a - 1, ay - 2 * c - 1, a, 3 * c),
        side_right=Rect(ax + 2 * a - 1, ay - 2 * c - 1, a, 3 * c),
        lower=Rect(ax - 1, ay - 2 * c - 1, a, c),
        upper=Rect(ax - 1, ay + 2 * c - 1, a, c),
        core=Rect(ax - 1, ay - 1, a, c),
    )


def _require_room(cfg: DimerConfig, scales: SealScales, tiles: SealTiles) -> None:
    w = cfg.window
    if isinstance(cfg.bc, Periodic):
        if 3 * scales.side_a > w.width or 3 * scales.side_c > w.height:
            raise ValueError("window too small for the sealing tiles")
        return
    bbox = Rect(tiles.side_left.x0d, tiles.side_left.y0d,
                3 * scales.side_a, 3 * scales.side_c)
    if not w.contains_rect(bbox):
        raise ValueError("window too small for the sealing tiles")


class SealingEvents(NamedTuple):
    sigma0: bool
    sigma0_prime: bool
    sigma1: bool
    sigma1_prime: bool
    sigma2: bool


def _sigma0(cfg: DimerConfig, tiles: SealTiles) -> bool:
    # every A x 1 rectangle of a side slab meets a vertical dimer; a height-1
    # rectangle [y0, y0+2] admits vertical midpoints at y0 and y0+2
    for slab in (tiles.side_left, tiles.side_right):
        xs = range(slab.x0d + 1, slab.x1d, 2)
        for y0 in range(slab.y0d, slab.y1d - 1, 2):
            if not any(cfg.occupied((x, y)) for x in xs for y in (y0, y0 + 2)):
                return False
    return True


def _sigma1(cfg: DimerConfig, tiles: SealTiles) -> bool:
    # no horizontal dimer meets the central slab
    slab = tiles.central
    for x in range(slab.x0d, slab.x1d + 1, 2):
        for y in range(slab.y0d + 1, slab.y1d, 2):
            if cfg.occupied((x, y)):
                return False
    return True


def _sigma2(sigma: DimerConfig, sigma_prime: DimerConfig, tiles: SealTiles) -> bool:
    # every unit-width column of the lower and upper blocks holds a
    # coincident vacancy or a coincident vertical dimer
    for block in (tiles.lower, tiles.upper):
        for x0 in range(block.x0d, block.x1d - 1, 2):
            x = x0 + 1
            good = any(not sigma.covered((x, y)) and not sigma_prime.covered((x, y))
                       for y in range(block.y0d + 1, block.y1d, 2))
            good = good or any(sigma.occupied((x, y)) and sigma_prime.occupied((x, y))
                               for y in range(block.y0d, block.y1d + 1, 2))
            if not good:
                return False
    return True


def sealing_events(sigma: DimerConfig, sigma_prime: DimerConfig,
                   anchor: VertexId, scales: SealScales) -> SealingEvents:
    """The five event flags at an anchor, in the order
    (Sigma0 of sigma, Sigma0 of sigma', Sigma1 of sigma, Sigma1 of sigma',
    joint Sigma2)."""
    _check_same_geometry(sigma, sigma_prime)
    tiles = seal_tiles(anchor, scales)
    _require_room(sigma, scales, tiles)
    return SealingEvents(
        sigma0=_sigma0(sigma, tiles),
        sigma0_prime=_sigma0(sigma_prime, tiles),
        sigma1=_sigma1(sigma, tiles),
        sigma1_prime=_sigma1(sigma_prime, tiles),
        sigma2=_sigma2(sigma, sigma_prime, tiles),
    )


def sealed(sigma: DimerConfig, sigma_prime: DimerConfig,
           anchor: VertexId, scales: SealScales) -> bool:
    """True when both configurations keep horizontal dimers out of the
    central slab and the guard blocks pass the joint coincidence test.
    Skips the side-slab scans (sigma0 flags), which sealing_events still
    reports but which play no part in sealing."""
    _check_same_geometry(sigma, sigma_prime)
    tiles = seal_tiles(anchor, scales)
    _require_room(sigma, scales, tiles)
    return (_sigma1(sigma, tiles) and _sigma1(sigma_prime, tiles)
            and _sigma2(sigma, sigma_prime, tiles))


def anchors(cfg: DimerConfig, scales: SealScales):
    """Anchor vertices on the (side_a, side_c) grid whose tiles fit the free
    region: the whole wrap grid on a torus, interior anchors on a window."""
    w = cfg.window
    a, c = scales.side_a, scales.side_c
    if isinstance(cfg.bc, Periodic):
        if 3 * a > w.width or 3 * c > w.height:
            return
        for i in range(w.width // a):
            for j in range(w.height // c):
                yield (w.x0d + 1 + 2 * a * i, w.y0d + 1 + 2 * c * j)
        return
    for i in range(1, (w.width - 2 * a) // a + 1):
        for j in range(1, (w.height - 2 * c) // c + 1):
            yield (w.x0d + 1 + 2 * a * i, w.y0d + 1 + 2 * c * j)


def confinement_check(pair: PairSample, anchor: VertexId,
                      scales: SealScales) -> list:
    """For every disagreement edge in the sealed core, its ddag-component
    must be vertical edges of that one column inside the open central band;
    returns the violating (edge, member) pairs.  Requires sealed."""
    if not sealed(pair.sigma, pair.sigma_prime, anchor, scales):
        raise ValueError("confinement_check requires a sealed rectangle")
    tiles = seal_tiles(anchor, scales)
    per = _periods(pair.sigma)
    ax, ay = anchor
    c = scales.side_c
    band_lo, band_hi = ay - 2 * c - 1, ay + 4 * c - 1

    def representative(e):
        # copy of e whose midpoint lies in the core, if any
        if per is None:
            return e if tiles.core.contains(e) else None
        q = (tiles.core.x0d + (e[0] - tiles.core.x0d) % per[0],
             tiles.core.y0d + (e[1] - tiles.core.y0d) % per[1])
        return q if tiles.core.contains(q) else None

    violations = []
    for seed in sorted(pair.delta):
        rep = representative(seed)
        if rep is None:
            continue
        pos, conflicts = _unwrapped_positions(pair.delta, pair.sigma, rep)
        for member in conflicts:
            violations.append((seed, member))
        for member, p in sorted(pos.items()):
            bad = (edge_is_horizontal(p)
                   or p[0] != rep[0]
                   or not (band_lo < p[1] < band_hi))
            if bad:
                violations.append((seed, member))
    return violations


# -- connection probabilities and decay fits -------------------------------


def ddag_connected(pair: PairSample, a_set, b_set) -> bool:
    """Whether some ddag-path inside the disagreement set joins a_set to
    b_set (an edge of the intersection counts as a length-zero path)."""
    a_in = pair.delta & frozenset(a_set)
    if not a_in:
        return False
    b_in = frozenset(b_set)
    nbrs = _edge_neighbor_fn(pair.sigma, ddag=True)
    seen = set(a_in)
    queue = list(a_in)
    while queue:
        cur = queue.pop()
        if cur in b_in:
            return True
        for f in nbrs(cur):
            if f in pair.delta and f not in seen:
                seen.add(f)
                queue.append(f)
    return False


def connection_stats(pairs, a_set, b_set) -> dict:
    """Empirical probability that the two edge sets are ddag-connected
    within the disagreement set, with a Wilson interval."""
    from .order import wilson_interval

    pairs = list(pairs)
    if not pairs:
        raise ValueError("no pair samples")
    a_set, b_set = frozenset(a_set), frozenset(b_set)
    hits = sum(1 for pr in pairs if ddag_connected(pr, a_set, b_set))
    lo, hi = wilson_interval(hits, len(pairs))
    return {"p_hat": hits / len(pairs), "lo": lo, "hi": hi,
            "n": len(pairs), "successes": hits}


def alpha1_fit(stats) -> dict:
    """Weighted least-squares fit of log p = log C - c_x|dx| - c_y|dy|.

    stats: records with lattice displacements and counts, either dicts
    with keys dx, dy, successes, n or tuples in that order.  Rows with no
    successes carry no information about log p and are dropped; weights
    are inverse delta-method variances of log p_hat with a half-count
    continuity adjustment so saturated rows stay finite.
    """
    rows = []
    for r in stats:
        if isinstance(r, dict):
            dx, dy, s, n = r["dx"], r["dy"], r["successes"], r["n"]
        else:
            dx, dy, s, n = r
        if n <= 0 or s <= 0:
            continue
        p = (s + 0.5) / (n + 1.0)
        rows.append((abs(dx), abs(dy), math.log(p), n * p / (1.0 - p)))
    arr = np.array(rows, dtype=float).reshape(-1, 4)
    # a displacement that never varies cannot identify its rate; fit without
    # it and report nan for that coefficient
    use_dx = len(np.unique(arr[:, 0])) > 1
    use_dy = len(np.unique(arr[:, 1])) > 1
    cols = [np.ones(len(arr))]
    if use_dx:
        cols.append(-arr[:, 0])
    if use_dy:
        cols.append(-arr[:, 1])
    design = np.column_stack(cols)
    if len(arr) < design.shape[1] + 1:
        return {"degenerate": True, "reason": "fewer informative rows than parameters"}
    if np.linalg.matrix_rank(design) < design.shape[1]:
        return {"degenerate": True, "reason": "displacements not independent"}
    sw = np.sqrt(arr[:, 3])
    coef, _, _, _ = np.linalg.lstsq(design * sw[:, None], arr[:, 2] * sw, rcond=None)
    log_c = float(coef[0])
    k = 1
    c_x = c_y = float("nan")
    if use_dx:
        c_x = float(coef[k])
        k += 1
    if use_dy:
        c_y = float(coef[k])
    resid = design @ coef - arr[:, 2]
    return {
        "degenerate": False,
        "C": math.exp(log_c),
        "log_C": log_c,
        "c_x": c_x,
        "c_y": c_y,
        "anisotropy": (c_x / c_y) if c_y and not math.isnan(c_x) else float("nan"),
        "residual_rms": float(np.sqrt(np.mean(resid ** 2))),
        "n_points": len(rows),
    }
