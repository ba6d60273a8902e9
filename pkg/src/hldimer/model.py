"""Interacting monomer-dimer model on the square lattice.

Dimers occupy lattice edges subject to the hard-core constraint (no two
dimers share a vertex).  Two dimers are linked when they are colinear and
separated by exactly one edge; the interaction rewards linked pairs.  The
energy used throughout is the shifted form written as a sum of two local
potentials, each supported on a small set of edges B:

* vacancy potential, B = the four edges at a vertex:
  (lam + a)/2 if the vertex is uncovered
* broken-link potential, B = three consecutive colinear edges:
  a/2 if exactly one of the two outer edges is occupied

A finite-volume energy sums every potential whose support intersects the
closed window; on the torus each translation class is counted once.  The
Gibbs weight of a configuration is exp(-beta * energy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .lattice import (
    EdgeId,
    Isometry,
    Rect,
    VertexId,
    colinear_link_neighbors,
    edge_is_horizontal,
    edge_endpoints,
    incident_edges,
    is_edge,
)


@dataclass(frozen=True)
class ModelParams:
    """Inverse temperature and couplings (monomer activity lam, attraction a)."""

    beta: float
    lam: float
    a: float

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"a must be positive, got {self.a}")
        if not math.isfinite(self.lam):
            raise ValueError(f"lam must be finite, got {self.lam}")

    @property
    def vacancy_weight(self) -> float:
        """Penalty per uncovered vertex, exp(-beta*(lam+a)/2)."""
        return math.exp(-self.beta * (self.lam + self.a) / 2)

    @property
    def link_weight(self) -> float:
        """Penalty per broken link, exp(-beta*a/2)."""
        return math.exp(-self.beta * self.a / 2)

    @property
    def ell0(self) -> float:
        """Defect scale exp(beta*(lam+3a)/2): inverse weight of a vacancy
        dressed by its two broken links."""
        return math.exp(self.beta * (self.lam + 3 * self.a) / 2)

    @property
    def log_ell0(self) -> float:
        return self.beta * (self.lam + 3 * self.a) / 2

    @property
    def nematic_regime(self) -> bool:
        """Parameter region where dimers align at low temperature."""
        return (self.lam + self.a > 0) and (self.a > self.lam / 3)


@dataclass(frozen=True)
class PeriodicPattern:
    """Doubly periodic reference configuration, given by its periods and the
    occupied edge midpoints of one fundamental cell (doubled coordinates in
    [0, 2*px) x [0, 2*py))."""

    px: int
    py: int
    edges: frozenset[EdgeId]

    def __post_init__(self):
        if not (1 <= self.px <= 4 and 1 <= self.py <= 4):
            raise ValueError("pattern periods must be in 1..4")
        for e in self.edges:
            if not is_edge(e):
                raise ValueError(f"{e} is not an edge midpoint")
            if not (0 <= e[0] < 2 * self.px and 0 <= e[1] < 2 * self.py):
                raise ValueError(f"{e} outside the fundamental cell")
        # the pattern itself must be hard-core
        cover: dict[VertexId, int] = {}
        for ex in range(-2 * self.px, 4 * self.px):
            for ey in range(-2 * self.py, 4 * self.py):
                if (ex % 2) + (ey % 2) != 1:
                    continue
                if self.occupied((ex, ey)):
                    for v in edge_endpoints((ex, ey)):
                        cover[v] = cover.get(v, 0) + 1
        if any(c > 1 for c in cover.values()):
            raise ValueError("prescribed pattern violates the hard-core constraint")

    def occupied(self, e: EdgeId) -> bool:
        return (e[0] % (2 * self.px), e[1] % (2 * self.py)) in self.edges


def fully_packed_rows_pattern() -> PeriodicPattern:
    """Rows fully packed with horizontal dimers, midpoints at x in 1/2 + 2Z."""
    return PeriodicPattern(2, 1, frozenset({(1, 0)}))


@dataclass(frozen=True)
class Periodic:
    kind: str = field(default="periodic", init=False, repr=False)


@dataclass(frozen=True)
class Vacant:
    kind: str = field(default="vacant", init=False, repr=False)


@dataclass(frozen=True)
class Prescribed:
    pattern: PeriodicPattern
    kind: str = field(default="prescribed", init=False, repr=False)


BoundaryCondition = Periodic | Vacant | Prescribed


class DimerConfig:
    """A dimer configuration on a rectangular window with boundary condition.

    Stored as the frozenset of occupied edge midpoints (doubled coordinates).
    Lookups through `occupied` resolve edges outside the window from the
    boundary condition, so the configuration is defined on the whole plane
    (or torus).
    """

    __slots__ = ("window", "bc", "edges", "__dict__")

    def __init__(self, window: Rect, bc: BoundaryCondition, edges: Iterable[EdgeId] = ()):
        self.window = window
        self.bc = bc
        if isinstance(bc, Periodic):
            edges = frozenset(self._canon(e) for e in edges)
        else:
            edges = frozenset(edges)
        for e in edges:
            if not is_edge(e):
                raise ValueError(f"{e} is not an edge midpoint")
            if not self._in_free_region(e):
                raise ValueError(f"edge {e} is not free under {bc.kind} boundary conditions")
        self.edges = edges

    # -- basic queries ---------------------------------------------------

    @property
    def is_torus(self) -> bool:
        return isinstance(self.bc, Periodic)

    def _canon(self, p: tuple[int, int]) -> tuple[int, int]:
        w = self.window
        return (w.x0d + (p[0] - w.x0d) % (2 * w.width),
                w.y0d + (p[1] - w.y0d) % (2 * w.height))

    def _in_free_region(self, e: EdgeId) -> bool:
        w = self.window
        if isinstance(self.bc, Periodic):
            return w.x0d <= e[0] < w.x1d and w.y0d <= e[1] < w.y1d
        if not w.contains(e):
            return False
        if isinstance(self.bc, Vacant):
            # an edge covering an outside vertex would break its vacancy
            return all(w.contains(v) for v in edge_endpoints(e))
        return True

    def free_edges(self) -> list[EdgeId]:
        """Edges whose occupancy is not fixed by the boundary condition,
        in lexicographic order."""
        return sorted(e for e in self.window.edges() if self._in_free_region(e))

    def occupied(self, e: EdgeId) -> bool:
        """Occupancy of any edge of the plane (torus reduces modulo periods)."""
        if isinstance(self.bc, Periodic):
            return self._canon(e) in self.edges
        if self._in_free_region(e):
            return e in self.edges
        if isinstance(self.bc, Vacant):
            return False
        return self.bc.pattern.occupied(e)

    def covered(self, v: VertexId) -> bool:
        return any(self.occupied(e) for e in incident_edges(v))

    @property
    def n_dimers(self) -> int:
        return len(self.edges)

    def counts_by_orientation(self) -> tuple[int, int]:
        nh = sum(1 for e in self.edges if edge_is_horizontal(e))
        return nh, len(self.edges) - nh

    def with_edges(self, edges: Iterable[EdgeId]) -> "DimerConfig":
        return DimerConfig(self.window, self.bc, edges)

    def pullback(self, iso: Isometry) -> "DimerConfig":
        """The configuration sigma o tau: occupancy at e equals the original
        occupancy at tau(e).  Only meaningful when tau maps the free region
        onto itself (torus isometries from block reflection groups do)."""
        inv = iso.inverse()
        return self.with_edges(inv.apply(e) for e in self.edges)

    def __eq__(self, other):
        return (isinstance(other, DimerConfig) and self.window == other.window
                and self.bc == other.bc and self.edges == other.edges)

    def __hash__(self):
        return hash((self.window, self.bc, self.edges))

    def __repr__(self):
        return (f"DimerConfig({self.window.width}x{self.window.height}, "
                f"{self.bc.kind}, {len(self.edges)} dimers)")

    # -- constructors ----------------------------------------------------

    @staticmethod
    def empty(window: Rect, bc: BoundaryCondition) -> "DimerConfig":
        return DimerConfig(window, bc, ())

    @staticmethod
    def packed_vertical(window: Rect, bc: BoundaryCondition, phase: int = 0) -> "DimerConfig":
        """Every column fully packed with vertical dimers; phase 0 or 1 picks
        the row offset.  Requires even height (and phase 0 off the torus)."""
        if window.height % 2:
            raise ValueError("packed_vertical needs an even window height")
        if phase and not isinstance(bc, Periodic):
            raise ValueError("nonzero phase only makes sense on the torus")
        edges = []
        for i in range(window.width):
            for j in range(phase, window.height - 1 + phase, 2):
                edges.append((window.x0d + 1 + 2 * i, window.y0d + 2 + 2 * j))
        return DimerConfig(window, bc, edges)

    @staticmethod
    def packed_horizontal(window: Rect, bc: BoundaryCondition, phase: int = 0) -> "DimerConfig":
        if window.width % 2:
            raise ValueError("packed_horizontal needs an even window width")
        if phase and not isinstance(bc, Periodic):
            raise ValueError("nonzero phase only makes sense on the torus")
        edges = []
        for j in range(window.height):
            for i in range(phase, window.width - 1 + phase, 2):
                edges.append((window.x0d + 2 + 2 * i, window.y0d + 1 + 2 * j))
        return DimerConfig(window, bc, edges)

    @staticmethod
    def from_arrays(window: Rect, bc: BoundaryCondition,
                    occ_h: np.ndarray, occ_v: np.ndarray) -> "DimerConfig":
        """Inverse of to_arrays."""
        edges = []
        for i, j in zip(*np.nonzero(occ_h)):
            edges.append((window.x0d + 2 + 2 * int(i), window.y0d + 1 + 2 * int(j)))
        for i, j in zip(*np.nonzero(occ_v)):
            edges.append((window.x0d + 1 + 2 * int(i), window.y0d + 2 + 2 * int(j)))
        return DimerConfig(window, bc, edges)

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Occupancy bit arrays indexed by the lower-left vertex of each edge:
        occ_h[i, j] is the edge from vertex (i, j) to (i+1, j), occ_v[i, j]
        the edge from (i, j) to (i, j+1).  On the torus the index wraps; on a
        vacant window the out-going column/row stays zero."""
        if isinstance(self.bc, Prescribed):
            raise ValueError("to_arrays does not support prescribed boundaries")
        w = self.window
        occ_h = np.zeros((w.width, w.height), dtype=np.uint8)
        occ_v = np.zeros((w.width, w.height), dtype=np.uint8)
        for e in self.edges:
            if edge_is_horizontal(e):
                occ_h[(e[0] - w.x0d - 2) // 2, (e[1] - w.y0d - 1) // 2] = 1
            else:
                occ_v[(e[0] - w.x0d - 1) // 2, (e[1] - w.y0d - 2) // 2] = 1
        return occ_h, occ_v


# -- validation ----------------------------------------------------------


def validate(cfg: DimerConfig) -> list[str]:
    """Hard-core and boundary compatibility check; empty list means valid."""
    problems = []
    if isinstance(cfg.bc, Periodic):
        cover: dict[VertexId, list] = {}
        for e in cfg.edges:
            for v in edge_endpoints(e):
                cover.setdefault(cfg._canon(v), []).append(e)
    else:
        # scan a band wide enough to catch collisions with boundary dimers
        region = cfg.window.padded(2)
        cover = {}
        for e in region.edges():
            if cfg.occupied(e):
                for v in edge_endpoints(e):
                    cover.setdefault(v, []).append(e)
    for v, es in cover.items():
        if len(es) > 1:
            problems.append(f"vertex {v} covered by {sorted(es)}")
    return problems


# -- observables ---------------------------------------------------------


def vacancies(cfg: DimerConfig, region: Rect | None = None) -> list[VertexId]:
    """Uncovered vertices inside the closed region (default: the window)."""
    region = region or cfg.window
    return [v for v in region.vertices() if not cfg.covered(v)]


def broken_links(cfg: DimerConfig, region: Rect | None = None) -> list[EdgeId]:
    """Edges in the region incident to exactly one dimer colinear with them."""
    region = region or cfg.window
    out = []
    for e in region.edges():
        lo, hi = colinear_link_neighbors(e)
        if int(cfg.occupied(lo)) + int(cfg.occupied(hi)) == 1:
            out.append(e)
    return out


# -- energy --------------------------------------------------------------


def _vacancy_support_touches(v: VertexId, region: Rect) -> bool:
    return any(region.contains(e) for e in incident_edges(v))


def _link_support_touches(f: EdgeId, region: Rect) -> bool:
    lo, hi = colinear_link_neighbors(f)
    return region.contains(f) or region.contains(lo) or region.contains(hi)


def potential_counts(cfg: DimerConfig, region: Rect | None = None) -> tuple[int, int]:
    """Number of active vacancy and broken-link potentials whose support
    intersects the closed region (torus: one per translation class)."""
    region = region or cfg.window
    if isinstance(cfg.bc, Periodic):
        if region != cfg.window:
            raise ValueError("torus energy is defined for the full window")
        nvac = sum(1 for v in region.vertices() if not cfg.covered(v))
        nlink = 0
        for f in _torus_edge_classes(region):
            lo, hi = colinear_link_neighbors(f)
            if int(cfg.occupied(lo)) + int(cfg.occupied(hi)) == 1:
                nlink += 1
        return nvac, nlink
    nvac = 0
    for v in region.padded(1).vertices():
        if _vacancy_support_touches(v, region) and not cfg.covered(v):
            nvac += 1
    nlink = 0
    for f in region.padded(1).edges():
        if not _link_support_touches(f, region):
            continue
        lo, hi = colinear_link_neighbors(f)
        if int(cfg.occupied(lo)) + int(cfg.occupied(hi)) == 1:
            nlink += 1
    return nvac, nlink


def _torus_edge_classes(window: Rect) -> Iterator[EdgeId]:
    for x in range(window.x0d, window.x1d, 1):
        for y in range(window.y0d, window.y1d, 1):
            if (x % 2) + (y % 2) == 1:
                yield (x, y)


def energy(cfg: DimerConfig, params: ModelParams, region: Rect | None = None) -> float:
    """Shifted finite-volume energy (beta not included)."""
    nvac, nlink = potential_counts(cfg, region)
    return (params.lam + params.a) / 2 * nvac + params.a / 2 * nlink


def log_weight(cfg: DimerConfig, params: ModelParams, region: Rect | None = None) -> float:
    return -params.beta * energy(cfg, params, region)


def weight(cfg: DimerConfig, params: ModelParams, region: Rect | None = None) -> float:
    return math.exp(log_weight(cfg, params, region))


# -- local moves ---------------------------------------------------------


Move = tuple  # ("insert", e) | ("delete", e) | ("replace", e_old, e_new)


def apply_move(cfg: DimerConfig, move: Move) -> DimerConfig:
    op = move[0]
    if op == "insert":
        return cfg.with_edges(cfg.edges | {cfg._canon(move[1]) if cfg.is_torus else move[1]})
    if op == "delete":
        return cfg.with_edges(cfg.edges - {cfg._canon(move[1]) if cfg.is_torus else move[1]})
    if op == "replace":
        mid = apply_move(cfg, ("delete", move[1]))
        return apply_move(mid, ("insert", move[2]))
    raise ValueError(f"unknown move {move!r}")


def move_is_allowed(cfg: DimerConfig, move: Move) -> bool:
    """Hard-core admissibility of a move (insert target free and uncovered
    endpoints, delete target occupied)."""
    op = move[0]
    if op == "insert":
        e = move[1]
        if not cfg._in_free_region(e) or cfg.occupied(e):
            return False
        return not any(cfg.covered(v) for v in edge_endpoints(e))
    if op == "delete":
        return cfg.occupied(move[1]) and cfg._in_free_region(move[1])
    if op == "replace":
        if not move_is_allowed(cfg, ("delete", move[1])):
            return False
        return move_is_allowed(apply_move(cfg, ("delete", move[1])), ("insert", move[2]))
    raise ValueError(f"unknown move {move!r}")


def _affected_potentials(cfg: DimerConfig, edges: Iterable[EdgeId],
                         region: Rect) -> tuple[list[VertexId], list[EdgeId]]:
    """Vacancy vertices and link middles whose potential can change when the
    given edges flip, deduplicated (modulo torus periods) and restricted to
    supports that intersect the region."""
    vac: dict[tuple, VertexId] = {}
    mid: dict[tuple, EdgeId] = {}
    torus = isinstance(cfg.bc, Periodic)
    key = cfg._canon if torus else (lambda p: p)
    for e in edges:
        for v in edge_endpoints(e):
            if torus or _vacancy_support_touches(v, region):
                vac.setdefault(key(v), v)
        for f in colinear_link_neighbors(e):
            if torus or _link_support_touches(f, region):
                mid.setdefault(key(f), f)
    return list(vac.values()), list(mid.values())


def energy_delta(cfg: DimerConfig, params: ModelParams, move: Move,
                 region: Rect | None = None) -> float:
    """Energy change of a move, from recomputing only the affected potentials."""
    region = region or cfg.window
    touched = {move[1]} if move[0] in ("insert", "delete") else {move[1], move[2]}
    vac, mid = _affected_potentials(cfg, touched, region)
    new = apply_move(cfg, move)

    def local(c: DimerConfig) -> float:
        h = 0.0
        for v in vac:
            if not c.covered(v):
                h += (params.lam + params.a) / 2
        for f in mid:
            lo, hi = colinear_link_neighbors(f)
            if int(c.occupied(lo)) + int(c.occupied(hi)) == 1:
                h += params.a / 2
        return h

    return local(new) - local(cfg)


# -- serialization -------------------------------------------------------


def _bc_token(bc: BoundaryCondition) -> str:
    if isinstance(bc, Periodic):
        return "periodic"
    if isinstance(bc, Vacant):
        return "vacant"
    pat = bc.pattern
    eds = ";".join(f"{e[0]},{e[1]}" for e in sorted(pat.edges))
    return f"prescribed:{pat.px},{pat.py}:{eds}"


def _bc_from_token(tok: str) -> BoundaryCondition:
    if tok == "periodic":
        return Periodic()
    if tok == "vacant":
        return Vacant()
    if tok.startswith("prescribed:"):
        _, periods, eds = tok.split(":", 2)
        px, py = (int(s) for s in periods.split(","))
        edges = frozenset(tuple(int(c) for c in part.split(","))
                          for part in eds.split(";") if part)
        return Prescribed(PeriodicPattern(px, py, edges))
    raise ValueError(f"unknown boundary token {tok!r}")


def config_to_text(cfg: DimerConfig) -> str:
    """Plain-text form: header "W H BC", then one "dx dy" line per occupied
    edge in doubled coordinates.  Windows must sit at the canonical origin
    (lower-left corner at (-1/2, -1/2))."""
    if (cfg.window.x0d, cfg.window.y0d) != (-1, -1):
        raise ValueError("serialization expects the canonical window origin (-1/2, -1/2)")
    lines = [f"{cfg.window.width} {cfg.window.height} {_bc_token(cfg.bc)}"]
    for e in sorted(cfg.edges):
        lines.append(f"{e[0]} {e[1]}")
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> DimerConfig:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError(f"bad config header {lines[0]!r}")
    w, h, bc = int(head[0]), int(head[1]), _bc_from_token(head[2])
    edges = []
    for ln in lines[1:]:
        dx, dy = (int(s) for s in ln.split())
        edges.append((dx, dy))
    return DimerConfig(Rect(-1, -1, w, h), bc, edges)


def save_config(cfg: DimerConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(config_to_text(cfg))


def load_config(path) -> DimerConfig:
    with open(path) as fh:
        return config_from_text(fh.read())
