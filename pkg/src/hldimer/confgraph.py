"""Configuration graphs of vacant-boundary windows.

The configuration graph of a dimer configuration on a window L lives on
the dual vertices meeting L' (the window padded by one cell on each
side).  A dual edge is present unless the lattice edge it crosses is a
dimer or a link between two dimers; present edges carry a label:

* v   adjacent to a vacancy
* b   crossed by a broken link
* bv  both
* s   neither: exactly the stick edges

v(G) counts vacancies whose four surrounding dual edges are present,
b(G) counts broken links whose crossing dual edge is present, and
w(G) = vacancy_weight^v(G) * link_weight^b(G) equals vacancy_weight^4
times the configuration's own Gibbs weight (the four corner vacancies
of L' support no potential of the window energy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .lattice import (
    EdgeId,
    Rect,
    VertexId,
    colinear_link_neighbors,
    edge_is_horizontal,
    edge_endpoints,
    incident_edges,
)
from .model import DimerConfig, ModelParams, Vacant, potential_counts
from . import order

EDGE_LABELS = ("s", "b", "v", "bv")

DualEdgeKey = tuple[tuple[int, int], tuple[int, int]]


def _crossing_dual_edge(f: EdgeId) -> DualEdgeKey:
    x, y = f
    if edge_is_horizontal(f):
        return ((x, y - 1), (x, y + 1))
    return ((x - 1, y), (x + 1, y))


def _dual_edge_is_horizontal(d: DualEdgeKey) -> bool:
    return d[0][1] == d[1][1]


def _surrounding_dual_edges(v: VertexId) -> tuple[DualEdgeKey, ...]:
    return tuple(_crossing_dual_edge(f) for f in incident_edges(v))


@dataclass(frozen=True)
class ConfigGraph:
    """Labeled dual-edge graph of one configuration."""

    window: Rect
    outer: Rect
    edges: dict  # DualEdgeKey -> label
    v_count: int
    b_count: int
    vacancies: tuple[VertexId, ...]
    broken_links: tuple[EdgeId, ...]

    def vertices(self) -> list:
        return list(self.outer.dual_vertices())

    def label_counts(self) -> dict:
        out = {lab: 0 for lab in EDGE_LABELS}
        for lab in self.edges.values():
            out[lab] += 1
        return out

    def log_weight(self, params: ModelParams) -> float:
        return (self.v_count * math.log(params.vacancy_weight)
                + self.b_count * math.log(params.link_weight))


def build(cfg: DimerConfig) -> ConfigGraph:
    """Construct the labeled graph and its defect counts; raises if the
    graph ever comes out disconnected (it cannot, and we check)."""
    if not isinstance(cfg.bc, Vacant):
        raise ValueError("configuration graphs need a vacant boundary")
    window = cfg.window
    outer = window.padded(1)
    edges: dict[DualEdgeKey, str] = {}
    broken: list[EdgeId] = []
    for f in outer.edges():
        lo, hi = colinear_link_neighbors(f)
        n_out = int(cfg.occupied(lo)) + int(cfg.occupied(hi))
        if cfg.occupied(f) or n_out == 2:
            continue
        u, w = edge_endpoints(f)
        vac = (not cfg.covered(u)) or (not cfg.covered(w))
        brk = n_out == 1
        if brk:
            broken.append(f)
        if vac and brk:
            lab = "bv"
        elif vac:
            lab = "v"
        elif brk:
            lab = "b"
        else:
            lab = "s"
        edges[_crossing_dual_edge(f)] = lab
    vacancies = []
    for v in outer.vertices():
        if cfg.covered(v):
            continue
        if all(d in edges for d in _surrounding_dual_edges(v)):
            vacancies.append(v)
    graph = ConfigGraph(window=window, outer=outer, edges=edges,
                        v_count=len(vacancies), b_count=len(broken),
                        vacancies=tuple(sorted(vacancies)),
                        broken_links=tuple(sorted(broken)))
    if not _connected(graph):
        raise AssertionError("configuration graph is disconnected")
    return graph


def _adjacency(vertices, edges) -> dict:
    adj = {v: [] for v in vertices}
    for d in edges:
        a, b = d
        adj[a].append((b, d))
        adj[b].append((a, d))
    return adj


def _connected(graph: ConfigGraph) -> bool:
    verts = graph.vertices()
    adj = _adjacency(verts, graph.edges)
    seen = {verts[0]}
    frontier = [verts[0]]
    while frontier:
        v = frontier.pop()
        for w, _ in adj[v]:
            if w not in seen:
                seen.add(w)
                frontier.append(w)
    return len(seen) == len(verts)


def dump(graph: ConfigGraph) -> str:
    """One line per present dual edge: x1d y1d x2d y2d LABEL."""
    lines = []
    for d in sorted(graph.edges):
        (x1, y1), (x2, y2) = d
        lines.append(f"{x1} {y1} {x2} {y2} {graph.edges[d]}")
    return "\n".join(lines)


# -- sub-components ------------------------------------------------------------


def _component_sets(vertices, edges) -> list[tuple[frozenset, frozenset]]:
    """Nontrivial connected components as (vertex set, edge set)."""
    adj = _adjacency(vertices, edges)
    seen = set()
    out = []
    for v0 in vertices:
        if v0 in seen:
            continue
        seen.add(v0)
        comp_v = {v0}
        comp_e = set()
        frontier = [v0]
        while frontier:
            v = frontier.pop()
            for w, d in adj[v]:
                comp_e.add(d)
                if w not in seen:
                    seen.add(w)
                    comp_v.add(w)
                    frontier.append(w)
        if comp_e:
            out.append((frozenset(comp_v), frozenset(comp_e)))
    return out


def sub_component_sets(graph, orientation: str) -> list[tuple[frozenset, frozenset]]:
    """Nontrivial components after deleting the stick edges of the other
    orientation: orientation 'v' deletes horizontal s-edges."""
    if orientation not in ("v", "h"):
        raise ValueError("orientation must be 'v' or 'h'")
    drop_horizontal = orientation == "v"
    kept = {d: lab for d, lab in graph.edges.items()
            if not (lab == "s" and _dual_edge_is_horizontal(d) == drop_horizontal)}
    if hasattr(graph, "vertex_set"):
        vertices = sorted(graph.vertex_set)
    else:
        vertices = graph.vertices()
    return _component_sets(vertices, kept)


def sub_components(graph) -> tuple[int, int, int]:
    """(k_ver, k_hor, k): counts of nontrivial vertical and horizontal
    sub-components."""
    k_ver = len(sub_component_sets(graph, "v"))
    k_hor = len(sub_component_sets(graph, "h"))
    return k_ver, k_hor, k_ver + k_hor


# -- compression ----------------------------------------------------------------


@dataclass(frozen=True)
class CompressedGraph:
    """Configuration graph with each stick contracted to one s-edge."""

    window: Rect
    outer: Rect
    vertex_set: frozenset
    edges: dict  # (dual endpoint, dual endpoint) -> label, possibly long
    k_ver: int
    k_hor: int
    k: int
    all_nontrivial: bool


def _stick_runs(graph: ConfigGraph) -> list[list[DualEdgeKey]]:
    """Maximal straight runs of s-labeled dual edges."""
    s_edges = [d for d, lab in graph.edges.items() if lab == "s"]
    vertical = {}
    horizontal = {}
    for d in s_edges:
        if _dual_edge_is_horizontal(d):
            horizontal.setdefault(d[0][1], []).append(d)
        else:
            vertical.setdefault(d[0][0], []).append(d)
    runs = []
    for group, coord in ((vertical, 1), (horizontal, 0)):
        for line_edges in group.values():
            line_edges.sort(key=lambda d: d[0][coord])
            run = [line_edges[0]]
            for d in line_edges[1:]:
                if d[0][coord] == run[-1][1][coord] \
                        and d[0][1 - coord] == run[-1][1][1 - coord]:
                    run.append(d)
                else:
                    runs.append(run)
                    run = [d]
            runs.append(run)
    return runs


def compress(graph: ConfigGraph) -> CompressedGraph:
    """Replace every stick by a single s-edge between its endpoints; the
    interior vertices of a stick have no other incident edges, so the
    component structure cannot change."""
    edges = dict(graph.edges)
    drop_vertices = set()
    for run in _stick_runs(graph):
        if len(run) == 1:
            continue
        chain = [run[0][0]]
        for d in run:
            chain.append(d[1])
        for d in run:
            del edges[d]
        edges[(chain[0], chain[-1])] = "s"
        drop_vertices.update(chain[1:-1])
    vertex_set = frozenset(v for v in graph.outer.dual_vertices()
                           if v not in drop_vertices)
    # component counts of the reduced graphs, and whether dropping the
    # other orientation's sticks ever isolates a vertex
    all_nontrivial = True
    counts = {}
    for orientation, drop_horizontal in (("v", True), ("h", False)):
        kept = {d: lab for d, lab in edges.items()
                if not (lab == "s"
                        and _dual_edge_is_horizontal(d) == drop_horizontal)}
        comps = _component_sets(sorted(vertex_set), kept)
        touched = set()
        for cv, _ in comps:
            touched |= cv
        if touched != vertex_set:
            all_nontrivial = False
        counts[orientation] = len(comps)
    return CompressedGraph(window=graph.window, outer=graph.outer,
                           vertex_set=vertex_set, edges=edges,
                           k_ver=counts["v"], k_hor=counts["h"],
                           k=counts["v"] + counts["h"],
                           all_nontrivial=all_nontrivial)


# -- stick-length events ---------------------------------------------------------


def in_EM(cfg: DimerConfig, M: int) -> bool:
    """No stick longer than M dual edges."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return all(s.n_edges <= M for s in order.sticks(cfg))


def _segment_contains(seg, stick) -> bool:
    return (seg.orientation == stick.orientation
            and seg.axis_d == stick.axis_d
            and seg.start_d <= stick.start_d
            and stick.end_d <= seg.end_d)


def in_EMA(cfg: DimerConfig, M: int, segments) -> bool:
    """Every stick longer than M is fully contained in a segment of the
    allowed family."""
    if M < 1:
        raise ValueError("M must be >= 1")
    for s in order.sticks(cfg):
        if s.n_edges > M and not any(_segment_contains(seg, s)
                                     for seg in segments):
            return False
    return True


# -- inequality checks ------------------------------------------------------------


def weight_identity_gap(cfg: DimerConfig, graph: ConfigGraph,
                        params: ModelParams) -> float:
    """|log w(G) - 4 log vacancy_weight - log w(cfg)|, which is zero in
    exact arithmetic."""
    nvac, nlink = potential_counts(cfg)
    log_w_cfg = (nvac * math.log(params.vacancy_weight)
                 + nlink * math.log(params.link_weight))
    return abs(graph.log_weight(params)
               - 4 * math.log(params.vacancy_weight) - log_w_cfg)


def component_bound_holds(graph, n_dimers: int) -> bool:
    """k <= b/2 + 1 when b < 2v, else k <= 2v/3 + b/6 + 1.

    The bound needs at least one dimer (its derivation charges defects to
    sub-component intersections); a dimerless window has no stick edges,
    so both restricted graphs equal G and k = 2 exactly.
    """
    _, _, k = sub_components(graph)
    if n_dimers < 1:
        return k == 2
    v, b = graph.v_count, graph.b_count
    if b < 2 * v:
        return k <= b / 2 + 1
    return k <= 2 * v / 3 + b / 6 + 1


def defect_chasing_violations(graph: ConfigGraph, n_dimers: int) -> list:
    """Intersecting (vertical, horizontal) sub-component pairs that share
    neither two broken links plus a vacancy nor six broken links; empty
    for every configuration with at least one dimer."""
    if n_dimers < 1:
        return []
    ver = sub_component_sets(graph, "v")
    hor = sub_component_sets(graph, "h")
    dual_of_brk = {f: _crossing_dual_edge(f) for f in graph.broken_links}
    surround = {v: _surrounding_dual_edges(v) for v in graph.vacancies}
    out = []
    for av, ae in ver:
        for bv_, be in hor:
            if not (av & bv_):
                continue
            shared_edges = ae & be
            n_brk = sum(1 for d in dual_of_brk.values() if d in shared_edges)
            n_vac = sum(1 for ds in surround.values()
                        if all(d in shared_edges for d in ds))
            if not ((n_brk >= 2 and n_vac >= 1) or n_brk >= 6):
                out.append((sorted(av & bv_)[0], n_brk, n_vac))
    return out


def defect_lower_bound_holds(graph: ConfigGraph, M: int) -> bool:
    """(2M+1) b + (8M+5) v >= area(L') whenever no stick exceeds M."""
    area = graph.outer.area
    return (2 * M + 1) * graph.b_count + (8 * M + 5) * graph.v_count >= area
