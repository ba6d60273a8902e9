"""Square-lattice geometry in doubled integer coordinates.

All points live on the half-integer grid, stored with both coordinates
doubled so that everything is exact integer arithmetic:

* lattice vertex: both doubled coordinates even, e.g. (0, 0), (2, -4)
* edge, identified with its midpoint: exactly one doubled coordinate odd;
  the odd slot tells the orientation (odd x = horizontal edge)
* dual-lattice vertex (face center): both doubled coordinates odd

Rectangles are closed regions with half-integer corners, so their corner
coordinates are odd in doubled form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

Point = tuple[int, int]  # doubled coordinates
VertexId = tuple[int, int]  # doubled, both even
EdgeId = tuple[int, int]  # doubled midpoint, exactly one odd
DualVertexId = tuple[int, int]  # doubled, both odd
DualEdge = tuple[DualVertexId, DualVertexId]  # endpoints sorted


def is_vertex(p: Point) -> bool:
    return p[0] % 2 == 0 and p[1] % 2 == 0


def is_edge(p: Point) -> bool:
    return (p[0] % 2) + (p[1] % 2) == 1


def is_dual_vertex(p: Point) -> bool:
    return p[0] % 2 == 1 and p[1] % 2 == 1


def edge_is_horizontal(e: EdgeId) -> bool:
    return e[0] % 2 == 1


def edge_axis(e: EdgeId) -> Point:
    """Doubled step from the midpoint to one endpoint (the edge direction)."""
    return (1, 0) if edge_is_horizontal(e) else (0, 1)


def edge_endpoints(e: EdgeId) -> tuple[VertexId, VertexId]:
    ax, ay = edge_axis(e)
    return (e[0] - ax, e[1] - ay), (e[0] + ax, e[1] + ay)


def incident_edges(v: VertexId) -> tuple[EdgeId, EdgeId, EdgeId, EdgeId]:
    """The four edges meeting a vertex, in east, north, west, south order."""
    x, y = v
    return ((x + 1, y), (x, y + 1), (x - 1, y), (x, y - 1))


def colinear_link_neighbors(e: EdgeId) -> tuple[EdgeId, EdgeId]:
    """The two edges adjacent to e along its own line (sharing one endpoint)."""
    ax, ay = edge_axis(e)
    return (e[0] - 2 * ax, e[1] - 2 * ay), (e[0] + 2 * ax, e[1] + 2 * ay)


def ddag_neighbors(e: EdgeId) -> tuple[EdgeId, ...]:
    """The eight neighbors of an edge: six sharing a vertex plus the two
    colinear edges separated from e by exactly one edge."""
    u, w = edge_endpoints(e)
    out = []
    for v in (u, w):
        for f in incident_edges(v):
            if f != e:
                out.append(f)
    ax, ay = edge_axis(e)
    out.append((e[0] - 4 * ax, e[1] - 4 * ay))
    out.append((e[0] + 4 * ax, e[1] + 4 * ay))
    return tuple(out)


@dataclass(frozen=True)
class Rect:
    """Closed axis-aligned rectangle with half-integer corners.

    (x0d, y0d) is the doubled lower-left corner (both odd); width and
    height are the integer side lengths.
    """

    x0d: int
    y0d: int
    width: int
    height: int

    def __post_init__(self):
        if self.x0d % 2 == 0 or self.y0d % 2 == 0:
            raise ValueError(f"rect corner must be half-integer, got {(self.x0d, self.y0d)}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"rect sides must be >= 1, got {(self.width, self.height)}")

    @property
    def x1d(self) -> int:
        return self.x0d + 2 * self.width

    @property
    def y1d(self) -> int:
        return self.y0d + 2 * self.height

    @property
    def area(self) -> int:
        return self.width * self.height

    def contains(self, p: Point) -> bool:
        return self.x0d <= p[0] <= self.x1d and self.y0d <= p[1] <= self.y1d

    def contains_rect(self, other: "Rect") -> bool:
        return (self.x0d <= other.x0d and other.x1d <= self.x1d
                and self.y0d <= other.y0d and other.y1d <= self.y1d)

    def vertices(self) -> Iterator[VertexId]:
        for x in range(self.x0d + 1, self.x1d, 2):
            for y in range(self.y0d + 1, self.y1d, 2):
                yield (x, y)

    def edges(self) -> Iterator[EdgeId]:
        # horizontal midpoints: odd x (corner columns included), even y
        for x in range(self.x0d, self.x1d + 1, 2):
            for y in range(self.y0d + 1, self.y1d, 2):
                yield (x, y)
        for x in range(self.x0d + 1, self.x1d, 2):
            for y in range(self.y0d, self.y1d + 1, 2):
                yield (x, y)

    def dual_vertices(self) -> Iterator[DualVertexId]:
        for x in range(self.x0d, self.x1d + 1, 2):
            for y in range(self.y0d, self.y1d + 1, 2):
                yield (x, y)

    def padded(self, n: int) -> "Rect":
        return Rect(self.x0d - 2 * n, self.y0d - 2 * n, self.width + 2 * n, self.height + 2 * n)

    def shrunk_concentric(self, grain: int) -> "Rect":
        """Concentric rectangle whose sides are scaled by (1 - 2/grain)."""
        if grain <= 2:
            raise ValueError("grain must be an integer > 2")
        if self.width % grain or self.height % grain:
            raise ValueError(f"sides {(self.width, self.height)} not divisible by grain {grain}")
        dx = self.width // grain
        dy = self.height // grain
        return Rect(self.x0d + 2 * dx, self.y0d + 2 * dy, self.width - 2 * dx, self.height - 2 * dy)

    def translated(self, dxd: int, dyd: int) -> "Rect":
        return Rect(self.x0d + dxd, self.y0d + dyd, self.width, self.height)


def rect_at(x0_numer: int, y0_numer: int, width: int, height: int) -> Rect:
    """Rect from doubled corner coordinates (convenience alias)."""
    return Rect(x0_numer, y0_numer, width, height)


@dataclass(frozen=True)
class Isometry:
    """Axis-aligned lattice isometry in doubled coordinates:
    (x, y) -> (sx*x + tx, sy*y + ty) with sx, sy in {-1, +1}.

    Offsets must be even so vertices map to vertices and edges to edges.
    """

    sx: int
    tx: int
    sy: int
    ty: int

    def __post_init__(self):
        if self.sx not in (-1, 1) or self.sy not in (-1, 1):
            raise ValueError("signs must be +-1")
        if self.tx % 2 or self.ty % 2:
            raise ValueError("offsets must be even in doubled coordinates")

    def apply(self, p: Point) -> Point:
        return (self.sx * p[0] + self.tx, self.sy * p[1] + self.ty)

    def apply_rect(self, r: Rect) -> Rect:
        ax, ay = self.apply((r.x0d, r.y0d))
        bx, by = self.apply((r.x1d, r.y1d))
        return Rect(min(ax, bx), min(ay, by), r.width, r.height)

    def compose(self, other: "Isometry") -> "Isometry":
        """self after other: (self.compose(other))(p) = self(other(p))."""
        return Isometry(self.sx * other.sx, self.sx * other.tx + self.tx,
                        self.sy * other.sy, self.sy * other.ty + self.ty)

    def inverse(self) -> "Isometry":
        return Isometry(self.sx, -self.sx * self.tx, self.sy, -self.sy * self.ty)

    @staticmethod
    def identity() -> "Isometry":
        return Isometry(1, 0, 1, 0)

    @staticmethod
    def translation(txd: int, tyd: int) -> "Isometry":
        return Isometry(1, txd, 1, tyd)

    @staticmethod
    def reflection_x(line_xd: int) -> "Isometry":
        """Reflection across the vertical line x = line_xd (doubled)."""
        return Isometry(-1, 2 * line_xd, 1, 0)

    @staticmethod
    def reflection_y(line_yd: int) -> "Isometry":
        return Isometry(1, 0, -1, 2 * line_yd)


def _axis_transforms(anchor_d: int, side: int, count: int, horizontal: bool) -> list[Isometry]:
    # j-th translate of the block along one axis: even j is a translation,
    # odd j a reflection across a grid line, so the group is generated by
    # reflections across x = anchor + side*Z
    out = []
    for j in range(count):
        if j % 2 == 0:
            off = 2 * side * j
            out.append(Isometry.translation(off, 0) if horizontal else Isometry.translation(0, off))
        else:
            line = anchor_d + (j + 1) * side
            out.append(Isometry.reflection_x(line) if horizontal else Isometry.reflection_y(line))
    return out


def block_transforms(block: Rect, domain: Rect) -> list[Isometry]:
    """All reflection-group elements carrying a block to the translates that
    tile the domain, one per grid cell, identity first.

    The block must tile the domain an even number of times in each
    direction (reflections must close up around the torus).
    """
    if domain.width % (2 * block.width) or domain.height % (2 * block.height):
        raise ValueError(
            f"block {(block.width, block.height)} does not evenly divide "
            f"domain {(domain.width, domain.height)} an even number of times")
    nx = domain.width // block.width
    ny = domain.height // block.height
    xs = _axis_transforms(block.x0d, block.width, nx, horizontal=True)
    ys = _axis_transforms(block.y0d, block.height, ny, horizontal=False)
    return [ix.compose(iy) for iy in ys for ix in xs]


BOX_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))
BOXTIMES_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


def components(points: Iterable[tuple[int, int]], connectivity: str = "box") -> list[set]:
    """Connected components of a finite set of integer points.

    connectivity "box" uses the four 1-norm neighbors, "boxtimes" the
    eight sup-norm neighbors.
    """
    if connectivity == "box":
        steps = BOX_STEPS
    elif connectivity == "boxtimes":
        steps = BOXTIMES_STEPS
    else:
        raise ValueError(f"unknown connectivity {connectivity!r}")
    todo = set(points)
    out = []
    while todo:
        seed = todo.pop()
        comp = {seed}
        frontier = [seed]
        while frontier:
            x, y = frontier.pop()
            for dx, dy in steps:
                q = (x + dx, y + dy)
                if q in todo:
                    todo.remove(q)
                    comp.add(q)
                    frontier.append(q)
        out.append(comp)
    return out
