"""Exhaustive enumeration of dimer configurations on small windows.

Enumerates every hard-core subset of the free edges by backtracking, with
vertex coverage seeded from the boundary condition.  Intended for windows
with at most a few dozen free edges; partition functions and expectations
over the resulting ensemble serve as ground truth for the samplers and
inequalities elsewhere in the package.
"""

from __future__ import annotations

import dataclasses
import functools
import hashlib
import itertools
import math
from typing import Callable, Iterator, Mapping

import numpy as np

from .lattice import Isometry, Rect, block_transforms, edge_endpoints, incident_edges
from .model import (
    BoundaryCondition,
    DimerConfig,
    ModelParams,
    Periodic,
    log_weight,
    potential_counts,
)


def enumerate_configs(window: Rect, bc: BoundaryCondition,
                      max_edges: int = 40,
                      fixed: Mapping | None = None) -> Iterator[DimerConfig]:
    """Yield every valid configuration on the window, empty one first,
    otherwise in lexicographic order of the occupied edge list.

    `fixed` pins free edges to an occupancy (edge midpoint -> bool); the
    streams over all assignments of a fixed set partition the full stream,
    so independent subtree searches can be merged by summation."""
    base = DimerConfig.empty(window, bc)
    free = base.free_edges()
    if len(free) > max_edges:
        raise ValueError(f"{len(free)} free edges exceeds the enumeration "
                         f"guard of {max_edges}")
    pinned = dict(fixed) if fixed else {}
    unknown = set(pinned) - set(free)
    if unknown:
        raise ValueError(f"fixed edges {sorted(unknown)} are not free edges")

    canon = base._canon if base.is_torus else (lambda p: p)
    ends = [tuple(canon(v) for v in edge_endpoints(e)) for e in free]

    # vertices already covered by dimers the boundary condition forces
    blocked0 = set()
    for e, (a, b) in zip(free, ends):
        for v, k in zip(edge_endpoints(e), (a, b)):
            if any(not base._in_free_region(f) and base.occupied(f)
                   for f in incident_edges(v)):
                blocked0.add(k)

    n = len(free)
    chosen: list = []
    blocked = set(blocked0)

    def rec(i: int) -> Iterator[DimerConfig]:
        if i == n:
            yield DimerConfig(window, bc, chosen)
            return
        pin = pinned.get(free[i])
        if pin is not True:
            yield from rec(i + 1)
        if pin is not False:
            a, b = ends[i]
            if a not in blocked and b not in blocked and a != b:
                blocked.add(a)
                blocked.add(b)
                chosen.append(free[i])
                yield from rec(i + 1)
                chosen.pop()
                blocked.discard(a)
                blocked.discard(b)

    yield from rec(0)


def weighted_ensemble(window: Rect, bc: BoundaryCondition, params: ModelParams,
                      region: Rect | None = None,
                      max_edges: int = 40) -> tuple[list[DimerConfig], np.ndarray]:
    """All configurations plus their unnormalized Gibbs weights."""
    configs = list(enumerate_configs(window, bc, max_edges))
    logw = np.array([log_weight(c, params, region) for c in configs])
    return configs, np.exp(logw)


def partition_function(window: Rect, bc: BoundaryCondition, params: ModelParams,
                       constraint: Callable[[DimerConfig], object] | None = None,
                       region: Rect | None = None, max_edges: int = 40) -> float:
    """Exact finite-volume partition function, summed with compensation
    (largest weights first).  With a constraint, sums only over the
    configurations in the event."""
    configs, w = weighted_ensemble(window, bc, params, region, max_edges)
    if constraint is not None:
        keep = np.array([bool(constraint(c)) for c in configs])
        w = w[keep]
    return math.fsum(sorted(w, reverse=True))


def log_partition_function(window: Rect, bc: BoundaryCondition, params: ModelParams,
                           region: Rect | None = None, max_edges: int = 40) -> float:
    """log Z computed with a max shift, safe when weights under/overflow."""
    configs = list(enumerate_configs(window, bc, max_edges))
    logw = np.array([log_weight(c, params, region) for c in configs])
    m = float(logw.max())
    return m + math.log(math.fsum(sorted(np.exp(logw - m), reverse=True)))


def expectation(window: Rect, bc: BoundaryCondition, params: ModelParams,
                observable: Callable[[DimerConfig], float],
                region: Rect | None = None, max_edges: int = 40) -> float:
    """Gibbs expectation of a scalar observable by full enumeration."""
    configs, w = weighted_ensemble(window, bc, params, region, max_edges)
    vals = np.array([observable(c) for c in configs])
    z = math.fsum(sorted(w, reverse=True))
    return math.fsum(sorted(vals * w, key=abs, reverse=True)) / z


def count_histogram(window: Rect, bc: BoundaryCondition,
                    region: Rect | None = None,
                    max_edges: int = 40) -> dict[tuple[int, int], int]:
    """Multiplicity of each (vacancy, broken-link) potential count pair.
    The partition function at any parameters is recoverable from this."""
    hist: dict[tuple[int, int], int] = {}
    for c in enumerate_configs(window, bc, max_edges):
        key = potential_counts(c, region)
        hist[key] = hist.get(key, 0) + 1
    return hist


# -- local events, reflection positivity, chessboard estimates ---------------
#
# The torus Gibbs measure is invariant under the group generated by
# reflections across the grid lines of a block tiling, which gives the
# chessboard estimate: the probability that prescribed local events happen
# in several cells is at most the product of their seminorms.  Everything
# below evaluates both sides by full enumeration, reusing one cached
# ensemble per (window, params) and turning each group element into a
# permutation of the configuration list.


@dataclasses.dataclass(frozen=True)
class EventPredicate:
    """Deterministic function of one configuration (or of a k-tuple), local
    to a rectangle: the value may depend only on the occupancies of edges
    whose midpoint lies in the closed rectangle."""

    fn: Callable[..., object]
    rect: Rect
    arity: int = 1

    def __call__(self, *cfgs) -> float:
        if len(cfgs) != self.arity:
            raise TypeError(f"event takes {self.arity} configurations, "
                            f"got {len(cfgs)}")
        return float(self.fn(*cfgs))


def _stable_sum(arr) -> float:
    return math.fsum(sorted(arr, key=abs, reverse=True))


@functools.lru_cache(maxsize=8)
def _torus_configs(window: Rect, max_edges: int):
    configs = tuple(enumerate_configs(window, Periodic(), max_edges))
    index = {c: i for i, c in enumerate(configs)}
    return configs, index


@functools.lru_cache(maxsize=32)
def _torus_probs(window: Rect, params: ModelParams, max_edges: int) -> np.ndarray:
    configs, _ = _torus_configs(window, max_edges)
    logw = np.array([log_weight(c, params) for c in configs])
    w = np.exp(logw - logw.max())
    return w / math.fsum(sorted(w, reverse=True))


@functools.lru_cache(maxsize=256)
def _pullback_perm(window: Rect, iso: Isometry, max_edges: int) -> np.ndarray:
    """Permutation p with configs[p[i]] = configs[i] composed with iso."""
    configs, index = _torus_configs(window, max_edges)
    return np.array([index[c.pullback(iso)] for c in configs], dtype=np.intp)


def _event_values(event, configs, cache: dict) -> np.ndarray:
    key = id(event)
    if key not in cache:
        cache[key] = np.array([float(event(c)) for c in configs])
    return cache[key]


def _product_mean(events: Mapping[Isometry, Callable], window: Rect,
                  params: ModelParams, k: int, max_edges: int,
                  cache: dict | None = None) -> float:
    """(x)^k mu^per ( prod_tau tau(E_tau) ) by enumeration; tau acts by
    composition, so tau(E) evaluated at sigma is E(sigma o tau)."""
    configs, _ = _torus_configs(window, max_edges)
    probs = _torus_probs(window, params, max_edges)
    perms = {t: _pullback_perm(window, t, max_edges) for t in events}
    n = len(configs)
    if k == 1:
        if cache is None:
            cache = {}
        prod = probs.copy()
        for t, e in events.items():
            prod = prod * _event_values(e, configs, cache)[perms[t]]
        return _stable_sum(prod)
    if n ** k > 4_000_000:
        raise ValueError(f"{n}^{k} tuples exceed the enumeration guard")
    terms = []
    for idx in itertools.product(range(n), repeat=k):
        f = 1.0
        for t, e in events.items():
            p = perms[t]
            f *= float(e(*(configs[p[i]] for i in idx)))
            if f == 0.0:
                break
        if f != 0.0:
            for i in idx:
                f *= probs[i]
            terms.append(f)
    return _stable_sum(terms)


def chessboard_seminorm(event, block: Rect, window: Rect, params: ModelParams,
                        k: int = 1, max_edges: int = 40,
                        _cache: dict | None = None) -> float:
    """|T|-th root of the mean of the event spread by every element of the
    block's reflection group; the torus partition function normalizes."""
    transforms = block_transforms(block, window)
    arity = getattr(event, "arity", k)
    if arity != k:
        raise ValueError(f"event arity {arity} does not match k={k}")
    full = _product_mean({t: event for t in transforms}, window, params, k,
                         max_edges, _cache)
    if full < -1e-12:
        raise ArithmeticError(f"negative symmetrized mean {full}")
    return max(full, 0.0) ** (1.0 / len(transforms))


def rp_check(f, block: Rect, window: Rect, params: ModelParams,
             tau: Isometry | None = None, max_edges: int = 40) -> float:
    """mu^per(f * tau(f)) for an observable local to the block, with the
    reflection pairing the block with the other half of a once-doubled
    torus.  Nonnegative up to roundoff; the caller asserts the sign."""
    wide = window.width == 2 * block.width and window.height == block.height
    tall = window.height == 2 * block.height and window.width == block.width
    if tau is None:
        if wide:
            tau = Isometry.reflection_x(block.x1d)
        elif tall:
            tau = Isometry.reflection_y(block.y1d)
        else:
            raise ValueError(
                f"window {(window.width, window.height)} is not the block "
                f"{(block.width, block.height)} doubled along one axis")
    else:
        allowed = []
        if wide:
            allowed += [Isometry.reflection_x(block.x0d),
                        Isometry.reflection_x(block.x1d)]
        if tall:
            allowed += [Isometry.reflection_y(block.y0d),
                        Isometry.reflection_y(block.y1d)]
        if tau not in allowed:
            raise ValueError("reflection does not swap the block with its "
                             "complement in the window")
    configs, _ = _torus_configs(window, max_edges)
    probs = _torus_probs(window, params, max_edges)
    perm = _pullback_perm(window, tau, max_edges)
    vals = np.array([float(f(c)) for c in configs])
    return _stable_sum(vals * vals[perm] * probs)


def chessboard_check(events: Mapping[Isometry, Callable], block: Rect,
                     window: Rect, params: ModelParams, k: int = 1,
                     max_edges: int = 40) -> tuple[float, float]:
    """Both sides of the chessboard estimate for events placed at a subset
    of the block's transforms: lhs = joint mean, rhs = product of
    seminorms.  The caller asserts lhs <= rhs."""
    tset = set(block_transforms(block, window))
    stray = [t for t in events if t not in tset]
    if stray:
        raise ValueError(f"{len(stray)} transforms are not in the block group")
    shared: dict = {}
    lhs = _product_mean(events, window, params, k, max_edges, shared)
    rhs = 1.0
    for e in events.values():
        rhs *= chessboard_seminorm(e, block, window, params, k, max_edges,
                                   _cache=shared)
    return lhs, rhs


# -- deterministic random local functions and locality auditing --------------


def _restriction_key(cfg: DimerConfig, edge_list) -> bytes:
    return bytes(int(cfg.occupied(e)) for e in edge_list)


def random_local_event(rect: Rect, seed: int, arity: int = 1) -> EventPredicate:
    """A 0/1 event local to the rectangle, chosen by hashing the restriction
    of the configuration(s) to it; reproducible across runs."""
    edge_list = tuple(sorted(rect.edges()))
    salt = seed.to_bytes(8, "big", signed=True)

    def fn(*cfgs) -> int:
        h = hashlib.blake2b(salt, digest_size=8)
        for c in cfgs:
            h.update(_restriction_key(c, edge_list))
        return int.from_bytes(h.digest(), "big") & 1

    return EventPredicate(fn, rect, arity)


def random_local_observable(rect: Rect, seed: int) -> EventPredicate:
    """A +-1-valued observable local to the rectangle, hash-seeded."""
    inner = random_local_event(rect, seed)
    return EventPredicate(lambda c: 2.0 * inner.fn(c) - 1.0, rect, 1)


def check_locality(event, window: Rect, bc: BoundaryCondition,
                   max_edges: int = 40) -> int:
    """Verify by enumeration that an arity-1 event only looks at edges
    inside its rectangle; returns the number of distinct restriction
    patterns seen.  Raises if two configurations with equal restrictions
    disagree on the event."""
    edge_list = tuple(sorted(event.rect.edges()))
    seen: dict[bytes, tuple[float, DimerConfig]] = {}
    for c in enumerate_configs(window, bc, max_edges):
        key = _restriction_key(c, edge_list)
        val = float(event(c))
        if key in seen:
            old, first = seen[key]
            if val != old:
                raise ValueError(
                    f"event is not local to {event.rect}: value changed "
                    f"from {old} to {val} with the restriction fixed")
        else:
            seen[key] = (val, c)
    return len(seen)
