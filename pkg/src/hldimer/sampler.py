"""Seeded Metropolis Monte Carlo for the dimer model on tori.

The default move set proposes a uniformly random edge and toggles it:
occupied edges are offered for deletion, empty insertable edges for
insertion, and insertions blocked by the hard core count as rejected
proposals, which keeps the edge proposal symmetric.  Rotation (pivot a
dimer to a perpendicular position about one of its endpoints) and slide
(translate it by one lattice unit) moves are available behind
probability flags; both pick one of four targets uniformly, so their
proposals are symmetric as well.  Acceptance is min(1, exp(-beta dH)).

Randomness comes from four PCG64 streams per chain, one per draw kind
(edge, move type, move variant, acceptance), derived from
SeedSequence((seed, chain_index)).  Each proposal consumes one draw
from every stream whether or not the draw is used, so runs are
bit-reproducible for a fixed seed no matter how the work is chunked,
and the pure python `step` reproduces the compiled kernel draw for
draw.  One sweep is one proposal per edge.  Chains never share state;
parallelism only ever runs distinct chains side by side.
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numba
import numpy as np

from .lattice import Rect, edge_endpoints
from .model import DimerConfig, ModelParams, Periodic, load_config

INIT_CHOICES = ("empty", "packed_vertical", "packed_horizontal", "from_file")

# move kind codes shared by the kernel and the python step
_INSERT, _DELETE, _ROTATE, _SLIDE = 0, 1, 2, 3
MOVE_KINDS = ("insert", "delete", "rotate", "slide")


@dataclasses.dataclass(frozen=True)
class ChainSpec:
    """Everything that determines one chain, including its randomness."""

    torus: Rect
    params: ModelParams
    seed: int
    sweeps: int
    burn_in: int = 0
    measure_every: int = 1
    init: str = "empty"
    init_path: str | None = None
    anneal: tuple[tuple[float, int], ...] | None = None
    rotate_prob: float = 0.0
    slide_prob: float = 0.0
    snapshot_every: int = 0

    def __post_init__(self):
        if self.torus.width < 2 or self.torus.height < 2:
            raise ValueError("torus must be at least 2x2")
        if self.sweeps <= 0:
            raise ValueError("sweeps must be positive")
        if self.burn_in < 0 or self.measure_every <= 0 or self.snapshot_every < 0:
            raise ValueError("bad schedule")
        if self.init not in INIT_CHOICES:
            raise ValueError(f"init must be one of {INIT_CHOICES}")
        if self.init == "from_file" and not self.init_path:
            raise ValueError("from_file init needs init_path")
        if self.init in ("packed_vertical", "packed_horizontal") and (
                self.torus.width % 2 or self.torus.height % 2):
            raise ValueError("packed init needs even torus dimensions")
        if self.rotate_prob < 0 or self.slide_prob < 0 or \
                self.rotate_prob + self.slide_prob > 1:
            raise ValueError("move probabilities must be in [0,1] and sum <= 1")
        if self.anneal is not None:
            object.__setattr__(self, "anneal", tuple(
                (float(b), int(n)) for b, n in self.anneal))
            for b, n in self.anneal:
                if b <= 0 or n < 0:
                    raise ValueError("anneal stages need beta > 0, sweeps >= 0")


@dataclasses.dataclass
class RunRecord:
    """Measurements of one chain plus its bookkeeping.  Arrays are indexed
    by measurement; counters cover every proposal of the run (annealing
    and burn-in included)."""

    spec: ChainSpec
    sweep_index: np.ndarray
    horizontal_dimers: np.ndarray
    vertical_dimers: np.ndarray
    vacancy_count: np.ndarray
    broken_link_count: np.ndarray
    energy: np.ndarray
    proposals: dict[str, int]
    accepts: dict[str, int]
    final: DimerConfig
    # exact per-proposal time averages over the measurement phase; these
    # resolve occupations orders of magnitude below 1/len(sweep_index)
    time_avg_horizontal: float = float("nan")
    time_avg_vertical: float = float("nan")
    # configurations captured at every snapshot_every-th measurement
    snapshots: list = dataclasses.field(default_factory=list)

    def acceptance_rates(self) -> dict[str, float]:
        return {k: (self.accepts[k] / self.proposals[k] if self.proposals[k]
                    else float("nan")) for k in MOVE_KINDS}

    def measurement_rows(self) -> list[dict]:
        rows = []
        for i in range(len(self.sweep_index)):
            rows.append({
                "sweep": int(self.sweep_index[i]),
                "horizontal_dimers": int(self.horizontal_dimers[i]),
                "vertical_dimers": int(self.vertical_dimers[i]),
                "vacancies": int(self.vacancy_count[i]),
                "broken_links": int(self.broken_link_count[i]),
                "energy": float(self.energy[i]),
            })
        return rows

    def write_jsonl(self, path: str) -> None:
        with open(path, "w") as fh:
            for row in self.measurement_rows():
                fh.write(json.dumps(row) + "\n")


# -- geometry tables ---------------------------------------------------------
#
# Torus edges are indexed 0..WH-1 for horizontal (edge from vertex (i,j) to
# (i+1,j) at index j*W+i) and WH..2WH-1 for vertical; vertices are indexed
# j*W+i.  All neighbour relations wrap modulo the torus.


class _Tables:
    def __init__(self, torus: Rect):
        W, H = torus.width, torus.height
        self.torus = torus
        self.W, self.H = W, H
        n = W * H
        self.n_edges = 2 * n
        end1 = np.empty(2 * n, dtype=np.int64)
        end2 = np.empty(2 * n, dtype=np.int64)
        nbrm = np.empty(2 * n, dtype=np.int64)
        nbrp = np.empty(2 * n, dtype=np.int64)
        rot = np.empty((2 * n, 4), dtype=np.int64)
        sld = np.empty((2 * n, 4), dtype=np.int64)

        def vid(i, j):
            return (j % H) * W + (i % W)

        def hid(i, j):
            return (j % H) * W + (i % W)

        def vv(i, j):
            return n + (j % H) * W + (i % W)

        for j in range(H):
            for i in range(W):
                e = hid(i, j)
                end1[e], end2[e] = vid(i, j), vid(i + 1, j)
                nbrm[e], nbrp[e] = hid(i - 1, j), hid(i + 1, j)
                rot[e] = (vv(i, j), vv(i, j - 1), vv(i + 1, j), vv(i + 1, j - 1))
                sld[e] = (hid(i + 1, j), hid(i - 1, j), hid(i, j + 1), hid(i, j - 1))
                e = vv(i, j)
                end1[e], end2[e] = vid(i, j), vid(i, j + 1)
                nbrm[e], nbrp[e] = vv(i, j - 1), vv(i, j + 1)
                rot[e] = (hid(i, j), hid(i - 1, j), hid(i, j + 1), hid(i - 1, j + 1))
                sld[e] = (vv(i + 1, j), vv(i - 1, j), vv(i, j + 1), vv(i, j - 1))

        self.end1, self.end2 = end1, end2
        self.nbrm, self.nbrp = nbrm, nbrp
        self.rot, self.sld = rot, sld

    def edge_midpoint(self, e: int) -> tuple[int, int]:
        """Canonical doubled midpoint (wrapped into the fundamental domain,
        matching how DimerConfig stores torus edges)."""
        n = self.W * self.H
        t = self.torus
        if e < n:
            i, j = e % self.W, e // self.W
            return (t.x0d + (2 + 2 * i) % (2 * self.W), t.y0d + 1 + 2 * j)
        e -= n
        i, j = e % self.W, e // self.W
        return (t.x0d + 1 + 2 * i, t.y0d + (2 + 2 * j) % (2 * self.H))


# -- chain state and randomness ----------------------------------------------


@dataclasses.dataclass
class RngStreams:
    """One PCG64 stream per draw kind; every proposal consumes one draw
    from each, in the order edge, kind, variant, acceptance."""

    edge: np.random.Generator
    kind: np.random.Generator
    variant: np.random.Generator
    accept: np.random.Generator

    @staticmethod
    def for_chain(seed: int, chain_index: int = 0) -> "RngStreams":
        children = np.random.SeedSequence((seed, chain_index)).spawn(4)
        return RngStreams(*(np.random.Generator(np.random.PCG64(c))
                            for c in children))


class SamplerState:
    """Mutable occupancy of one torus chain."""

    def __init__(self, spec: ChainSpec, config: DimerConfig | None = None):
        self.spec = spec
        self.tables = _Tables(spec.torus)
        if config is None:
            config = _initial_config(spec)
        if config.window != spec.torus or not config.is_torus:
            raise ValueError("initial configuration must live on the torus")
        occ_h, occ_v = config.to_arrays()
        W, H = spec.torus.width, spec.torus.height
        occ = np.zeros(2 * W * H, dtype=np.uint8)
        occ[:W * H] = occ_h.T.reshape(-1)
        occ[W * H:] = occ_v.T.reshape(-1)
        self.occ = occ
        cover = np.zeros(W * H, dtype=np.uint8)
        for e in np.nonzero(occ)[0]:
            cover[self.tables.end1[e]] += 1
            cover[self.tables.end2[e]] += 1
        if cover.max() > 1:
            raise ValueError("initial configuration violates the hard core")
        self.cover = cover
        self.proposed = np.zeros(4, dtype=np.int64)
        self.accepted = np.zeros(4, dtype=np.int64)
        # time integral of (horizontal, vertical) dimer counts, one term
        # per proposal, and the number of proposals integrated
        self.orient_acc = np.zeros(2, dtype=np.int64)
        self.orient_steps = 0

    def reset_time_averages(self) -> None:
        self.orient_acc[:] = 0
        self.orient_steps = 0

    def time_averages(self) -> tuple[float, float]:
        if self.orient_steps == 0:
            return float("nan"), float("nan")
        return (self.orient_acc[0] / self.orient_steps,
                self.orient_acc[1] / self.orient_steps)

    def to_config(self) -> DimerConfig:
        W, H = self.tables.W, self.tables.H
        occ_h = self.occ[:W * H].reshape(H, W).T
        occ_v = self.occ[W * H:].reshape(H, W).T
        return DimerConfig.from_arrays(self.spec.torus, Periodic(), occ_h, occ_v)

    def counts(self) -> tuple[int, int, int, int]:
        """(horizontal dimers, vertical dimers, vacancies, broken links)."""
        W, H = self.tables.W, self.tables.H
        nh = int(self.occ[:W * H].sum())
        nv = int(self.occ[W * H:].sum())
        vac = int((self.cover == 0).sum())
        brk = int(((self.occ[self.tables.nbrm].astype(np.int64)
                    + self.occ[self.tables.nbrp]) == 1).sum())
        return nh, nv, vac, brk

    def energy(self) -> float:
        _, _, vac, brk = self.counts()
        p = self.spec.params
        return 0.5 * (p.lam + p.a) * vac + 0.5 * p.a * brk


def _initial_config(spec: ChainSpec) -> DimerConfig:
    if spec.init == "empty":
        return DimerConfig.empty(spec.torus, Periodic())
    if spec.init == "packed_vertical":
        return DimerConfig.packed_vertical(spec.torus, Periodic())
    if spec.init == "packed_horizontal":
        return DimerConfig.packed_horizontal(spec.torus, Periodic())
    cfg = load_config(spec.init_path)
    return cfg


# -- the compiled proposal loop ----------------------------------------------


@numba.njit(cache=True, nogil=True)
def _toggle(occ, cover, end1, end2, nbrm, nbrp, e, lam, a):
    """Flip edge e and return the energy change; callers flip back to undo."""
    m1, m2 = nbrm[e], nbrp[e]
    before = 0
    s = occ[nbrm[m1]] + occ[nbrp[m1]]
    if s == 1:
        before += 1
    if m2 != m1:
        s = occ[nbrm[m2]] + occ[nbrp[m2]]
        if s == 1:
            before += 1
    if occ[e]:
        occ[e] = 0
        cover[end1[e]] -= 1
        cover[end2[e]] -= 1
        dvac = 2.0
    else:
        occ[e] = 1
        cover[end1[e]] += 1
        cover[end2[e]] += 1
        dvac = -2.0
    after = 0
    s = occ[nbrm[m1]] + occ[nbrp[m1]]
    if s == 1:
        after += 1
    if m2 != m1:
        s = occ[nbrm[m2]] + occ[nbrp[m2]]
        if s == 1:
            after += 1
    return 0.5 * (lam + a) * dvac + 0.5 * a * (after - before)


@numba.njit(cache=True, nogil=True)
def _run_proposals(occ, cover, end1, end2, nbrm, nbrp, rot, sld,
                   edge_idx, kind_u, variant_idx, accept_u,
                   beta, lam, a, p_rot, p_sld, proposed, accepted,
                   n_horizontal, orient_acc):
    """Metropolis loop; orient_acc accumulates the per-proposal time
    integral of the (horizontal, vertical) dimer counts, which resolves
    occupations far too rare for snapshot measurements."""
    cur_nh = 0
    cur_nv = 0
    for e in range(occ.shape[0]):
        if occ[e]:
            if e < n_horizontal:
                cur_nh += 1
            else:
                cur_nv += 1
    for k in range(edge_idx.shape[0]):
        e = edge_idx[k]
        tu = kind_u[k]
        u = accept_u[k]
        moved = False
        if tu < p_rot:
            if not occ[e]:
                proposed[_ROTATE] += 1
                orient_acc[0] += cur_nh
                orient_acc[1] += cur_nv
                continue
            kind = _ROTATE
            e_del = e
            e_ins = rot[e, variant_idx[k]]
        elif tu < p_rot + p_sld:
            if not occ[e]:
                proposed[_SLIDE] += 1
                orient_acc[0] += cur_nh
                orient_acc[1] += cur_nv
                continue
            kind = _SLIDE
            e_del = e
            e_ins = sld[e, variant_idx[k]]
        elif occ[e]:
            kind = _DELETE
            e_del = e
            e_ins = -1
        else:
            kind = _INSERT
            e_del = -1
            e_ins = e
        proposed[kind] += 1
        dh = 0.0
        blocked = False
        if e_del >= 0:
            dh += _toggle(occ, cover, end1, end2, nbrm, nbrp, e_del, lam, a)
        if e_ins >= 0:
            if cover[end1[e_ins]] or cover[end2[e_ins]]:
                if e_del >= 0:
                    _toggle(occ, cover, end1, end2, nbrm, nbrp, e_del, lam, a)
                blocked = True
            else:
                dh += _toggle(occ, cover, end1, end2, nbrm, nbrp, e_ins, lam, a)
        if not blocked:
            if u < math.exp(-beta * dh):
                accepted[kind] += 1
                moved = True
            else:
                if e_ins >= 0:
                    _toggle(occ, cover, end1, end2, nbrm, nbrp, e_ins, lam, a)
                if e_del >= 0:
                    _toggle(occ, cover, end1, end2, nbrm, nbrp, e_del, lam, a)
        if moved:
            if e_del >= 0:
                if e_del < n_horizontal:
                    cur_nh -= 1
                else:
                    cur_nv -= 1
            if e_ins >= 0:
                if e_ins < n_horizontal:
                    cur_nh += 1
                else:
                    cur_nv += 1
        orient_acc[0] += cur_nh
        orient_acc[1] += cur_nv


def _draw(streams: RngStreams, n_edges: int, count: int):
    edge_idx = streams.edge.integers(0, n_edges, size=count)
    kind_u = streams.kind.random(count)
    variant_idx = streams.variant.integers(0, 4, size=count)
    accept_u = streams.accept.random(count)
    return edge_idx, kind_u, variant_idx, accept_u


def _advance(state: SamplerState, streams: RngStreams, sweeps: int,
             params: ModelParams) -> None:
    """Run whole sweeps through the compiled kernel, chunked only for
    memory; the chunking cannot change the random stream."""
    t = state.tables
    spec = state.spec
    remaining = sweeps * t.n_edges
    chunk_cap = max(t.n_edges, 1 << 21)
    while remaining > 0:
        count = min(remaining, chunk_cap)
        edge_idx, kind_u, variant_idx, accept_u = _draw(streams, t.n_edges, count)
        _run_proposals(state.occ, state.cover, t.end1, t.end2, t.nbrm, t.nbrp,
                       t.rot, t.sld, edge_idx, kind_u, variant_idx, accept_u,
                       params.beta, params.lam, params.a,
                       spec.rotate_prob, spec.slide_prob,
                       state.proposed, state.accepted,
                       t.W * t.H, state.orient_acc)
        state.orient_steps += count
        remaining -= count


def step(state: SamplerState, rng: RngStreams,
         params: ModelParams | None = None) -> SamplerState:
    """One proposal in pure python, consuming the same draws the kernel
    would; used for audits and as the reference semantics."""
    t = state.tables
    if params is None:
        params = state.spec.params
    e = int(rng.edge.integers(0, t.n_edges))
    tu = float(rng.kind.random())
    variant = int(rng.variant.integers(0, 4))
    u = float(rng.accept.random())
    spec = state.spec
    args = (state.occ, state.cover, t.end1, t.end2, t.nbrm, t.nbrp)
    try:
        if tu < spec.rotate_prob:
            if not state.occ[e]:
                state.proposed[_ROTATE] += 1
                return state
            kind, e_del, e_ins = _ROTATE, e, int(t.rot[e, variant])
        elif tu < spec.rotate_prob + spec.slide_prob:
            if not state.occ[e]:
                state.proposed[_SLIDE] += 1
                return state
            kind, e_del, e_ins = _SLIDE, e, int(t.sld[e, variant])
        elif state.occ[e]:
            kind, e_del, e_ins = _DELETE, e, -1
        else:
            kind, e_del, e_ins = _INSERT, -1, e
        state.proposed[kind] += 1
        dh = 0.0
        if e_del >= 0:
            dh += _toggle(*args, e_del, params.lam, params.a)
        if e_ins >= 0:
            if state.cover[t.end1[e_ins]] or state.cover[t.end2[e_ins]]:
                if e_del >= 0:
                    _toggle(*args, e_del, params.lam, params.a)
                return state
            dh += _toggle(*args, e_ins, params.lam, params.a)
        if u < math.exp(-params.beta * dh):
            state.accepted[kind] += 1
        else:
            if e_ins >= 0:
                _toggle(*args, e_ins, params.lam, params.a)
            if e_del >= 0:
                _toggle(*args, e_del, params.lam, params.a)
        return state
    finally:
        n_h = t.W * t.H
        state.orient_acc[0] += int(state.occ[:n_h].sum())
        state.orient_acc[1] += int(state.occ[n_h:].sum())
        state.orient_steps += 1


# -- schedules ----------------------------------------------------------------


def run(spec: ChainSpec, chain_index: int = 0) -> RunRecord:
    """Anneal (optionally), burn in, then measure every measure_every
    sweeps.  Deterministic for a fixed (spec, chain_index)."""
    state = SamplerState(spec)
    streams = RngStreams.for_chain(spec.seed, chain_index)
    p = spec.params
    for beta_stage, n_sweeps in spec.anneal or ():
        _advance(state, streams, n_sweeps,
                 ModelParams(beta_stage, p.lam, p.a))
    if spec.burn_in:
        _advance(state, streams, spec.burn_in, p)
    state.reset_time_averages()
    n_meas = spec.sweeps // spec.measure_every
    sweep_index = np.empty(n_meas, dtype=np.int64)
    nh = np.empty(n_meas, dtype=np.int64)
    nv = np.empty(n_meas, dtype=np.int64)
    vac = np.empty(n_meas, dtype=np.int64)
    brk = np.empty(n_meas, dtype=np.int64)
    snapshots = []
    for m in range(n_meas):
        _advance(state, streams, spec.measure_every, p)
        sweep_index[m] = (m + 1) * spec.measure_every
        nh[m], nv[m], vac[m], brk[m] = state.counts()
        if spec.snapshot_every and (m + 1) % spec.snapshot_every == 0:
            snapshots.append(state.to_config())
    leftover = spec.sweeps - n_meas * spec.measure_every
    if leftover:
        _advance(state, streams, leftover, p)
    energy = 0.5 * (p.lam + p.a) * vac + 0.5 * p.a * brk
    avg_h, avg_v = state.time_averages()
    return RunRecord(
        spec=spec, sweep_index=sweep_index,
        horizontal_dimers=nh, vertical_dimers=nv,
        vacancy_count=vac, broken_link_count=brk, energy=energy,
        proposals={k: int(state.proposed[i]) for i, k in enumerate(MOVE_KINDS)},
        accepts={k: int(state.accepted[i]) for i, k in enumerate(MOVE_KINDS)},
        final=state.to_config(),
        time_avg_horizontal=avg_h, time_avg_vertical=avg_v,
        snapshots=snapshots,
    )


def iter_occupancies(spec: ChainSpec, chain_index: int = 0):
    """Yield (occ_h, occ_v) uint8 copies after each measurement block.

    Runs the same schedule as run (anneal, burn-in, then measure_every
    blocks) but yields the raw occupancy arrays instead of accumulating
    measurements, sweeps // measure_every times in total.  Lets audits
    stream over many sampled configurations without holding them all in
    memory or paying for configuration objects."""
    state = SamplerState(spec)
    streams = RngStreams.for_chain(spec.seed, chain_index)
    p = spec.params
    for beta_stage, n_sweeps in spec.anneal or ():
        _advance(state, streams, n_sweeps,
                 ModelParams(beta_stage, p.lam, p.a))
    if spec.burn_in:
        _advance(state, streams, spec.burn_in, p)
    W, H = spec.torus.width, spec.torus.height
    for _ in range(spec.sweeps // spec.measure_every):
        _advance(state, streams, spec.measure_every, p)
        occ_h = state.occ[:W * H].reshape(H, W).T.copy()
        occ_v = state.occ[W * H:].reshape(H, W).T.copy()
        yield occ_h, occ_v


def sample_pair(spec: ChainSpec, seed2: int) -> tuple[DimerConfig, DimerConfig]:
    """Final configurations of two chains that share the spec but draw from
    independent streams seeded (spec.seed) and (seed2)."""
    first = run(spec)
    second = run(dataclasses.replace(spec, seed=seed2))
    return first.final, second.final


def run_many(specs: Sequence[ChainSpec], threads: int = 1) -> list[RunRecord]:
    """Independent chains, optionally in parallel; one worker per chain,
    results in input order."""
    if threads <= 1:
        return [run(s) for s in specs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, specs))


# -- audits --------------------------------------------------------------------


def transition_probability(cfg: DimerConfig, target: DimerConfig,
                           params: ModelParams) -> float:
    """One-step probability of moving between configurations that differ by
    a single edge, under the default insert/delete move set."""
    extra = target.edges - cfg.edges
    missing = cfg.edges - target.edges
    if len(extra) + len(missing) != 1:
        raise ValueError("configurations must differ by exactly one edge")
    state = SamplerState(ChainSpec(cfg.window, params, seed=0, sweeps=1),
                         config=cfg)
    t = state.tables
    mid_to_idx = {t.edge_midpoint(e): e for e in range(t.n_edges)}
    (edge,) = tuple(extra or missing)
    e = mid_to_idx[edge]
    args = (state.occ, state.cover, t.end1, t.end2, t.nbrm, t.nbrp)
    if not extra:
        dh = _toggle(*args, e, params.lam, params.a)
    else:
        if state.cover[t.end1[e]] or state.cover[t.end2[e]]:
            return 0.0
        dh = _toggle(*args, e, params.lam, params.a)
    return min(1.0, math.exp(-params.beta * dh)) / t.n_edges


def detailed_balance_audit(torus: Rect, params: ModelParams,
                           max_edges: int = 40) -> float:
    """Max violation of pi(x) P(x,y) = pi(y) P(y,x) over every ordered pair
    of enumerable torus configurations one edge apart, with pi from full
    enumeration.  Uses the sampler's own energy deltas."""
    from .enumerate import weighted_ensemble

    configs, w = weighted_ensemble(torus, Periodic(), params,
                                   max_edges=max_edges)
    z = math.fsum(sorted(w, reverse=True))
    pi = {c: wi / z for c, wi in zip(configs, w)}
    worst = 0.0
    for x in configs:
        for e in x.free_edges():
            edges = set(x.edges)
            key = x._canon(e)
            if key in edges:
                y = x.with_edges(edges - {key})
            else:
                if any(x.covered(v) for v in edge_endpoints(e)):
                    continue
                y = x.with_edges(edges | {key})
            flow = pi[x] * transition_probability(x, y, params)
            back = pi[y] * transition_probability(y, x, params)
            worst = max(worst, abs(flow - back))
    return worst
