"""Experiment harness: config parsing, subcommand dispatch, deterministic
output files.

Subcommands
    verify     cross-check batteries (enumeration vs transfer matrix,
               reflection positivity, chessboard, configuration graphs)
    transfer   1D spectrum and partition-function table as CSV
    enumerate  weighted census of a small window as CSV
    sample     Metropolis chains; measurements as JSONL plus final config
    analyze    orientation-order diagnostics of stored configurations as CSV
    disagree   two-sample disagreement, sealing events, and alpha1 fits

Configuration is an INI file with sections [model], [geometry], [sampler],
[analysis], [sealing], [output]; every key has a default (see --help) and
unknown sections or keys are rejected by name.  Values can also be overridden
on the command line with --set section.key=value.  Every run writes
manifest.json (resolved config, package version, seeds) next to its outputs;
the default output directory comes from $HLDIMER_OUT.  Outputs are written
atomically (temp file + rename) and are byte-identical for identical seeds.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__, disagree as dis, enumerate as enum2d, order, transfer1d
from .lattice import Rect
from .model import (DimerConfig, ModelParams, Periodic, Vacant, load_config,
                    save_config)
from .sampler import ChainSpec, run_many

ENV_OUT = "HLDIMER_OUT"


class ConfigError(Exception):
    pass


# -- configuration schema -----------------------------------------------------

# section -> key -> (default, parser, help); parse errors name the key
_SCHEMA = {
    "model": {
        "beta": ("1.0", float, "inverse temperature"),
        "beta_ladder": ("", "floats", "comma list; when set, transfer/sample "
                                      "run one row/chain per value"),
        "lambda": ("0.0", float, "vacancy chemical potential"),
        "a": ("1.0", float, "interaction strength"),
    },
    "geometry": {
        "W": ("8", int, "window width in lattice units"),
        "H": ("8", int, "window height in lattice units"),
        "bc": ("periodic", "bc", "periodic | vacant"),
    },
    "sampler": {
        "seed": ("1", int, "root seed; chains derive their streams from it"),
        "sweeps": ("1000", int, "measurement sweeps after burn-in"),
        "burn_in": ("0", int, "discarded sweeps before measuring"),
        "measure_every": ("1", int, "sweeps between measurements"),
        "init": ("empty", "init", "empty | packed_vertical | packed_horizontal"),
        "moves": ("", "moves", "extra move mix, e.g. rotate=0.1,slide=0.1"),
    },
    "analysis": {
        "K": ("1", int, "mesoscopic grid scale, x direction"),
        "L": ("1", int, "mesoscopic grid scale, y direction"),
        "N": ("4", int, "rectangle side in grid scale units (> 2)"),
        "b_values": ("1,2,4", "ints", "extra K = L = b spanning columns"),
    },
    "sealing": {
        "a_scale": ("1", int, "sealed-rectangle width scale"),
        "c_scale": ("auto", "auto_int", "height scale; auto ties it to ell0"),
        "N": ("4", int, "sealed-rectangle side multiplier (> 2)"),
    },
    "output": {
        "dir": ("", str, f"output directory (default ${ENV_OUT} or "
                         "./hldimer-out)"),
        "formats": ("csv,jsonl", "formats", "subset of csv,jsonl to write"),
    },
}

_INIT_CHOICES = ("empty", "packed_vertical", "packed_horizontal")


def _parse_value(section: str, key: str, raw: str):
    kind = _SCHEMA[section][key][1]
    try:
        if kind == "floats":
            return tuple(float(t) for t in raw.split(",") if t.strip())
        if kind == "ints":
            return tuple(int(t) for t in raw.split(",") if t.strip())
        if kind == "bc":
            if raw not in ("periodic", "vacant"):
                raise ValueError("must be periodic or vacant")
            return raw
        if kind == "init":
            if raw not in _INIT_CHOICES:
                raise ValueError(f"must be one of {', '.join(_INIT_CHOICES)}")
            return raw
        if kind == "moves":
            probs = {"rotate": 0.0, "slide": 0.0}
            for part in filter(None, (t.strip() for t in raw.split(","))):
                name, _, val = part.partition("=")
                if name not in probs or not val:
                    raise ValueError(f"bad move spec {part!r}")
                probs[name] = float(val)
            return probs
        if kind == "auto_int":
            return None if raw == "auto" else int(raw)
        if kind == "formats":
            fmts = {t.strip() for t in raw.split(",") if t.strip()}
            if not fmts <= {"csv", "jsonl"}:
                raise ValueError("formats must be a subset of csv,jsonl")
            return fmts
        return kind(raw)
    except ValueError as e:
        raise ConfigError(f"bad value for {section}.{key}: {raw!r} ({e})")


def load_experiment_config(path: str | None, overrides=()) -> dict:
    """Resolved config dict; unknown sections/keys are rejected by name."""
    raw = {s: dict() for s in _SCHEMA}
    if path is not None:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config file: {e}")
        except configparser.Error as e:
            raise ConfigError(f"malformed config file: {e}")
        for section in cp.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown config section [{section}]")
            for key, val in cp.items(section):
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"unknown config key {section}.{key}")
                raw[section][key] = val
    for item in overrides:
        dotted, _, val = item.partition("=")
        section, _, key = dotted.partition(".")
        if not val and "=" not in item:
            raise ConfigError(f"--set needs section.key=value, got {item!r}")
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown config key {section}.{key}")
        raw[section][key] = val
    cfg = {}
    for section, keys in _SCHEMA.items():
        cfg[section] = {}
        for key, (default, _, _) in keys.items():
            cfg[section][key] = _parse_value(section, key,
                                             raw[section].get(key, default))
    return cfg


def _config_for_manifest(cfg: dict) -> dict:
    out = {}
    for section, keys in cfg.items():
        out[section] = {}
        for key, val in keys.items():
            if isinstance(val, (set, frozenset)):
                val = sorted(val)
            elif isinstance(val, tuple):
                val = list(val)
            out[section][key] = val
    return out


# -- deterministic output helpers ----------------------------------------------


def _write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def _csv_text(header: list, rows: list) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


class _OutputDir:
    def __init__(self, cfg: dict, args):
        path = args.out or cfg["output"]["dir"] or \
            os.environ.get(ENV_OUT) or "hldimer-out"
        os.makedirs(path, exist_ok=True)
        self.path = path
        self.formats = cfg["output"]["formats"]
        self.written: list[str] = []

    def write(self, name: str, text: str) -> None:
        ext = name.rsplit(".", 1)[-1]
        if ext in ("csv", "jsonl") and ext not in self.formats:
            return
        _write_atomic(os.path.join(self.path, name), text)
        self.written.append(name)

    def manifest(self, subcommand: str, cfg: dict, seeds=(), extra=None) -> None:
        doc = {
            "subcommand": subcommand,
            "version": __version__,
            "config": _config_for_manifest(cfg),
            "seeds": list(seeds),
            "outputs": sorted(self.written),
        }
        if extra:
            doc.update(extra)
        _write_atomic(os.path.join(self.path, "manifest.json"),
                      json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _params(cfg: dict, beta: float | None = None) -> ModelParams:
    m = cfg["model"]
    return ModelParams(beta if beta is not None else m["beta"],
                       m["lambda"], m["a"])


def _betas(cfg: dict) -> tuple[float, ...]:
    return cfg["model"]["beta_ladder"] or (cfg["model"]["beta"],)


def _window(cfg: dict) -> tuple[Rect, object]:
    g = cfg["geometry"]
    if g["W"] < 1 or g["H"] < 1:
        raise ConfigError("geometry.W and geometry.H must be positive")
    bc = Periodic() if g["bc"] == "periodic" else Vacant()
    return Rect(-1, -1, g["W"], g["H"]), bc


# -- transfer -------------------------------------------------------------------


def cmd_transfer(cfg: dict, args) -> int:
    lengths = tuple(args.lengths)
    for L in lengths:
        if L < 2 or L % 2:
            raise ConfigError("--lengths must be even integers >= 2")
    header = ["beta", "lambda", "a", "x1", "x2", "x3", "xi", "ell0"]
    header += [f"z_vacant_L{L}" for L in lengths]
    header += ["residual_1", "residual_2", "residual_3"]
    rows = []
    for beta in _betas(cfg):
        p = _params(cfg, beta)
        s = transfer1d.spectrum(p)
        row = [beta, p.lam, p.a, s.x1, s.x2, s.x3,
               transfer1d.correlation_length(p), p.ell0]
        row += [transfer1d.z_vacant(p, L) for L in lengths]
        row += list(s.residuals)
        rows.append(row)
    text = _csv_text(header, rows)
    sys.stdout.write(text)
    out = _OutputDir(cfg, args)
    out.write("transfer.csv", text)
    out.manifest("transfer", cfg, extra={"lengths": list(lengths)})
    return 0


# -- enumerate ------------------------------------------------------------------


def cmd_enumerate(cfg: dict, args) -> int:
    window, bc = _window(cfg)
    p = _params(cfg)
    try:
        hist = enum2d.count_histogram(window, bc, max_edges=args.max_edges)
    except ValueError as e:
        raise ConfigError(str(e))
    rows = []
    n_total = 0
    z = 0.0
    for (vac, brk), count in sorted(hist.items()):
        w = math.exp(-p.beta * (0.5 * (p.lam + p.a) * vac + 0.5 * p.a * brk))
        rows.append([vac, brk, count, w, count * w])
        n_total += count
        z += count * w
    text = _csv_text(["vacancies", "broken_links", "count",
                      "boltzmann_weight", "total_weight"], rows)
    out = _OutputDir(cfg, args)
    out.write("enumerate.csv", text)
    out.manifest("enumerate", cfg,
                 extra={"configurations": n_total, "log_z": math.log(z)})
    print(f"{n_total} configurations, log Z = {math.log(z):.12g}")
    return 0


# -- sample ---------------------------------------------------------------------


def _chain_spec(cfg: dict, beta: float, seed: int) -> ChainSpec:
    window, bc = _window(cfg)
    if not isinstance(bc, Periodic):
        raise ConfigError("the sampler runs on periodic geometry only")
    s = cfg["sampler"]
    return ChainSpec(torus=window, params=_params(cfg, beta), seed=seed,
                     sweeps=s["sweeps"], burn_in=s["burn_in"],
                     measure_every=s["measure_every"], init=s["init"],
                     rotate_prob=s["moves"]["rotate"],
                     slide_prob=s["moves"]["slide"])


def _jsonl(rows: list[dict]) -> str:
    return "".join(json.dumps(r) + "\n" for r in rows)


def cmd_sample(cfg: dict, args) -> int:
    betas = _betas(cfg)
    seed0 = cfg["sampler"]["seed"]
    specs = [_chain_spec(cfg, beta, seed0 + i) for i, beta in enumerate(betas)]
    records = run_many(specs, threads=args.threads)
    out = _OutputDir(cfg, args)
    runs = []
    for beta, spec, rec in zip(betas, specs, records):
        tag = "" if len(betas) == 1 else f"_beta{beta:g}"
        out.write(f"samples{tag}.jsonl", _jsonl(rec.measurement_rows()))
        out.write(f"final{tag}.cfg", _cfg_text(rec.final))
        runs.append({
            "beta": beta, "seed": spec.seed,
            "acceptance_rates": rec.acceptance_rates(),
            "time_avg_horizontal": rec.time_avg_horizontal,
            "time_avg_vertical": rec.time_avg_vertical,
        })
    out.manifest("sample", cfg, seeds=[s.seed for s in specs],
                 extra={"runs": runs})
    print(f"wrote {len(out.written)} files to {out.path}")
    return 0


def _cfg_text(config: DimerConfig) -> str:
    from .model import config_to_text
    return config_to_text(config)


# -- analyze --------------------------------------------------------------------


def _stick_hist(cfg_obj: DimerConfig) -> str:
    hist: dict[int, int] = {}
    for s in order.sticks(cfg_obj):
        hist[s.n_edges] = hist.get(s.n_edges, 0) + 1
    return ";".join(f"{n}:{hist[n]}" for n in sorted(hist))


def _spans(report: dict) -> bool:
    return report["spans_horizontally"] or report["spans_vertically"]


def cmd_analyze(cfg: dict, args) -> int:
    a = cfg["analysis"]
    if not args.paths:
        raise ConfigError("analyze needs at least one configuration file")
    b_values = tuple(a["b_values"])
    header = ["sample", "psi_ver", "psi_hor", "frac_ver", "frac_hor",
              "spans_ver", "spans_hor", "stick_hist"]
    for b in b_values:
        header += [f"spans_ver_b{b}", f"spans_hor_b{b}"]
    rows = []
    for path in args.paths:
        try:
            sigma = load_config(path)
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot load configuration {path}: {e}")
        try:
            gv = order.psi_grid(sigma, a["K"], a["L"], a["N"], "v")
            gh = order.psi_grid(sigma, a["K"], a["L"], a["N"], "h")
            rv = order.percolation_report(gv)
            rh = order.percolation_report(gh)
            row = [path, len(gv.points), len(gh.points),
                   rv["largest_fraction"], rh["largest_fraction"],
                   _spans(rv), _spans(rh), _stick_hist(sigma)]
            for b in b_values:
                bv = order.percolation_report(
                    order.psi_grid(sigma, b, b, a["N"], "v"))
                bh = order.percolation_report(
                    order.psi_grid(sigma, b, b, a["N"], "h"))
                row += [_spans(bv), _spans(bh)]
        except ValueError as e:
            raise ConfigError(f"analysis scales do not fit {path}: {e}")
        rows.append(row)
    text = _csv_text(header, rows)
    out = _OutputDir(cfg, args)
    out.write("analyze.csv", text)
    out.manifest("analyze", cfg, extra={"inputs": list(args.paths)})
    print(f"analyzed {len(rows)} configurations -> {out.path}/analyze.csv")
    return 0


# -- disagree -------------------------------------------------------------------


def _scales(cfg: dict, params: ModelParams) -> dis.SealScales:
    s = cfg["sealing"]
    c = s["c_scale"]
    if c is None:
        c = dis.default_c_scale(params, s["N"])
    return dis.SealScales(s["a_scale"], c, s["N"])


def _load_pair(args) -> dis.PairSample:
    sigma = load_config(args.sigma)
    sigma_prime = load_config(args.sigma_prime)
    return dis.PairSample.of(sigma, sigma_prime)


def _inline_pairs(cfg: dict, args) -> list[dis.PairSample]:
    beta = _betas(cfg)[0]
    seed0 = cfg["sampler"]["seed"]
    specs = []
    for i in range(args.pairs):
        specs.append(_chain_spec(cfg, beta, seed0 + 2 * i))
        specs.append(_chain_spec(cfg, beta, seed0 + 2 * i + 1))
    records = run_many(specs, threads=args.threads)
    return [dis.PairSample.of(records[2 * i].final, records[2 * i + 1].final)
            for i in range(args.pairs)]


def _alpha_stats(pairs, window: Rect, max_dx: int, max_dy: int) -> list[dict]:
    W, H = window.width, window.height
    base = (2 * (W // 2), 2 * (H // 2) + 1)  # a central vertical edge

    def canon(p):
        return (window.x0d + (p[0] - window.x0d) % (2 * W),
                window.y0d + (p[1] - window.y0d) % (2 * H))

    stats = []
    for dx in range(max_dx + 1):
        for dy in range(max_dy + 1):
            if dx == 0 and dy == 0:
                continue
            target = canon((base[0] + 2 * dx, base[1] + 2 * dy))
            st = dis.connection_stats(pairs, {base}, {target})
            st.update({"dx": dx, "dy": dy})
            stats.append(st)
    return stats


def cmd_disagree(cfg: dict, args) -> int:
    if (args.sigma is None) != (args.sigma_prime is None):
        raise ConfigError("--sigma and --sigma-prime must be given together")
    params = _params(cfg)
    if args.sigma:
        pairs = [_load_pair(args)]
    else:
        pairs = _inline_pairs(cfg, args)
    window = pairs[0].sigma.window
    scales = _scales(cfg, params)
    rows = []
    n_sealed = 0
    n_viol = 0
    for idx, pair in enumerate(pairs):
        report = dis.component_report(pair)
        for anchor in dis.anchors(pair.sigma, scales):
            ev = dis.sealing_events(pair.sigma, pair.sigma_prime, anchor, scales)
            is_sealed = ev.sigma1 and ev.sigma1_prime and ev.sigma2
            viols = 0
            if is_sealed:
                n_sealed += 1
                viols = len(dis.confinement_check(pair, anchor, scales))
                n_viol += viols
            rows.append([idx, anchor[0], anchor[1],
                         ev.sigma0, ev.sigma0_prime, ev.sigma1,
                         ev.sigma1_prime, ev.sigma2, is_sealed, viols,
                         report["max_diameter"]])
    text = _csv_text(
        ["pair", "anchor_x", "anchor_y", "sigma0", "sigma0_prime", "sigma1",
         "sigma1_prime", "sigma2", "sealed", "confinement_violations",
         "max_component_diameter"], rows)
    out = _OutputDir(cfg, args)
    out.write("disagree.csv", text)
    if pairs[0].sigma.is_torus:
        stats = _alpha_stats(pairs, window, args.alpha_max_dx, args.alpha_max_dy)
        fit = dis.alpha1_fit(stats)
        alpha = {"fit": fit, "ell0": params.ell0,
                 "displacements": [{k: st[k] for k in
                                    ("dx", "dy", "successes", "n", "p_hat")}
                                   for st in stats]}
        out.write("alpha1.json", json.dumps(alpha, indent=2, sort_keys=True) + "\n")
    seeds = [] if args.sigma else \
        [cfg["sampler"]["seed"] + i for i in range(2 * args.pairs)]
    out.manifest("disagree", cfg, seeds=seeds,
                 extra={"pairs": len(pairs), "sealed_anchors": n_sealed,
                        "confinement_violations": n_viol})
    print(f"{len(pairs)} pairs, {n_sealed} sealed anchors, "
          f"{n_viol} confinement violations -> {out.path}")
    return 0 if n_viol == 0 else 2


# -- verify ---------------------------------------------------------------------


class _Check:
    def __init__(self):
        self.failures = 0

    def __call__(self, ok: bool, name: str, detail: str = "") -> None:
        if ok:
            print(f"ok - {name}")
        else:
            self.failures += 1
            print(f"FAIL - {name}{': ' + detail if detail else ''}")


_TRIPLES = ((1.0, 0.0, 1.0), (0.5, -0.5, 1.0), (2.0, 1.0, 0.5))


def _suite_oracle(check: _Check) -> None:
    for beta, lam, a in _TRIPLES:
        p = ModelParams(beta, lam, a)
        ratios = [transfer1d.z_vacant_enum(p, L) / transfer1d.z_vacant(p, L)
                  for L in (2, 4, 6)]
        dev = max(abs(r / ratios[0] - 1.0) for r in ratios)
        check(dev < 1e-10, f"vacant 1D enumeration / matrix element ratio "
                           f"constant (beta={beta:g}, dev={dev:.2e})")
    rng = np.random.default_rng(20)
    worst_cp = 0.0
    worst_vieta = 0.0
    for _ in range(20):
        p = ModelParams(float(rng.uniform(0.2, 4.0)),
                        float(rng.uniform(-1.0, 1.5)),
                        float(rng.uniform(0.1, 2.0)))
        T = transfer1d.transfer_matrix(p)
        mono = np.array([1.0, -T[0, 0], -1.0, T[0, 0] - T[0, 2] * T[1, 0]])
        worst_cp = max(worst_cp, float(np.max(np.abs(
            transfer1d.char_poly(p) - mono))))
        s = transfer1d.spectrum(p)
        c = transfer1d.char_poly(p)
        worst_vieta = max(
            worst_vieta,
            abs(s.x1 + s.x2 + s.x3 + c[1]),
            abs(s.x1 * s.x2 + s.x1 * s.x3 + s.x2 * s.x3 - c[2]),
            abs(s.x1 * s.x2 * s.x3 + c[3]))
    check(worst_cp < 1e-14, f"characteristic cubic matches cofactor "
                            f"expansion (worst {worst_cp:.2e})")
    check(worst_vieta < 1e-10, f"Vieta identities (worst {worst_vieta:.2e})")
    ok = True
    for beta, lam, a in _TRIPLES:
        p = ModelParams(beta, lam, a)
        for L in (4, 6, 8, 10, 12):
            if transfer1d.z_fullpacked(p, L) < 1.0 + L * L / (16 * p.ell0 ** 2):
                ok = False
    check(ok, "fully packed boundary lower bound, even L in [4, 12]")


def _suite_rp(check: _Check) -> None:
    for W, H in ((4, 2), (2, 4)):
        torus = Rect(-1, -1, W, H)
        block = Rect(-1, -1, W // 2, H) if W == 4 else Rect(-1, -1, W, H // 2)
        p = ModelParams(1.0, 0.0, 1.0)
        worst = 0.0
        for k in range(20):
            f = enum2d.random_local_observable(block, seed=300 + k)
            worst = min(worst, enum2d.rp_check(f, block, torus, p))
        check(worst >= -1e-10,
              f"reflection positivity on the {W}x{H} torus (min {worst:.2e})")


def _suite_chessboard(check: _Check) -> None:
    p = ModelParams(1.0, 0.0, 1.0)
    ok = True
    detail = ""
    for k in range(6):
        lhs, rhs = enum2d.chessboard_check(
            {enum2d.Isometry.identity(): enum2d.random_local_event(
                Rect(-1, -1, 1, 1), seed=400 + k)},
            Rect(-1, -1, 1, 1), Rect(-1, -1, 4, 4), p)
        if lhs > rhs * (1.0 + 1e-10):
            ok = False
            detail = f"family {k}: lhs {lhs:.3e} rhs {rhs:.3e}"
    check(ok, "chessboard estimate, 4x4 torus unit blocks", detail)


def _suite_combinatorial(check: _Check) -> None:
    from . import confgraph
    p = ModelParams(1.0, 0.0, 1.0)
    for W, H in ((2, 2), (3, 3), (4, 2)):
        window = Rect(-1, -1, W, H)
        bad = []
        n = 0
        for sigma in enum2d.enumerate_configs(window, Vacant()):
            g = confgraph.build(sigma)
            if confgraph.weight_identity_gap(sigma, g, p) > 1e-12:
                bad.append("weight identity")
            if not confgraph.component_bound_holds(g, sigma.n_dimers):
                bad.append("component bound")
            if confgraph.defect_chasing_violations(g, sigma.n_dimers):
                bad.append("defect chasing")
            cg = confgraph.compress(g)
            if (cg.k_ver, cg.k_hor) != confgraph.sub_components(g)[:2]:
                bad.append("compression")
            n += 1
        check(not bad, f"configuration-graph invariants, {W}x{H} vacant "
                       f"({n} configurations)", ", ".join(sorted(set(bad))))


def cmd_verify(cfg: dict, args) -> int:
    check = _Check()
    suites = {
        "oracle": _suite_oracle,
        "rp": _suite_rp,
        "chessboard": _suite_chessboard,
        "combinatorial": _suite_combinatorial,
    }
    chosen = list(suites) if args.suite == "all" else [args.suite]
    for name in chosen:
        print(f"# suite {name}")
        suites[name](check)
    out = _OutputDir(cfg, args)
    out.manifest("verify", cfg,
                 extra={"suites": chosen, "failures": check.failures})
    if check.failures:
        print(f"{check.failures} check(s) FAILED")
        return 2
    print("all checks passed")
    return 0


# -- argument parsing and dispatch -----------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _schema_help() -> str:
    lines = ["configuration keys (section.key = default  # description):"]
    for section, keys in _SCHEMA.items():
        for key, (default, _, help_text) in keys.items():
            shown = default if default != "" else "(empty)"
            lines.append(f"  {section}.{key} = {shown}  # {help_text}")
    return "\n".join(lines)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="hldimer",
        description="Interacting monomer-dimer model: simulation and analysis.",
        epilog=_schema_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI configuration file")
        sp.add_argument("--out", help="output directory (overrides "
                                      f"output.dir and ${ENV_OUT})")
        sp.add_argument("--set", action="append", default=[], metavar="S.K=V",
                        help="override one config value (repeatable)")
        sp.add_argument("--threads", type=int, default=1,
                        help="parallel worker cap; results are independent "
                             "of this value")

    sp = sub.add_parser("verify", help="run cross-check suites",
                        epilog=_schema_help(),
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    common(sp)
    sp.add_argument("--suite", default="all",
                    choices=["oracle", "rp", "chessboard", "combinatorial",
                             "all"])

    sp = sub.add_parser("transfer", help="1D transfer-matrix table",
                        epilog=_schema_help(),
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    common(sp)
    sp.add_argument("--lengths", type=lambda s: [int(t) for t in s.split(",")],
                    default=[2, 4, 6, 8],
                    help="comma list of even strip lengths for z_vacant")

    sp = sub.add_parser("enumerate", help="exact census of a small window",
                        epilog=_schema_help(),
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    common(sp)
    sp.add_argument("--max-edges", type=int, default=40,
                    help="guardrail on the number of free edges")

    sp = sub.add_parser("sample", help="run Metropolis chains",
                        epilog=_schema_help(),
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    common(sp)

    sp = sub.add_parser("analyze", help="order diagnostics of stored configs",
                        epilog=_schema_help(),
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    common(sp)
    sp.add_argument("paths", nargs="*", help="configuration text files")

    sp = sub.add_parser("disagree", help="two-sample disagreement analysis",
                        epilog=_schema_help(),
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    common(sp)
    sp.add_argument("--sigma", help="first stored configuration")
    sp.add_argument("--sigma-prime", help="second stored configuration")
    sp.add_argument("--pairs", type=int, default=4,
                    help="inline mode: number of independent chain pairs")
    sp.add_argument("--alpha-max-dx", type=int, default=4)
    sp.add_argument("--alpha-max-dy", type=int, default=4)
    return parser


_DISPATCH = {
    "verify": cmd_verify,
    "transfer": cmd_transfer,
    "enumerate": cmd_enumerate,
    "sample": cmd_sample,
    "analyze": cmd_analyze,
    "disagree": cmd_disagree,
}


def run_cli(argv=None) -> int:
    """Parse argv and dispatch; returns the process exit code (0 success,
    1 configuration error, 2 check failure)."""
    try:
        args = _build_parser().parse_args(argv)
        cfg = load_experiment_config(args.config, args.set)
        return _DISPATCH[args.subcommand](cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except AssertionError as e:
        print(f"check failed: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
