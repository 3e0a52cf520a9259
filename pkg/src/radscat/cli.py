"""Command-line driver.

Usage::

    radscat [MODE] [--config PATH] [--preset NAME] [--out DIR] [--threads N]
            [--eps X] [--k X] [--grid NX NY EXTENT]

``MODE`` is one of ``solve``, ``residual``, ``timedomain``, ``selftest``.  Settings
are resolved in order: built-in defaults, preset, config file, flags.  The
config file is INI-style; see ``CONFIG_GRAMMAR`` and README.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import re
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from . import assembly as asm
from . import incident, potentials
from .timedomain import FIGURE_TIMES, arrival_cutoff, build_sweep, frequency_rule, gaussian_pulse_spectrum, synthesize

MODES = ("solve", "residual", "timedomain", "selftest")

CONFIG_GRAMMAR = """\
[run]        mode = solve|residual|timedomain|selftest ; preset = NAME ; out = DIR ; threads = INT
[potential]  name = gaussian|random|eaton|luneburg|disk|zero|table ; seed = INT ;
             c = FLOAT ; b = FLOAT ; file = PATH ; breakpoints = FLOAT, FLOAT, ...
[source]     name = plane|beam|point ; angle = FLOAT ; x = FLOAT ; y = FLOAT
[solve]      k = FLOAT ; eps = FLOAT
[grid]       nx = INT ; ny = INT ; extent = FLOAT
[residual]   stencil = INT
[timedomain] times = FLOAT, FLOAT, ... ; refine = INT ; eps = FLOAT
"""


class ConfigError(ValueError):
    """Invalid setting; the message names the section, key and (when known) file line."""


@dataclass
class RunConfig:
    mode: str = "solve"
    preset: Optional[str] = None
    potential: str = "gaussian"
    potential_params: dict = field(default_factory=dict)
    source: str = "plane"
    source_params: dict = field(default_factory=dict)
    k: float = 10.0
    eps: float = 1e-13
    nx: int = 101
    ny: int = 101
    extent: float = 2 * np.pi
    out: str = "radscat_out"
    threads: int = 1
    stencil: int = 1
    times: tuple = FIGURE_TIMES
    td_refine: int = 1
    td_eps: float = 1e-10


PRESETS = {
    "gaussian-k100": dict(potential="gaussian", source="plane", k=100.0, eps=1e-13,
                          nx=201, ny=201, extent=2 * np.pi),
    "random-k30": dict(potential="random", potential_params={"seed": 1234}, source="plane",
                       k=30.0, eps=1e-13, nx=201, ny=201, extent=2 * np.pi),
    "eaton-k30": dict(potential="eaton", source="beam", k=30.0, eps=1e-13,
                      nx=201, ny=201, extent=2 * np.pi),
    "luneburg-td": dict(mode="timedomain", potential="luneburg", source="point",
                        nx=61, ny=61, extent=3 * np.pi),
    "disk-k10": dict(potential="disk", potential_params={"c": 0.5, "b": 1.0}, source="plane",
                     k=10.0, eps=1e-13, nx=101, ny=101, extent=2.0),
}


# -- configuration --------------------------------------------------------------------

def _line_of(path: Optional[str], section: str, key: Optional[str]) -> Optional[int]:
    if not path:
        return None
    current = None
    with open(path) as fh:
        for i, raw in enumerate(fh, 1):
            line = raw.strip()
            head = re.fullmatch(r"\[([^\]]+)\]", line)
            if head:
                current = head.group(1).strip().lower()
                if key is None and current == section:
                    return i
                continue
            if current == section and key is not None:
                name = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
                if name == key:
                    return i
    return None


def _fail(msg: str, section: str, key: Optional[str], path: Optional[str] = None):
    where = f"[{section}]" + (f" {key}" if key else "")
    line = _line_of(path, section, key)
    if path:
        where = f"{path}:{line} {where}" if line else f"{path} {where}"
    raise ConfigError(f"{where}: {msg}")


def _num(text, kind, section, key, path):
    try:
        return kind(text)
    except (TypeError, ValueError):
        _fail(f"expected {kind.__name__}, got {text!r}", section, key, path)


def _floats(text, section, key, path):
    parts = [p for p in re.split(r"[,\s]+", str(text).strip()) if p]
    if not parts:
        _fail("expected a list of numbers", section, key, path)
    return tuple(_num(p, float, section, key, path) for p in parts)


_KNOWN = {
    "run": {"mode", "preset", "out", "threads"},
    "potential": {"name", "seed", "c", "b", "file", "breakpoints"},
    "source": {"name", "angle", "x", "y"},
    "solve": {"k", "eps"},
    "grid": {"nx", "ny", "extent"},
    "residual": {"stencil"},
    "timedomain": {"times", "refine", "eps"},
}


def read_config_file(path: str) -> tuple[dict, Optional[str]]:
    """Parse an INI config into RunConfig overrides; returns ``(overrides, preset)``."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    out: dict = {}
    preset = None
    for sec in cp.sections():
        if sec not in _KNOWN:
            _fail("unknown section", sec, None, path)
        for key in cp[sec]:
            if key not in _KNOWN[sec]:
                _fail("unknown key", sec, key, path)
    get = lambda s, k: cp.get(s, k) if cp.has_option(s, k) else None
    if (v := get("run", "mode")) is not None:
        out["mode"] = v.strip()
    if (v := get("run", "preset")) is not None:
        preset = v.strip()
    if (v := get("run", "out")) is not None:
        out["out"] = v.strip()
    if (v := get("run", "threads")) is not None:
        out["threads"] = _num(v, int, "run", "threads", path)
    if cp.has_section("potential"):
        params = {}
        for key in cp["potential"]:
            v = cp["potential"][key]
            if key == "name":
                out["potential"] = v.strip()
            elif key == "seed":
                params["seed"] = _num(v, int, "potential", key, path)
            elif key in ("c", "b"):
                params[key] = _num(v, float, "potential", key, path)
            elif key == "breakpoints":
                params[key] = _floats(v, "potential", key, path)
            elif key == "file":
                f = v.strip()
                if not os.path.isabs(f):
                    f = os.path.join(os.path.dirname(os.path.abspath(path)), f)
                if not os.path.isfile(f):
                    _fail(f"file not found: {f}", "potential", key, path)
                params[key] = f
        if params:
            out["potential_params"] = params
    if cp.has_section("source"):
        params = {}
        for key in cp["source"]:
            v = cp["source"][key]
            if key == "name":
                out["source"] = v.strip()
            else:
                params[key] = _num(v, float, "source", key, path)
        if params:
            out["source_params"] = params
    for key, kind, dest in (("k", float, "k"), ("eps", float, "eps")):
        if (v := get("solve", key)) is not None:
            out[dest] = _num(v, kind, "solve", key, path)
    for key, kind in (("nx", int), ("ny", int), ("extent", float)):
        if (v := get("grid", key)) is not None:
            out[key] = _num(v, kind, "grid", key, path)
    if (v := get("residual", "stencil")) is not None:
        out["stencil"] = _num(v, int, "residual", "stencil", path)
    if (v := get("timedomain", "times")) is not None:
        out["times"] = _floats(v, "timedomain", "times", path)
    if (v := get("timedomain", "refine")) is not None:
        out["td_refine"] = _num(v, int, "timedomain", "refine", path)
    if (v := get("timedomain", "eps")) is not None:
        out["td_eps"] = _num(v, float, "timedomain", "eps", path)
    return out, preset


def validate(cfg: RunConfig, path: Optional[str] = None) -> RunConfig:
    if cfg.mode not in MODES:
        _fail(f"unknown mode {cfg.mode!r} (choose from {', '.join(MODES)})", "run", "mode", path)
    if cfg.preset is not None and cfg.preset not in PRESETS:
        _fail(f"unknown preset {cfg.preset!r} (choose from {', '.join(PRESETS)})", "run", "preset", path)
    if not 1e-15 < cfg.eps < 1e-1:
        _fail(f"eps must lie in (1e-15, 1e-1), got {cfg.eps}", "solve", "eps", path)
    if not 1e-15 < cfg.td_eps < 1e-1:
        _fail(f"eps must lie in (1e-15, 1e-1), got {cfg.td_eps}", "timedomain", "eps", path)
    if not (np.isfinite(cfg.k) and cfg.k > 0):
        _fail(f"k must be positive, got {cfg.k}", "solve", "k", path)
    if cfg.nx < 2:
        _fail(f"nx must be at least 2, got {cfg.nx}", "grid", "nx", path)
    if cfg.ny < 2:
        _fail(f"ny must be at least 2, got {cfg.ny}", "grid", "ny", path)
    if not cfg.extent > 0:
        _fail(f"extent must be positive, got {cfg.extent}", "grid", "extent", path)
    if cfg.threads < 1:
        _fail(f"threads must be at least 1, got {cfg.threads}", "run", "threads", path)
    if cfg.stencil < 1:
        _fail(f"stencil must be at least 1, got {cfg.stencil}", "residual", "stencil", path)
    if cfg.td_refine < 1:
        _fail(f"refine must be at least 1, got {cfg.td_refine}", "timedomain", "refine", path)
    try:
        make_potential(cfg)
    except (ValueError, OSError) as exc:
        _fail(str(exc), "potential", "name", path)
    if cfg.source not in ("plane", "plane_wave", "beam", "gaussian_beam", "point", "point_source"):
        _fail(f"unknown source {cfg.source!r}", "source", "name", path)
    return cfg


def resolve_config(mode: Optional[str] = None, config: Optional[str] = None,
                   preset: Optional[str] = None, **flags) -> RunConfig:
    """Defaults, then preset, then config file, then flags; validated."""
    file_over, file_preset = read_config_file(config) if config else ({}, None)
    name = preset or file_preset
    cfg = RunConfig()
    if name is not None:
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r} (choose from {', '.join(PRESETS)})")
        cfg = replace(cfg, preset=name, **PRESETS[name])
    cfg = replace(cfg, **file_over)
    if mode is not None:
        cfg.mode = mode
    for key, val in flags.items():
        if val is not None:
            setattr(cfg, key, val)
    return validate(cfg, config)


def make_potential(cfg: RunConfig):
    return potentials.by_name(cfg.potential, **cfg.potential_params)


def make_source(cfg: RunConfig, k: float):
    params = dict(cfg.source_params)
    if "x" in params or "y" in params:
        params["location"] = (params.pop("x", 10.0), params.pop("y", 10.0))
    return incident.by_name(cfg.source, k, **params)


# -- pipelines ------------------------------------------------------------------------

def _grid(cfg: RunConfig) -> asm.Grid:
    e = cfg.extent
    return asm.Grid(cfg.nx, cfg.ny, -e, e, -e, e)


def _settings(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["times"] = list(cfg.times)
    d.pop("out")
    d.pop("threads")
    return d


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _solve(cfg: RunConfig, log):
    q = make_potential(cfg)
    src = make_source(cfg, cfg.k)
    log(f"solving {q.label} / {src.kind}, k = {cfg.k:g}, eps = {cfg.eps:g}")
    state = asm.solve_scattering(q, src, cfg.eps, threads=cfg.threads)
    log(f"M = {state.M} ({state.modes.count} modes), {sum(state.panel_counts())} panels in total")
    return state


def run_solve(cfg: RunConfig, log) -> dict:
    state = _solve(cfg, log)
    grid = _grid(cfg)
    t0 = time.perf_counter()
    X, Y = grid.mesh()
    us = state.scattered(X, Y)
    ut = state.source(X, Y) + us
    t_grid = time.perf_counter() - t0
    asm.write_grid(os.path.join(cfg.out, "total.grid"), asm.WaveField(grid, ut, cfg.k))
    asm.write_grid(os.path.join(cfg.out, "scattered.grid"), asm.WaveField(grid, us, cfg.k))
    asm.write_mode_table(os.path.join(cfg.out, "modes.csv"), state)
    meta = asm.metadata(state)
    meta["settings"] = _settings(cfg)
    meta["files"] = ["total.grid", "scattered.grid", "modes.csv"]
    asm.write_metadata(os.path.join(cfg.out, "metadata.json"), meta)
    timings = dict(state.timings, grid_evaluation=t_grid)
    summary = [f"potential {state.q.label}, source {state.source.kind}, k {cfg.k:g}, eps {cfg.eps:g}",
               f"retained modes: M = {state.M} (|m| <= M, {state.modes.count} in total)",
               f"max |u| on grid: {np.max(np.abs(ut)):.6e}"]
    return {"timings": timings, "summary": summary}


def run_residual(cfg: RunConfig, log) -> dict:
    state = _solve(cfg, log)
    grid = _grid(cfg)
    t0 = time.perf_counter()
    res = asm.residual_map(state, grid, stencil=cfg.stencil, control=True)
    t_res = time.perf_counter() - t0
    attributed = asm.solver_attributed(res)
    asm.write_residual(os.path.join(cfg.out, "residual.grid"), res)
    asm.write_residual(os.path.join(cfg.out, "floor.grid"), res, res.meta["floor"])
    asm.write_residual(os.path.join(cfg.out, "attributed.grid"), res, attributed)
    sel = attributed[res.mask]
    stats = {"stencil_half_width": cfg.stencil,
             "residual_max": float(np.max(res.values[res.mask])),
             "floor_max": float(np.max(res.meta["floor"][res.mask])),
             "attributed_max": float(np.max(sel)),
             "attributed_p95": float(np.quantile(sel, 0.95)),
             "masked_points": int(np.count_nonzero(~res.mask))}
    meta = asm.metadata(state)
    meta["settings"] = _settings(cfg)
    meta["residual"] = stats
    meta["files"] = ["residual.grid", "floor.grid", "attributed.grid", "modes.csv"]
    asm.write_mode_table(os.path.join(cfg.out, "modes.csv"), state)
    asm.write_metadata(os.path.join(cfg.out, "metadata.json"), meta)
    summary = [f"retained modes: M = {state.M}",
               f"residual max {stats['residual_max']:.3e}, floor max {stats['floor_max']:.3e}",
               f"solver-attributed: max {stats['attributed_max']:.3e}, 95% {stats['attributed_p95']:.3e}"]
    return {"timings": dict(state.timings, residual=t_res), "summary": summary}


def run_timedomain(cfg: RunConfig, log) -> dict:
    q = make_potential(cfg)
    params = cfg.source_params
    spec = gaussian_pulse_spectrum(location=(params.get("x", 10.0), params.get("y", 10.0)))
    rule = frequency_rule(spec.K, refine=cfg.td_refine)
    grid = _grid(cfg)
    X, Y = grid.mesh()
    log(f"frequency sweep: {rule.size} nodes on (0, {spec.K:g}], {grid.nx}x{grid.ny} points, "
        f"eps = {cfg.td_eps:g}")
    sweep = build_sweep(spec, q, X, Y, rule, eps=cfg.td_eps, threads=cfg.threads)
    t0 = time.perf_counter()
    frames = synthesize(sweep, cfg.times)
    t_syn = time.perf_counter() - t0
    names = []
    for i, t in enumerate(frames.times):
        name = f"frame_{i:03d}.grid"
        asm.write_scalar_grid(os.path.join(cfg.out, name), grid, spec.K, frames.values[i].reshape(X.shape))
        names.append(name)
    with open(os.path.join(cfg.out, "frames.txt"), "w") as fh:
        fh.write("# index time file\n")
        for i, (t, name) in enumerate(zip(frames.times, names)):
            fh.write(f"{i} {t:.17e} {name}\n")
    peak = float(np.max(np.abs(frames.values))) if frames.values.size else 0.0
    meta = {"potential": q.label, "source": "gaussian_pulse", "K": spec.K,
            "frequency_nodes": int(rule.size), "eps": cfg.td_eps, "times": list(frames.times),
            "mode_counts": [int(c) for c in sweep.mode_counts],
            "imag_residue": [float(v) for v in frames.imag_residue], "peak": peak,
            "arrival_cutoff": float(arrival_cutoff(spec, q.support_radius)),
            "settings": _settings(cfg), "files": names + ["frames.txt"]}
    asm.write_metadata(os.path.join(cfg.out, "metadata.json"), meta)
    summary = [f"{rule.size} frequency nodes, {len(names)} frames, peak |u| {peak:.6e}",
               f"max imaginary residue {max(frames.imag_residue, default=0.0):.3e}"]
    return {"timings": dict(sweep.timings, synthesis=t_syn), "summary": summary}


def run_selftest(cfg: RunConfig, log) -> dict:
    from .checks import run_selftest as suite

    results = suite()
    lines = [r.line() for r in results]
    for line in lines:
        log(line)
    ok = all(r.passed for r in results)
    with open(os.path.join(cfg.out, "selftest.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return {"timings": {r.name: r.seconds for r in results}, "summary": lines, "ok": ok}


PIPELINES = {"solve": run_solve, "residual": run_residual,
             "timedomain": run_timedomain, "selftest": run_selftest}


def run(cfg: RunConfig, log=print) -> int:
    """Execute ``cfg``; writes artifacts under ``cfg.out`` and returns an exit status.

    Every file except ``timings.json`` is a deterministic function of the config.
    """
    os.makedirs(cfg.out, exist_ok=True)
    t0 = time.perf_counter()
    result = PIPELINES[cfg.mode](cfg, log)
    timings = dict(result["timings"], wall=time.perf_counter() - t0)
    _write_json(os.path.join(cfg.out, "timings.json"), timings)
    with open(os.path.join(cfg.out, "summary.txt"), "w") as fh:
        fh.write("\n".join(result["summary"]) + "\n")
    for line in result["summary"]:
        log(line)
    log(f"wall time {timings['wall']:.2f} s; outputs in {cfg.out}")
    return 0 if result.get("ok", True) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="radscat",
        description="Scattering from radially symmetric potentials in the plane.",
        epilog="Config grammar:\n" + CONFIG_GRAMMAR + "\nPresets: " + ", ".join(PRESETS),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("mode", nargs="?", choices=MODES, help="pipeline to run (default: solve)")
    p.add_argument("--config", metavar="PATH", help="INI config file")
    p.add_argument("--preset", metavar="NAME", help="built-in experiment")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--threads", type=int, metavar="N", help="worker threads")
    p.add_argument("--eps", type=float, metavar="X", help="solver tolerance")
    p.add_argument("--k", type=float, metavar="X", help="wavenumber")
    p.add_argument("--grid", type=float, nargs=3, metavar=("NX", "NY", "EXTENT"),
                   help="output grid: NX x NY points on [-EXTENT, EXTENT]^2")
    p.add_argument("--list-presets", action="store_true", help="print presets and exit")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_presets:
        for name, over in PRESETS.items():
            print(f"{name}: " + ", ".join(f"{k}={v}" for k, v in over.items()))
        return 0
    flags = {"out": args.out, "threads": args.threads, "eps": args.eps, "k": args.k}
    if args.grid is not None:
        nx, ny, extent = args.grid
        if nx != int(nx) or ny != int(ny):
            print("error: --grid NX NY must be integers", file=sys.stderr)
            return 2
        flags.update(nx=int(nx), ny=int(ny), extent=float(extent))
    try:
        cfg = resolve_config(args.mode, args.config, args.preset, **flags)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
