"""Configuration, orchestration and the command-line entry point.

Runs the texture pipeline (stochastic or exact route) over momentum
grids, the transition suite, convergence studies, sweet-spot scans and
the equilibrium Chern check, writing machine-readable artifacts.

Determinism contract: for a fixed config file and seed the numeric
artifacts (texture CSVs, summary.json and friends) are byte-identical
regardless of the worker count; wall-clock data goes to a separate
run_meta.json.
"""

import argparse
import multiprocessing
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import serialize
from .errors import (
    ConfigInvalid, Defective, DegenerateField, FitDiverged, Masked, NoDbis,
    NoisyQahError, OpenContour, SingularOnLoop,
)
from .liouville import (
    S_INIT, Liouvillian, exact_evolution, find_exceptional_points,
    liouvillian_matrix, mode_decomposition,
)
from .mode_fitting import FitConfig, fit_modes, texture_average
from .model import NoiseStrengths, QahParams, bloch_field, chern_number
from .sse_engine import EvolutionSchedule, discretization_sweep, ensemble_average
from .topology import (
    TextureGrid, classify_transition, dynamical_field, extract_dbis,
    omega_min_on_dbis, sweet_spot_literal, sweet_spot_scan, winding_W,
)

__all__ = ["RunConfig", "RunSummary", "load_config", "run_texture",
           "run_transition_suite", "run_convergence", "run_sweetspot",
           "run_chern", "main"]

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "NOISYQAH_OUTPUT_DIR"
_MODES = ("sse", "oracle", "both")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_PARTIAL = 3


# ---------------------------------------------------------------- config

@dataclass
class RunConfig:
    """Validated run parameters.

    params holds the post-quench couplings actually evolved (quench_mz
    substituted for the model mz); raw echoes the input document.
    """

    label: str
    params: QahParams
    noise: NoiseStrengths
    quench_mz: float
    kx_values: np.ndarray
    ky_values: np.ndarray
    schedule: EvolutionSchedule
    n_configs: int
    seed: int
    mode: str
    outputs: str | None
    momentum: tuple | None
    extras: dict
    raw: dict


def _axis_values(spec):
    return np.linspace(float(spec["kmin"]), float(spec["kmax"]), int(spec["n"]))


def parse_config(doc: dict) -> RunConfig:
    """Build a RunConfig from a parsed JSON document.

    Collects every problem before raising ConfigInvalid, so the message
    lists all offending fields at once.
    """
    problems = []

    def need(section, key, kind, path):
        if key not in section:
            problems.append((path, "missing"))
            return None
        try:
            return kind(section[key])
        except (TypeError, ValueError):
            problems.append((path, f"not a valid {kind.__name__}"))
            return None

    if not isinstance(doc, dict):
        raise ConfigInvalid([("", "config document must be a JSON object")])
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        problems.append(("schema_version", f"must be {SCHEMA_VERSION}"))

    model = doc.get("model", {})
    xi0 = need(model, "xi0", float, "model.xi0")
    xi_so = need(model, "xi_so", float, "model.xi_so")
    quench_mz = need(doc, "quench_mz", float, "quench_mz")
    params = None
    if None not in (xi0, xi_so, quench_mz):
        try:
            params = QahParams(xi0=xi0, xi_so=xi_so, mz=quench_mz)
        except ValueError as exc:
            problems.append(("model", str(exc)))

    noise_doc = doc.get("noise", {})
    noise = None
    wx = need(noise_doc, "wx", float, "noise.wx")
    wy = need(noise_doc, "wy", float, "noise.wy")
    wz = need(noise_doc, "wz", float, "noise.wz")
    if None not in (wx, wy, wz):
        try:
            noise = NoiseStrengths(wx, wy, wz)
        except ValueError as exc:
            problems.append(("noise", str(exc)))

    grid = doc.get("grid")
    kx_values = ky_values = None
    if not isinstance(grid, dict):
        problems.append(("grid", "missing or not an object"))
    else:
        axes = grid if "kx" in grid or "ky" in grid else {"kx": grid, "ky": grid}
        got = {}
        for name in ("kx", "ky"):
            ax = axes.get(name)
            if not isinstance(ax, dict):
                problems.append((f"grid.{name}", "missing or not an object"))
                continue
            kmin = need(ax, "kmin", float, f"grid.{name}.kmin")
            kmax = need(ax, "kmax", float, f"grid.{name}.kmax")
            n = need(ax, "n", int, f"grid.{name}.n")
            if None in (kmin, kmax, n):
                continue
            if not kmin < kmax:
                problems.append((f"grid.{name}", "kmin must be < kmax"))
            elif n < 2:
                problems.append((f"grid.{name}.n", "must be >= 2"))
            else:
                got[name] = _axis_values(ax)
        kx_values = got.get("kx")
        ky_values = got.get("ky")

    sched_doc = doc.get("schedule", {})
    schedule = None
    t_total = need(sched_doc, "t_total", float, "schedule.t_total")
    n_steps = need(sched_doc, "n_steps", int, "schedule.n_steps")
    stride = need(sched_doc, "sample_stride", int, "schedule.sample_stride")
    if None not in (t_total, n_steps, stride):
        try:
            schedule = EvolutionSchedule(t_total, n_steps, stride)
        except (ValueError, NoisyQahError) as exc:
            problems.append(("schedule", str(exc)))

    mode = doc.get("mode", "oracle")
    if mode not in _MODES:
        problems.append(("mode", f"must be one of {_MODES}"))

    n_configs = int(doc.get("n_configs", 1))
    if mode in ("sse", "both") and n_configs < 1:
        problems.append(("n_configs", "must be >= 1 in sse mode"))

    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        problems.append(("seed", "must be an integer in [0, 2^64)"))

    momentum = doc.get("momentum")
    if momentum is not None:
        try:
            momentum = (float(momentum[0]), float(momentum[1]))
        except (TypeError, ValueError, IndexError):
            problems.append(("momentum", "must be a [kx, ky] pair"))
            momentum = None

    outputs = doc.get("outputs")
    if outputs is not None and not isinstance(outputs, str):
        problems.append(("outputs", "must be a path string"))
        outputs = None

    if problems:
        raise ConfigInvalid(problems)
    return RunConfig(
        label=str(doc.get("label", "run")),
        params=params, noise=noise, quench_mz=float(quench_mz),
        kx_values=kx_values, ky_values=ky_values, schedule=schedule,
        n_configs=n_configs, seed=int(seed), mode=mode, outputs=outputs,
        momentum=momentum,
        extras={k: doc[k] for k in ("convergence", "sweet_spot", "chern")
                if k in doc},
        raw=doc,
    )


def load_config(path, overrides=None) -> RunConfig:
    try:
        doc = serialize.read_json(path)
    except OSError as exc:
        raise ConfigInvalid([(str(path), f"cannot read: {exc}")])
    except ValueError as exc:
        raise ConfigInvalid([(str(path), f"not valid JSON: {exc}")])
    if overrides:
        doc = dict(doc)
        doc.update({k: v for k, v in overrides.items() if v is not None})
    return parse_config(doc)


# ------------------------------------------------------------- summaries

@dataclass
class RunSummary:
    """Everything a run produced, minus wall-clock data.

    to_dict() round-trips losslessly through the 17-digit JSON writer.
    """

    label: str
    version: str
    config_echo: dict
    cells: dict                 # mode -> list of per-cell records
    pipeline: dict              # mode -> dBIS/winding/omega results
    ep_clusters: list
    classification: dict | None
    failures: list              # [{kx, ky, mode, error}]
    cross_mode_rms: float | None = None
    timing_seconds: float = 0.0
    n_workers: int = 1

    def to_dict(self):
        return {
            "label": self.label,
            "version": self.version,
            "config_echo": self.config_echo,
            "cells": self.cells,
            "pipeline": self.pipeline,
            "ep_clusters": self.ep_clusters,
            "classification": self.classification,
            "failures": self.failures,
            "cross_mode_rms": self.cross_mode_rms,
        }

    def meta_dict(self):
        return {"timing_seconds": self.timing_seconds,
                "n_workers": self.n_workers}


def _package_version():
    from . import __version__
    return __version__


# ------------------------------------------------------------- texture

def _oracle_cell(task):
    """One exact-route cell; returns a plain record dict."""
    (i, j, kx, ky), (p, w) = task
    h = bloch_field(kx, ky, p)
    rec = {"i": i, "j": j, "kx": kx, "ky": ky, "sbar": None, "omega": 0.0,
           "defined": False, "overdamped": False, "defective": False,
           "error": None}
    try:
        dec = mode_decomposition(Liouvillian(liouvillian_matrix(h, w)), S_INIT)
    except Defective:
        rec["defective"] = True
        return rec
    rec["sbar"] = [float(v) for v in texture_average(dec)]
    rec["omega"] = float(dec.omega)
    rec["overdamped"] = bool(dec.overdamped)
    rec["defined"] = not dec.overdamped
    rec["lambda0"] = float(dec.lambda0)
    rec["lambda1"] = float(dec.lambda1)
    return rec


def _sse_cell(task):
    """One stochastic-route cell: ensemble average then blind mode fit."""
    (i, j, kx, ky), (p, w, sched, seed, n_configs) = task
    rec = {"i": i, "j": j, "kx": kx, "ky": ky, "sbar": None, "omega": None,
           "defined": False, "overdamped": False, "defective": False,
           "error": None}
    traj = ensemble_average((kx, ky), p, w, sched, seed, n_configs)
    # widen the acceptance to the statistical floor of the ensemble mean
    fit_cfg = FitConfig(residual_threshold=max(0.05, n_configs ** -0.5))
    try:
        fit = fit_modes(traj, cfg=fit_cfg)
    except (ValueError, NoisyQahError) as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
        return rec
    dec = fit.decomposition
    rec["sbar"] = [float(v) for v in texture_average(dec)]
    rec["omega"] = float(dec.omega)
    rec["overdamped"] = bool(dec.overdamped)
    rec["defined"] = not dec.overdamped
    rec["residual_rms"] = float(fit.residual_rms)
    rec["lambda0"] = float(dec.lambda0)
    rec["lambda1"] = float(dec.lambda1)
    return rec


def _map_cells(func, tasks, workers):
    if workers <= 1:
        return [func(t) for t in tasks]
    with multiprocessing.Pool(workers) as pool:
        return pool.map(func, tasks)   # map() preserves task order


def _grid_from_records(cfg: RunConfig, records) -> TextureGrid:
    nx, ny = len(cfg.kx_values), len(cfg.ky_values)
    s_bar = np.full((nx, ny, 3), np.nan)
    omega = np.zeros((nx, ny))
    defined = np.zeros((nx, ny), dtype=bool)
    for rec in records:
        i, j = rec["i"], rec["j"]
        if rec["sbar"] is not None:
            s_bar[i, j] = rec["sbar"]
            omega[i, j] = rec["omega"]
        defined[i, j] = rec["defined"]
    kxg, kyg = np.meshgrid(cfg.kx_values, cfg.ky_values, indexing="ij")
    h = bloch_field(kxg, kyg, cfg.params)
    norm = np.linalg.norm(h, axis=-1, keepdims=True)
    axis = np.where(norm > 0, h / np.where(norm > 0, norm, 1.0),
                    np.array([0.0, 0.0, 1.0]))
    return TextureGrid(kx_values=cfg.kx_values, ky_values=cfg.ky_values,
                       s_bar=s_bar, defined_mask=defined, axis=axis,
                       omega=omega)


def _pipeline_on_grid(grid: TextureGrid):
    """dBIS extraction, windings and the on-surface omega minimum.

    Physics verdicts (no surface, open or interrupted surfaces, masked
    field points) are reported, not raised; only unexpected numerics
    escape.
    """
    out = {"dbis": [], "omega_min": None, "notes": []}
    if min(grid.shape) < 8:
        out["notes"].append("grid below 8x8: contour extraction skipped")
        return out
    try:
        curves = extract_dbis(grid)
    except NoDbis:
        out["notes"].append("no dBIS: locator field has no zero crossing")
        return out
    except OpenContour as exc:
        out["notes"].append(f"open dBIS: {exc}")
        return out
    try:
        out["omega_min"] = omega_min_on_dbis(grid)
    except NoDbis:
        pass
    for c in curves:
        entry = {
            "points": [[float(x), float(y)] for x, y in c.points],
            "closed": bool(c.closed),
            "n_mask_breaks": int(c.n_mask_breaks),
            "threshold_violations": int(c.threshold_violations),
            "winding_W": None, "winding_residual": None,
        }
        if c.closed:
            try:
                fld = dynamical_field(grid, c)
                value, residual = winding_W(fld, return_residual=True)
                entry["winding_W"] = value
                entry["winding_residual"] = residual
            except (Masked, DegenerateField) as exc:
                out["notes"].append(f"winding undefined: {exc}")
        out["dbis"].append(entry)
    return out


def run_texture(cfg: RunConfig, workers: int = 1,
                classification_grid_n: int = 101,
                ep_grid_n: int = 201) -> RunSummary:
    """Full pipeline over the configured momentum grid.

    Per mode: per-cell evolution and averaging, texture assembly, dBIS
    extraction, dynamical winding.  Exceptional clusters and the
    transition verdict always come from the exact route on the full
    zone.  Cell failures are masked and listed, never fatal.
    """
    t0 = time.perf_counter()
    modes = ["sse", "oracle"] if cfg.mode == "both" else [cfg.mode]
    coords = [
        (i, j, float(kx), float(ky))
        for i, kx in enumerate(cfg.kx_values)
        for j, ky in enumerate(cfg.ky_values)
    ]
    cells, pipeline, grids, failures = {}, {}, {}, []
    for mode in modes:
        if mode == "oracle":
            ctx = (cfg.params, cfg.noise)
            records = _map_cells(_oracle_cell, [(c, ctx) for c in coords], workers)
        else:
            ctx = (cfg.params, cfg.noise, cfg.schedule, cfg.seed, cfg.n_configs)
            records = _map_cells(_sse_cell, [(c, ctx) for c in coords], workers)
        for rec in records:
            if rec["error"]:
                failures.append({"kx": rec["kx"], "ky": rec["ky"],
                                 "mode": mode, "error": rec["error"]})
        cells[mode] = records
        grids[mode] = _grid_from_records(cfg, records)
        pipeline[mode] = _pipeline_on_grid(grids[mode])

    clusters = find_exceptional_points(cfg.params, cfg.noise, grid_n=ep_grid_n)
    report = classify_transition(cfg.params, cfg.noise,
                                 grid_n=classification_grid_n,
                                 ep_grid_n=ep_grid_n)
    cross_rms = None
    if cfg.mode == "both":
        a, b = grids["sse"], grids["oracle"]
        both = a.defined_mask & b.defined_mask
        if both.any():
            diff = a.s_bar[both] - b.s_bar[both]
            cross_rms = float(np.sqrt(np.mean(diff ** 2)))
    return RunSummary(
        label=cfg.label, version=_package_version(), config_echo=cfg.raw,
        cells=cells, pipeline=pipeline,
        ep_clusters=[_cluster_dict(c) for c in clusters],
        classification=_report_dict(report),
        failures=failures, cross_mode_rms=cross_rms,
        timing_seconds=time.perf_counter() - t0, n_workers=workers,
    )


def _cluster_dict(c):
    return {"centroid": [float(v) for v in c.centroid], "n_cells": int(c.n_cells),
            "radius": float(c.radius), "min_angle": float(c.min_angle),
            "charge_coincident": bool(c.charge_coincident)}


def _report_dict(r):
    return {
        "phase": r.phase,
        "dbis_closed": bool(r.dbis_closed),
        "dbis_interrupted": bool(r.dbis_interrupted),
        "ep_dbis_distance": float(r.ep_dbis_distance)
        if np.isfinite(r.ep_dbis_distance) else None,
        "ne_windings": {str(k): int(v) for k, v in r.ne_windings.items()},
        "notes": list(r.notes),
    }


def _write_texture_artifacts(cfg: RunConfig, summary: RunSummary, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    for mode, records in summary.cells.items():
        grid = _grid_from_records(cfg, records)
        serialize.write_texture_csv(
            os.path.join(out_dir, f"texture_{mode}.csv"),
            grid.kx_values, grid.ky_values, grid.s_bar, grid.omega,
            grid.defined_mask,
        )
    serialize.write_json(os.path.join(out_dir, "summary.json"), summary.to_dict())
    serialize.write_json(os.path.join(out_dir, "run_meta.json"), summary.meta_dict())


# ------------------------------------------------------- other commands

def run_transition_suite(cfgs, workers: int = 1):
    """Classification verdicts for a list of configs; empty list is fine."""
    rows = []
    for cfg in cfgs:
        report = classify_transition(cfg.params, cfg.noise)
        ne = sorted(report.ne_windings.items())
        rows.append({
            "label": cfg.label,
            "phase": report.phase,
            "N_E": int(ne[0][1]) if ne else None,
            "dbis_closed": bool(report.dbis_closed),
            "dbis_interrupted": bool(report.dbis_interrupted),
            "notes": list(report.notes),
        })
    return rows


def run_convergence(cfg: RunConfig, m_list=None, config_counts=None):
    """Trotter-step and ensemble-size studies at one momentum.

    The ensemble table runs on a refined schedule (default 3000 steps)
    so the discretization bias sits well below the statistical error at
    the largest ensemble and the fitted slope measures pure 1/sqrt(n)
    convergence; the M table keeps the configured schedule, since its
    whole point is the discretization error.
    """
    extras = cfg.extras.get("convergence", {})
    m_list = list(m_list or extras.get("m_list", (30, 100, 300)))
    config_counts = list(config_counts or
                         extras.get("config_counts", (50, 200, 1000, 5000)))
    if cfg.momentum is None:
        raise ConfigInvalid([("momentum", "required for convergence runs")])
    k = cfg.momentum
    m_table = discretization_sweep(k, cfg.params, cfg.noise, cfg.schedule,
                                   m_list, cfg.seed, cfg.n_configs)
    fine = cfg.schedule.with_steps(int(extras.get("ensemble_n_steps", 3000)))
    oracle = exact_evolution(k, cfg.params, cfg.noise, S_INIT,
                             fine.sample_times)
    ensemble_table = []
    for n in sorted(config_counts):
        sse = ensemble_average(k, cfg.params, cfg.noise, fine, cfg.seed, n)
        rms = float(np.sqrt(np.mean((sse.polarization - oracle.polarization) ** 2)))
        ensemble_table.append({"n_configs": int(n), "rms": rms})
    logs = np.log10([[e["n_configs"], e["rms"]] for e in ensemble_table])
    slope = float(np.polyfit(logs[:, 0], logs[:, 1], 1)[0])
    return {
        "momentum": [float(k[0]), float(k[1])],
        "m_table": {str(m): v for m, v in m_table.items()},
        "ensemble_table": ensemble_table,
        "ensemble_slope": slope,
    }


def run_sweetspot(cfg: RunConfig):
    """Literal inequality plus the operational scan along one direction."""
    extras = cfg.extras.get("sweet_spot", {})
    if "direction" in extras:
        d = extras["direction"]
        direction = NoiseStrengths(float(d["wx"]), float(d["wy"]), float(d["wz"]))
    else:
        direction = cfg.noise
    magnitudes = [float(m) for m in extras.get("magnitudes", (0.5, 5.0, 10.0))]
    grid_n = int(extras.get("grid_n", 101))
    scan = sweet_spot_scan(cfg.params, direction, magnitudes, grid_n=grid_n)
    for entry in scan:
        w = direction.scaled(entry["magnitude"])
        entry["literal_inequality"] = sweet_spot_literal(cfg.params, w)
    return {
        "direction": {"wx": direction.wx, "wy": direction.wy, "wz": direction.wz},
        "grid_n": grid_n,
        "scan": scan,
    }


def run_chern(cfg: RunConfig):
    """Equilibrium Chern numbers for the configured and extra mz values."""
    extras = cfg.extras.get("chern", {})
    mz_values = [float(v) for v in extras.get("mz_values", (cfg.quench_mz,))]
    rows = []
    for mz in mz_values:
        p = QahParams(cfg.params.xi0, cfg.params.xi_so, mz)
        try:
            rows.append({"mz": mz, "chern": int(chern_number(p))})
        except NoisyQahError as exc:
            rows.append({"mz": mz, "chern": None,
                         "error": f"{type(exc).__name__}: {exc}"})
    return {"chern_table": rows}


# ------------------------------------------------------------------ cli

def _resolve_out_dir(flag_value, cfg: RunConfig):
    if flag_value:
        return flag_value
    if cfg.outputs:
        return cfg.outputs
    return os.environ.get(OUTPUT_DIR_ENV, "noisyqah-results")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="noisyqah",
        description="Noise-driven quench dynamics of the 2D QAH model: "
                    "spin textures, dynamical windings and exceptional-point "
                    "diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "texture": "run the texture pipeline on the configured grid",
        "transitions": "classify one or more parameter sets",
        "convergence": "Trotter-step and ensemble-size studies",
        "sweetspot": "noise-insensitivity scan along a noise direction",
        "chern": "equilibrium Chern numbers",
    }
    for name, help_text in specs.items():
        cmd = sub.add_parser(name, help=help_text)
        if name == "transitions":
            cmd.add_argument("--config", action="append", default=[],
                             metavar="PATH", help="config file (repeatable)")
        else:
            cmd.add_argument("--config", required=True, metavar="PATH")
        cmd.add_argument("--out", metavar="DIR", default=None,
                         help=f"output directory (default: config, then "
                              f"${OUTPUT_DIR_ENV})")
        cmd.add_argument("--workers", type=int, default=1, metavar="N")
        cmd.add_argument("--seed", type=int, default=None, metavar="U64")
        cmd.add_argument("--mode", choices=_MODES, default=None)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "mode": args.mode}
    try:
        if args.command == "transitions":
            cfgs = [load_config(p, overrides) for p in args.config]
            out_dir = args.out or (
                _resolve_out_dir(None, cfgs[0]) if cfgs
                else os.environ.get(OUTPUT_DIR_ENV, "noisyqah-results"))
            rows = run_transition_suite(cfgs, workers=args.workers)
            os.makedirs(out_dir, exist_ok=True)
            serialize.write_json(os.path.join(out_dir, "transitions.json"),
                                 {"verdicts": rows})
            for row in rows:
                print(f"{row['label']}: {row['phase']}"
                      + (f" (N_E = {row['N_E']})" if row["N_E"] is not None else ""))
            print(f"wrote {os.path.join(out_dir, 'transitions.json')}")
            return EXIT_OK

        cfg = load_config(args.config, overrides)
        out_dir = _resolve_out_dir(args.out, cfg)

        if args.command == "texture":
            summary = run_texture(cfg, workers=args.workers)
            _write_texture_artifacts(cfg, summary, out_dir)
            phase = summary.classification["phase"]
            windings = [d["winding_W"] for d in
                        summary.pipeline[list(summary.pipeline)[-1]]["dbis"]
                        if d["winding_W"] is not None]
            print(f"{cfg.label}: phase = {phase}, W = {windings or 'n/a'}, "
                  f"{len(summary.failures)} failed cells")
            print(f"wrote {os.path.join(out_dir, 'summary.json')}")
            return EXIT_PARTIAL if summary.failures else EXIT_OK

        if args.command == "convergence":
            report = run_convergence(cfg)
            os.makedirs(out_dir, exist_ok=True)
            serialize.write_json(os.path.join(out_dir, "convergence.json"), report)
            worst = min(v["fidelity"] for v in report["m_table"].values())
            print(f"{cfg.label}: min fidelity {worst:.4f}, "
                  f"ensemble slope {report['ensemble_slope']:.3f}")
            print(f"wrote {os.path.join(out_dir, 'convergence.json')}")
            return EXIT_OK

        if args.command == "sweetspot":
            report = run_sweetspot(cfg)
            os.makedirs(out_dir, exist_ok=True)
            serialize.write_json(os.path.join(out_dir, "sweetspot.json"), report)
            for e in report["scan"]:
                print(f"magnitude {e['magnitude']}: dBIS stable = "
                      f"{e['dbis_stable']}, EP on dBIS = {e['ep_on_dbis']}")
            print(f"wrote {os.path.join(out_dir, 'sweetspot.json')}")
            return EXIT_OK

        if args.command == "chern":
            report = run_chern(cfg)
            os.makedirs(out_dir, exist_ok=True)
            serialize.write_json(os.path.join(out_dir, "chern.json"), report)
            for row in report["chern_table"]:
                print(f"mz = {row['mz']}: C = {row['chern']}")
            print(f"wrote {os.path.join(out_dir, 'chern.json')}")
            return EXIT_OK
    except ConfigInvalid as exc:
        for fieldname, message in exc.problems:
            print(f"config error: {fieldname}: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except (Defective, FitDiverged, DegenerateField, Masked, SingularOnLoop,
            NoisyQahError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
