"""File-level steps behind the command line: each reads inputs, writes outputs
into a directory and returns a JSON-ready summary."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io, metrics, oed, rom, scenarios
from .config import parse_list
from .errors import DomainError, LayoutError, SchemaError
from .estimator import EstimationConfig, LomForward, RomForward, estimate
from .model import (
    BoundaryForcing,
    DimensionlessScaling,
    InitialProfile,
    SensorLayout,
    WallProblem,
    assemble_lom,
    integrate_lom,
    nondimensionalize,
    redimensionalize,
)
from .swarm import SwarmConfig


def write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def write_table(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ---------------------------------------------------------------------------
# Problem assembly from a dataset
# ---------------------------------------------------------------------------

def positions_of(cfg, ds):
    if cfg.problem.positions:
        pos = tuple(parse_list(cfg.problem.positions))
    elif ds.positions is not None:
        pos = ds.positions
    else:
        raise LayoutError("sensor positions unknown: set problem.positions or ship a .meta.json")
    if len(pos) != ds.n_sensors:
        raise LayoutError(f"{len(pos)} sensor positions for {ds.n_sensors} sensor columns")
    return SensorLayout(pos)


def length_of(cfg, ds):
    L = cfg.problem.length if cfg.problem.length is not None else ds.meta.get("length")
    if L is None:
        raise SchemaError("wall thickness unknown: set problem.length")
    return float(L)


def conductivity_of(cfg, ds):
    k = cfg.problem.conductivity
    if k is None:
        k = ds.meta.get("conductivity", 1.0)
    return float(k)


def scaling_of(cfg, *datasets):
    p = cfg.problem
    if p.T_ref is not None and p.T_min is not None:
        return DimensionlessScaling(T_ref=p.T_ref, T_min=p.T_min, t_ref=p.t_ref)
    series = []
    for ds in datasets:
        series += [ds.T_left, ds.T_right, ds.sensors]
    auto = DimensionlessScaling.from_series(*series, t_ref=p.t_ref)
    return DimensionlessScaling(T_ref=p.T_ref if p.T_ref is not None else auto.T_ref,
                                T_min=p.T_min if p.T_min is not None else auto.T_min,
                                t_ref=p.t_ref)


def full_problem(cfg, ds, alpha):
    """Whole sequence with a straight-line initial profile between the faces."""
    L = length_of(cfg, ds)
    layout = positions_of(cfg, ds)
    init = InitialProfile.fit(layout.positions, ds.sensors[0], L, ds.T_left[0], ds.T_right[0],
                              degree=1)
    k = conductivity_of(cfg, ds)
    return WallProblem(L, k, k / alpha, ds.times_s, ds.T_left, ds.T_right, init), layout


@dataclass(eq=False)
class Window:
    """Observation window prepared for learning or estimation."""

    problem: WallProblem
    layout: SensorLayout
    data: io.Dataset
    system: object
    scaling: DimensionlessScaling
    init: np.ndarray
    start_h: float
    stop_h: float
    initial_mode: str

    @property
    def forcing(self):
        return BoundaryForcing.from_problem(self.problem, self.scaling)

    @property
    def measured(self):
        return nondimensionalize(self.data.sensors, self.scaling)


def window_bounds(cfg, ds, plan=None):
    """``(start_h, stop_h)`` from the config, an OED plan summary, or the full range."""
    start_d = cfg.oed.start_days
    if start_d is None and plan is not None:
        start_d = plan["selected"]["t_ini_days"]
    if start_d is None:
        return float(ds.times_h[0]), float(ds.times_h[-1])
    stop_h = 24.0 * (start_d + cfg.oed.window_days)
    if start_d < 0 or stop_h > ds.times_h[-1] + 1e-9:
        raise DomainError(f"window [{start_d}, {start_d + cfg.oed.window_days}] d "
                          "is outside the dataset")
    return 24.0 * start_d, stop_h


def make_window(cfg, ds, scaling, plan=None):
    start_h, stop_h = window_bounds(cfg, ds, plan)
    problem, layout = full_problem(cfg, ds, cfg.estimate.p_apr)
    system = assemble_lom(problem, layout, cfg.solver.n_nodes)
    full_range = start_h <= ds.times_h[0] and stop_h >= ds.times_h[-1]
    sub = ds if full_range else ds.window(start_h, stop_h)
    mode = "line" if full_range else cfg.oed.initial
    if full_range:
        init_T = problem.initial(system.nodes * problem.length)
        wprob = problem
    elif mode == "fit":
        prof = InitialProfile.fit(layout.positions, sub.sensors[0], problem.length,
                                  sub.T_left[0], sub.T_right[0], degree=2)
        wprob = problem.window(start_h * 3600.0, stop_h * 3600.0, initial=prof)
        init_T = prof(system.nodes * problem.length)
    elif mode == "warm":
        # the recorded profile is only the face-to-face line; the field comes from the LOM
        line = InitialProfile.fit(layout.positions, sub.sensors[0], problem.length,
                                  sub.T_left[0], sub.T_right[0], degree=1)
        wprob = problem.window(start_h * 3600.0, stop_h * 3600.0, initial=line)
        init_T = warm_field(cfg, problem, system, scaling, start_h)
    else:
        raise SchemaError(f"oed.initial must be 'fit' or 'warm', got {mode!r}")
    init = nondimensionalize(init_T, scaling)
    return Window(wprob, layout, sub, system, scaling, init, start_h, stop_h, mode)


def warm_field(cfg, problem, system, scaling, start_h):
    """Interior temperatures at ``start_h`` from the LOM at the prior diffusivity."""
    u0 = nondimensionalize(problem.initial(system.nodes * problem.length), scaling)
    if start_h <= 0:
        return redimensionalize(u0, scaling)
    dt = cfg.solver.dt / scaling.t_ref
    n = int(round(start_h * 3600.0 / cfg.solver.dt))
    sol = integrate_lom(system, scaling.fourier(cfg.estimate.p_apr, problem.length),
                        BoundaryForcing.from_problem(problem, scaling), u0, dt,
                        t_end=n * dt, every=n, keep_field=True)
    return redimensionalize(sol.field[-1], scaling)


def _every(cfg, ds):
    every = int(round(ds.step_h * 3600.0 / cfg.solver.dt))
    if every < 1 or not np.isclose(every * cfg.solver.dt, ds.step_h * 3600.0):
        raise DomainError(f"data step {ds.step_h} h is not a multiple of the solver step")
    return every


def artifact_path(cfg, out):
    """Where ``learn`` writes the ROM: ``rom.artifact`` inside ``out`` unless absolute."""
    art = Path(cfg.rom.artifact)
    return art if art.is_absolute() else Path(out) / art.name


def load_plan(path):
    if path is None:
        return None
    p = Path(path)
    if not p.is_file():
        raise SchemaError(f"OED plan not found: {p}")
    with open(p, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def run_synth(scenario, seed, out, noise=True, alpha=None, name=None):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    ds = scenarios.synth_experiment(scenario, seed, alpha=alpha, noise=noise)
    path = out / (name or f"{scenario}.csv")
    io.save_dataset(ds, path)
    summary = {"dataset": str(path), "rows": int(ds.times_h.size), "scenario": scenario,
               "seed": int(seed), "alpha_true": ds.meta["alpha_true"]}
    write_json(out / "synth.json", summary)
    return summary


def _training_entries(cfg):
    """``(alpha, dataset)`` pairs from ``rom.cases`` (``alpha`` or ``alpha@path``)."""
    text = cfg.rom.cases.strip()
    if not text:
        raise SchemaError("rom.cases is empty: list training diffusivities, e.g. '1e-7, 3e-7'")
    entries = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        alpha_s, _, path = item.partition("@")
        try:
            alpha = float(alpha_s)
        except ValueError:
            raise SchemaError(f"rom.cases entry {item!r}: bad diffusivity") from None
        entries.append((alpha, path.strip() or None))
    return entries


def run_learn(cfg, ds_main, seed, out, plan=None):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    entries = _training_entries(cfg)
    datasets = {None: ds_main}
    for _, path in entries:
        if path is not None and path not in datasets:
            datasets[path] = io.load_dataset(path)
    scaling = scaling_of(cfg, *datasets.values())
    windows = {}
    for key, ds in datasets.items():
        windows[key] = make_window(cfg, ds, scaling, plan if key is None else None)
    ref = windows[entries[0][1]]
    dt = cfg.solver.dt / scaling.t_ref
    built = []
    for alpha, key in entries:
        w = windows[key]
        if w.layout.positions != ref.layout.positions or w.problem.length != ref.problem.length:
            raise LayoutError("training datasets must share wall thickness and sensor positions")
        built.append((alpha, w.forcing, w.init, key or "data"))
    learning = rom.LearningSet.build(ref.system, built, scaling, dt)
    swarm = SwarmConfig(particles=cfg.rom.particles, iterations=cfg.rom.iterations,
                        inertia=cfg.rom.inertia, cognitive=cfg.rom.cognitive,
                        social=cfg.rom.social, bound_scale=cfg.rom.bound_scale, seed=seed)
    start = time.perf_counter()
    reduced = rom.learn(learning, cfg.rom.order, swarm, polish=cfg.rom.polish,
                        floor=cfg.rom.floor, floor_scope=cfg.rom.floor_scope)
    elapsed = time.perf_counter() - start
    art = artifact_path(cfg, out)
    io.save_rom(reduced, art)
    e2u, eiu, e2t, eit = rom.rom_errors(reduced, learning.cases, dt, T_ref=scaling.T_ref)
    summary = {"artifact": str(art), "order": cfg.rom.order, "j_rom": reduced.record["j_rom"],
            "train_eps2_u": e2u, "train_epsinf_u": eiu, "train_eps2_theta": e2t,
            "train_epsinf_theta": eit, "learn_seconds": elapsed, "seed": int(seed),
            "T_ref": scaling.T_ref, "T_min": scaling.T_min,
            "window_h": [ref.start_h, ref.stop_h], "initial": ref.initial_mode}
    write_json(out / "learn.json", summary)
    return summary


def run_oed(cfg, ds, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    problem, layout = full_problem(cfg, ds, cfg.estimate.p_apr)
    scaling = scaling_of(cfg, ds)
    sigma_m = cfg.oed.sigma_m if cfg.oed.sigma_m is not None else (ds.sigma_m or 0.1)
    delta_x = cfg.oed.delta_x if cfg.oed.delta_x is not None else (ds.delta_x or 0.0)
    unc = oed.UncertaintyModel(sigma_m, delta_x)
    run = oed.sensitivity_run(problem, layout, scaling, cfg.estimate.p_apr, cfg.solver.n_nodes,
                              cfg.solver.dt, ds.step_h * 3600.0, unc)
    plans = oed.search_window(run, cfg.oed.window_days, cfg.oed.stride_hours)
    write_table(out / "oed_plans.csv", ["t_ini_days", "psi_raw", "psi"],
                [(p.t_ini, p.psi_raw, p.psi) for p in sorted(plans, key=lambda p: p.t_ini)])
    lengths = [x for x in parse_list(cfg.oed.lengths) if x * 24.0 <= ds.times_h[-1]]
    curve = oed.criterion_vs_length(run, lengths, cfg.oed.stride_hours)
    write_table(out / "oed_lengths.csv", ["length_days", "psi_raw", "rom_cost_hours"], curve)
    best = plans[0]
    summary = {
        "selected": {"t_ini_days": best.t_ini, "length_days": best.length,
                     "psi_raw": best.psi_raw, "psi": best.psi},
        "top": [{"t_ini_days": p.t_ini, "psi": p.psi} for p in plans[:5]],
        "sigma_degC": list(best.sigma),
        "p_apr": cfg.estimate.p_apr,
        "convention": "theta dimensionless (d u / d Fo), sigma divided by T_ref, time in t/t_ref",
        "T_ref": scaling.T_ref,
    }
    write_json(out / "oed.json", summary)
    return summary


def build_forwards(cfg, w, ds, rom_path):
    """Forward models selected by ``estimate.model`` and the sample spacing of the data."""
    every = _every(cfg, w.data)
    dt = cfg.solver.dt / w.scaling.t_ref
    t_end = (w.stop_h - w.start_h) * 3600.0 / w.scaling.t_ref
    out = {}
    if cfg.estimate.model in ("lom", "both") or cfg.estimate.baseline:
        out["lom"] = LomForward(w.system, w.forcing, w.init, dt, t_end, every, w.scaling)
    if cfg.estimate.model in ("rom", "both"):
        reduced = io.load_rom(rom_path, n_sensors=ds.n_sensors)
        check_rom(reduced, w)
        out["rom"] = RomForward(reduced, w.forcing, dt, t_end, every, w.scaling)
    return out, dt * every


def check_rom(reduced, w):
    if not np.isclose(reduced.length, w.problem.length):
        raise SchemaError(f"ROM built for a {reduced.length} m wall, data wall is "
                          f"{w.problem.length} m")
    if not np.allclose(reduced.positions, w.layout.positions):
        raise LayoutError("ROM sensor positions differ from the dataset's")
    if np.isfinite(reduced.t_ref) and not np.isclose(reduced.t_ref, w.scaling.t_ref):
        raise SchemaError(f"ROM uses t_ref={reduced.t_ref}, run uses {w.scaling.t_ref}")


def run_estimate(cfg, ds, out, rom_path=None, plan=None):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.estimate.model not in ("rom", "lom", "both"):
        raise SchemaError(f"estimate.model must be rom, lom or both, got {cfg.estimate.model!r}")
    if cfg.estimate.model in ("rom", "both"):
        if rom_path is None or not Path(rom_path).is_file():
            raise SchemaError(f"ROM artifact not found: {rom_path}")
    scaling = scaling_of(cfg, ds)
    w = make_window(cfg, ds, scaling, plan)
    forwards, sample_dt = build_forwards(cfg, w, ds, rom_path)
    est_cfg = EstimationConfig(p_apr=cfg.estimate.p_apr, eta1=cfg.estimate.eta1,
                               eta2=cfg.estimate.eta2, max_iter=cfg.estimate.max_iter,
                               bounds=(cfg.estimate.lower, cfg.estimate.upper))
    results = {}
    for name in ("rom", "lom"):
        if name not in forwards:
            continue
        p, trace = estimate(est_cfg, w.measured, sample_dt, forwards[name])
        write_table(out / f"trace_{name}.csv", ["k", "p", "J", "gamma1", "gamma2"], trace.rows())
        results[name] = {"p": p, "iterations": trace.iterations, "status": trace.status,
                         "t_cpu": trace.t_cpu, "halvings": int(sum(trace.halvings)),
                         "J": trace.J[-1]}
    primary = "rom" if "rom" in results and cfg.estimate.model != "lom" else "lom"
    summary = {"estimate": results[primary]["p"], "model": primary, "runs": results,
               "window_h": [w.start_h, w.stop_h], "initial": w.initial_mode,
               "p_apr": cfg.estimate.p_apr}
    if "rom" in results and "lom" in results:
        summary["t_cpu_ratio"] = metrics.cpu_ratio(results["rom"]["t_cpu"], results["lom"]["t_cpu"])
        summary["rom_lom_rel_diff"] = metrics.eps_r(results["rom"]["p"], results["lom"]["p"])
    truth = ds.meta.get("alpha_true")
    if truth is not None:
        summary["alpha_true"] = truth
        summary["eps_r"] = {k: metrics.eps_r(v["p"], truth) for k, v in results.items()}
    write_json(out / "estimate.json", {k: v for k, v in summary.items()})
    return summary


def run_simulate(cfg, ds, out, model="lom", rom_path=None, alpha=None, plan=None):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    alpha = alpha or cfg.problem.alpha or cfg.estimate.p_apr
    scaling = scaling_of(cfg, ds)
    w = make_window(cfg, ds, scaling, plan)
    cfg_model = cfg.estimate.model
    cfg.estimate.model = model
    saved = cfg.estimate.baseline
    cfg.estimate.baseline = model == "lom"
    try:
        forwards, _ = build_forwards(cfg, w, ds, rom_path)
    finally:
        cfg.estimate.model = cfg_model
        cfg.estimate.baseline = saved
    start = time.perf_counter()
    u, s = forwards[model](alpha)
    elapsed = time.perf_counter() - start
    pred = io.Dataset(w.data.times_h, w.data.T_left, w.data.T_right,
                      redimensionalize(u, scaling), w.layout.positions, w.data.step_h,
                      meta={"model": model, "alpha": alpha})
    io.save_dataset(pred, out / f"simulate_{model}.csv")
    write_table(out / f"sensitivity_{model}.csv",
                ["time_h"] + [f"s{i + 1}" for i in range(s.shape[1])],
                np.column_stack([w.data.times_h, s]))
    summary = {"model": model, "alpha": alpha, "t_cpu": elapsed,
               "eps2_degC": metrics.eps2(redimensionalize(u, scaling), w.data.sensors)}
    write_json(out / f"simulate_{model}.json", summary)
    return summary


def run_validate(cfg, ds, out, p_est, rom_path=None):
    """Whole-sequence reliability: residual spread at the prior and the estimate,
    plus inside heat flux and thermal loads under diffusivity perturbations."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    scaling = scaling_of(cfg, ds)
    saved = cfg.oed.start_days
    cfg.oed.start_days = None
    try:
        w = make_window(cfg, ds, scaling)
    finally:
        cfg.oed.start_days = saved
    every = _every(cfg, ds)
    dt = cfg.solver.dt / scaling.t_ref
    t_end = (w.stop_h - w.start_h) * 3600.0 / scaling.t_ref
    if cfg.estimate.validate_model == "rom":
        reduced = io.load_rom(rom_path, n_sensors=ds.n_sensors)
        check_rom(reduced, w)
        # the straight-line start is the steady profile: zero reduced state
        fwd = RomForward(reduced, w.forcing, dt, t_end, every, scaling, x0=np.zeros(reduced.order))
    elif cfg.estimate.validate_model == "lom":
        fwd = LomForward(w.system, w.forcing, w.init, dt, t_end, every, scaling)
    else:
        raise SchemaError("estimate.validate_model must be rom or lom")
    sigma = ds.meta.get("noise_std") or ([ds.sigma_m] * ds.n_sensors if ds.sigma_m else None)
    dists = {}
    for label, alpha in (("prior", cfg.estimate.p_apr), ("estimate", p_est)):
        u, _ = fwd(alpha)
        dists[label] = metrics.residual_distribution(redimensionalize(u, scaling), ds.sensors, sigma)
    rows = []
    for label, d in dists.items():
        for s in range(ds.n_sensors):
            centers = 0.5 * (d.edges[s][1:] + d.edges[s][:-1])
            for c, n in zip(centers, d.counts[s]):
                rows.append((label, s + 1, c, int(n)))
    write_table(out / "residual_hist.csv", ["model", "sensor", "center_degC", "count"], rows)

    side = cfg.problem.inside
    loads = {}
    flux_rows = None
    k = w.problem.conductivity
    for factor in (1.0, 1.0 - cfg.estimate.perturbation, 1.0 + cfg.estimate.perturbation):
        sol = integrate_lom(w.system, scaling.fourier(p_est * factor, w.problem.length), w.forcing,
                            w.init, dt, t_end=t_end, every=every, keep_field=True)
        field = redimensionalize(sol.full_field(), scaling)
        j = metrics.heat_flux(field, k, w.problem.length, side=side)
        if side == "left":
            j = -j  # positive when heat leaves the wall into the room
        times_s = sol.t * scaling.t_ref
        loads[factor] = metrics.thermal_loads(j, times_s)
        if factor == 1.0:
            flux_rows = np.column_stack([times_s / 3600.0, j])
    write_table(out / "flux.csv", ["time_h", "flux_W_m2"], flux_rows)
    report = metrics.FluxReport(flux_rows[:, 1], loads[1.0],
                                {f: E for f, E in loads.items() if f != 1.0})
    summary = {
        "p_apr": cfg.estimate.p_apr, "estimate": p_est, "model": cfg.estimate.validate_model,
        "residual_std_prior": dists["prior"].std.tolist(),
        "residual_std_estimate": dists["estimate"].std.tolist(),
        "residual_mean_prior": dists["prior"].mean.tolist(),
        "residual_mean_estimate": dists["estimate"].mean.tolist(),
        "noise_std": list(dists["estimate"].noise_std),
        "histogram": {"bins": metrics.HIST_BINS, "span_std": metrics.HIST_SPAN},
        "loads_J_m2": loads[1.0],
        "loads_rel_change": {f"{f:g}": v for f, v in report.relative_changes().items()},
        "inside_face": side,
    }
    write_json(out / "validate.json", summary)
    return summary


def run_report(out):
    """Collect the JSON summaries of a run directory into one markdown page."""
    out = Path(out)
    if not out.is_dir():
        raise SchemaError(f"run directory not found: {out}")
    parts = {}
    for name in ("synth", "learn", "oed", "estimate", "simulate_lom", "simulate_rom", "validate"):
        p = out / f"{name}.json"
        if p.is_file():
            with open(p, encoding="utf-8") as fh:
                parts[name] = json.load(fh)
    if not parts:
        raise SchemaError(f"no run summaries found in {out}")
    lines = ["# Run report", ""]
    for name, payload in parts.items():
        lines.append(f"## {name}")
        lines.append("")
        for k in sorted(payload):
            v = payload[k]
            if isinstance(v, (dict, list)):
                v = json.dumps(v, sort_keys=True, default=_json_default)
            lines.append(f"- {k}: {v}")
        lines.append("")
    (out / "report.md").write_text("\n".join(lines), encoding="utf-8")
    write_json(out / "report.json", parts)
    return parts
