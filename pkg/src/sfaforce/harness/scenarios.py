"""Experiment runners: execute a scenario against the simulated plant.

Each runner reproduces one bench protocol at desk scale, writes raw logs and
a summary table under the output directory, and returns the summary. All
randomness flows from the scenario seed through per-condition generators, so
a re-run with the same config and seed produces byte-identical outputs.
Conditions execute sequentially, one plant instance per condition.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import yaml

from ..calib import (
    DampingTrajectory,
    StiffnessSample,
    TransmissionSample,
    calibrate_damping,
    calibrate_stiffness,
    calibrate_transmission,
    save_artifact,
)
from ..control import LoopSegment, TimeSeriesLog, run_closed_loop
from ..kinematics import build_wrench_transform
from ..plant import ContactModel, Plant, PlantConfig
from ..sensing import capture_baseline, estimate_quasistatic, estimate_static
from .config import ExperimentScenario
from .summary import (
    MU,
    RunSummary,
    marginal_rows,
    summarize_step_records,
    write_conditions,
)

__all__ = ["run_scenario", "run_calibration"]

log = logging.getLogger(__name__)

AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


def _condition_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def _seeded_plant(scenario: ExperimentScenario, index: int, initial_volume=None,
                  contact: ContactModel | None = None) -> Plant:
    return Plant(scenario.plant, initial_volume=initial_volume, contact=contact,
                 seed=[scenario.seed, index])


def _settled_measurements(plant: Plant, samples: int) -> tuple[np.ndarray, np.ndarray]:
    """Repeated measurements at rest; returns (pressures, extensions) stacked."""
    pressures, extensions = [], []
    for _ in range(samples):
        p, x = plant.measure()
        pressures.append(p)
        extensions.append(x)
    return np.vstack(pressures), np.vstack(extensions)


def _prepare_out(scenario: ExperimentScenario, out_dir) -> Path:
    base = Path(out_dir) if out_dir is not None else Path(scenario.output_dir)
    directory = base / scenario.kind
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "resolved_config.yaml", "w", encoding="utf-8") as handle:
        yaml.safe_dump(scenario.resolved, handle, sort_keys=True)
    return directory


# --- calibration-style scenarios ---------------------------------------------

def _run_transmission_sweep(scenario: ExperimentScenario, directory: Path) -> RunSummary:
    p = scenario.params
    plant = _seeded_plant(scenario, 0)
    settle = int(p["settle_samples"])
    bend_gain = p["bend_sensitivity_kpa_per_n_per_rad"]
    samples = []
    for volume in p["volumes_ml"]:
        plant.reset_to([volume], ContactModel.free())
        p_free = _settled_measurements(plant, settle)[0].mean(axis=0)
        for angle_deg in p["bend_angles_deg"]:
            angle = float(np.deg2rad(angle_deg))
            for load in p["loads_n"]:
                if load <= 0.0:
                    continue
                plant.reset_to([volume], ContactModel.deadweight([load]))
                p_loaded = _settled_measurements(plant, settle)[0].mean(axis=0)
                rise = float(p_loaded[0] - p_free[0]) + bend_gain * angle * load
                samples.append(TransmissionSample(
                    volume=float(volume), bend_angle=angle, force=float(load),
                    pressure_rise=rise))
    result = calibrate_transmission(samples, v_lin=p["linear_region_min_ml"])

    with open(directory / "map.csv", "w", encoding="utf-8", newline="\n") as handle:
        handle.write("volume_ml,bend_deg,ratio_kpa_per_n\n")
        for iv, volume in enumerate(result.map.volumes):
            for ia, angle in enumerate(result.map.angles):
                handle.write(
                    f"{volume:.9g},{np.rad2deg(angle):.9g},{result.map.ratio[iv, ia]:.9g}\n")

    summary = RunSummary(kind=scenario.kind, seed=scenario.seed,
                         columns=["stat", "value"])
    summary.rows = [
        ["t_linear_kpa_per_n", result.t_linear],
        ["t_sigma_kpa_per_n", result.t_sigma],
        ["linear_samples", float(result.linear_samples)],
        ["grid_volumes", float(result.map.volumes.size)],
        ["grid_angles", float(result.map.angles.size)],
    ]
    return summary


def _run_static_sensing(scenario: ExperimentScenario, directory: Path) -> RunSummary:
    p = scenario.params
    model_base = scenario.sensing_model(mode="static", baseline=np.zeros(scenario.plant.count))
    rows = []
    errors_path = directory / "samples.csv"
    with open(errors_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("inflation_pct,load_n,sample,f_est_n,abs_err_n\n")
        for ci, frac in enumerate(p["inflations"]):
            plant = _seeded_plant(scenario, ci)
            volume = frac * scenario.plant.v_max
            plant.reset_to([volume], ContactModel.free())
            baseline = capture_baseline(
                _settled_measurements(plant, int(p["baseline_samples"]))[0])
            model = model_base.with_baseline(baseline)
            for load in p["loads_n"]:
                plant.reset_to([volume], ContactModel.deadweight([load]))
                pressures = _settled_measurements(plant, int(p["measure_samples"]))[0]
                estimates = np.array([estimate_static(row, model)[0] for row in pressures])
                errs = np.abs(estimates - load)
                for i, (est, err) in enumerate(zip(estimates, errs)):
                    handle.write(f"{frac * 100:.9g},{load:.9g},{i},{est:.9g},{err:.9g}\n")
                rows.append([frac * 100.0, float(load), float(errs.mean()),
                             float(errs.std(ddof=1)) if errs.size > 1 else 0.0,
                             float(errs.size)])
    summary = RunSummary(kind=scenario.kind, seed=scenario.seed,
                         columns=["inflation_pct", "load_n", "mean_abs_err_n",
                                  "err_std_n", "samples"])
    summary.rows.extend(rows)
    summary.rows.extend(marginal_rows(rows, key_columns=[0, 1], value_columns=[2, 3, 4]))
    return summary


def _run_repeatability(scenario: ExperimentScenario, directory: Path) -> RunSummary:
    p = scenario.params
    levels = np.asarray(p["levels"], dtype=float)
    reps = int(p["repetitions"])
    plant = _seeded_plant(scenario, 0)
    order_rng = _condition_rng(scenario.seed, 1)
    v_max = scenario.plant.v_max
    recorded_p = {i: [] for i in range(levels.size)}
    recorded_x = {i: [] for i in range(levels.size)}
    for _ in range(reps):
        # Visit every level once per repetition in a randomised order, the way
        # the bench protocol shuffles demanded volumes to expose history effects.
        for idx in order_rng.permutation(levels.size):
            plant.reset_to([levels[idx] * v_max], ContactModel.free())
            pressure, extension = plant.measure()
            recorded_p[idx].append(pressure[0])
            recorded_x[idx].append(extension[0])
    rows = []
    for i, frac in enumerate(levels):
        sp = float(np.std(recorded_p[i], ddof=1))
        sx = float(np.std(recorded_x[i], ddof=1))
        rows.append([frac * 100.0, sx, sp, float(reps)])
    summary = RunSummary(kind=scenario.kind, seed=scenario.seed,
                         columns=["level_pct", "sigma_extension_mm",
                                  "sigma_pressure_kpa", "visits"])
    summary.rows.extend(rows)
    mean_row = [MU, float(np.mean([r[1] for r in rows])),
                float(np.mean([r[2] for r in rows])), float(reps)]
    summary.rows.append(mean_row)
    return summary


def _run_quasistatic_validation(scenario: ExperimentScenario, directory: Path) -> RunSummary:
    p = scenario.params
    plant = _seeded_plant(scenario, 0)
    pose_rng = _condition_rng(scenario.seed, 1)
    model = scenario.sensing_model(mode="quasi_static")
    v_max = scenario.plant.v_max
    inflations = np.asarray(p["inflations"], dtype=float)
    loads = np.asarray(p["loads_n"], dtype=float)
    records = []
    with open(directory / "poses.csv", "w", encoding="utf-8", newline="\n") as handle:
        handle.write("pose,inflation_pct,load_n,f_est_n,abs_err_n\n")
        for k in range(int(p["poses"])):
            frac = float(pose_rng.choice(inflations))
            load = float(pose_rng.choice(loads))
            volume = frac * v_max
            contact = ContactModel.deadweight([load]) if load > 0 else ContactModel.free()
            plant.reset_to([volume], contact)
            pressure, _ = plant.measure()
            est = float(estimate_quasistatic(pressure, plant.state.volume, model)[0])
            err = abs(est - load)
            handle.write(f"{k},{frac * 100:.9g},{load:.9g},{est:.9g},{err:.9g}\n")
            records.append((frac, load, err))

    columns = ["inflation_pct", "load_n", "mean_abs_err_n", "err_std_n", "poses"]
    summary = RunSummary(kind=scenario.kind, seed=scenario.seed, columns=columns)

    def stats(errs: list[float]) -> list[float]:
        arr = np.asarray(errs)
        return [float(arr.mean()),
                float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
                float(arr.size)]

    for load in loads:
        errs = [e for (_, l, e) in records if l == load]
        if errs:
            summary.rows.append([MU, float(load)] + stats(errs))
    for frac in inflations:
        errs = [e for (f, _, e) in records if f == frac]
        if errs:
            summary.rows.append([frac * 100.0, MU] + stats(errs))
    summary.rows.append([MU, MU] + stats([e for (_, _, e) in records]))
    return summary


def _run_damping_id(scenario: ExperimentScenario, directory: Path) -> RunSummary:
    p = scenario.params
    dt = 0.004
    v_lo, v_hi = p["volume_start_ml"], p["volume_end_ml"]
    trajectories = []
    for idx, rate in enumerate(p["flow_rates_ml_per_s"]):
        if rate <= 0.0:
            continue
        for sign in (1.0, -1.0):
            plant = _seeded_plant(scenario, 10 * idx + (0 if sign > 0 else 1))
            start = v_lo if sign > 0 else v_hi
            plant.reset_to([start], ContactModel.free())
            span = v_hi - v_lo
            # stop one tick short of the far end so clamping never distorts the flow
            ticks = int(span / (rate * dt)) - 1
            t, v, pressure = [], [], []
            for _ in range(ticks):
                state = plant.step([sign * rate], dt)
                measured_p, _ = plant.measure()
                t.append(state.clock)
                v.append(state.volume[0])
                pressure.append(measured_p[0])
            trajectories.append(DampingTrajectory(
                flow=sign * rate, time=np.array(t), volume=np.array(v),
                pressure=np.array(pressure)))
    stiffness = (scenario.sensing_stiffness if scenario.sensing_stiffness is not None
                 else scenario.plant.stiffness)
    fit = calibrate_damping(trajectories, stiffness)
    save_artifact(
        directory / "damping_fit.yaml",
        stiffness=stiffness,
        transmission=(scenario.sensing_transmission if scenario.sensing_transmission is not None
                      else scenario.plant.transmission),
        damping=fit,
        provenance={
            "samples_negative": fit.samples_negative,
            "samples_plateau": fit.samples_plateau,
            "samples_positive": fit.samples_positive,
            "residual_rms_kpa": fit.residual_rms,
            "seed": scenario.seed,
        },
    )
    truth = scenario.plant.damping
    summary = RunSummary(kind=scenario.kind, seed=scenario.seed,
                         columns=["parameter", "recovered", "truth"])
    if truth.kind == "piecewise":
        truth_values = {
            "slope_neg": truth.slope_neg, "offset_neg": truth.offset_neg,
            "plateau": truth.plateau, "slope_pos": truth.slope_pos,
            "offset_pos": truth.offset_pos,
        }
    else:
        truth_values = {"linear_d_v": truth.d_v}
    fitted = fit.piecewise
    summary.rows = [
        ["slope_neg", fitted.slope_neg, truth_values.get("slope_neg", float("nan"))],
        ["offset_neg", fitted.offset_neg, truth_values.get("offset_neg", float("nan"))],
        ["plateau", fitted.plateau, truth_values.get("plateau", float("nan"))],
        ["slope_pos", fitted.slope_pos, truth_values.get("slope_pos", float("nan"))],
        ["offset_pos", fitted.offset_pos, truth_values.get("offset_pos", float("nan"))],
        ["linear_d_v", fit.linear.d_v, truth_values.get("linear_d_v", float("nan"))],
        ["residual_rms_kpa", fit.residual_rms, 0.0],
    ]
    return summary


# --- closed-loop step scenarios -----------------------------------------------

def _run_sfa_steps(scenario: ExperimentScenario, directory: Path) -> RunSummary:
    p = scenario.params
    model = scenario.sensing_model()
    records, traces = [], {}
    index = 0
    for frac in p["inflations"]:
        for demand in p["demands_n"]:
            plant = _seeded_plant(scenario, index)
            volume = frac * scenario.plant.v_max
            plant.reset_to([volume], ContactModel.free())
            clamp = ContactModel.clamped([scenario.plant.extension_gain * volume])
            segment = LoopSegment(duration=p["segment_s"], contact=clamp,
                                  demand_act=float(demand))
            ts = run_closed_loop(plant, model, scenario.controller, segment)
            name = f"cell{index:03d}_infl{int(round(frac * 100)):03d}_demand{demand:+.2f}.csv"
            ts.write_csv(directory / "logs" / name)
            cid = f"c{index:03d}"
            records.append({
                "condition_id": cid, "log_file": f"logs/{name}", "frame": "actuator",
                "axis": "act", "inflation_pct": frac * 100.0, "demand_n": float(demand),
                "segment_start_s": float(ts.t[0]), "segment_end_s": float(ts.t[len(ts) - 1]),
                "settle_band_n": p["settle_band_n"],
            })
            traces[cid] = (ts.t[:len(ts)], ts.f_true_act[:len(ts), 0])
            index += 1
    write_conditions(directory / "conditions.csv", records)
    return summarize_step_records(scenario.kind, scenario.seed, records, traces)


def _run_see_steps(scenario: ExperimentScenario, directory: Path) -> RunSummary:
    p = scenario.params
    model = scenario.sensing_model()
    wrench = build_wrench_transform(scenario.geometry)
    records, traces = [], {}
    index = 0
    for axis in p["axes"]:
        demands = p["demands_z_n"] if axis == "z" else p["demands_xy_n"]
        for frac in p["inflations"]:
            for demand in demands:
                plant = _seeded_plant(scenario, index)
                volume = np.full(scenario.plant.count, frac * scenario.plant.v_max)
                plant.reset_to(volume, ContactModel.free())
                clamp = ContactModel.clamped(scenario.plant.extension_gain * volume)
                demand_cart = np.zeros(3)
                demand_cart[AXIS_INDEX[axis]] = demand
                segment = LoopSegment(duration=p["segment_s"], contact=clamp,
                                      demand_cart=demand_cart, wrench=wrench)
                ts = run_closed_loop(plant, model, scenario.controller, segment)
                name = (f"cell{index:03d}_{axis}_infl{int(round(frac * 100)):03d}"
                        f"_demand{demand:+.2f}.csv")
                ts.write_csv(directory / "logs" / name)
                cid = f"c{index:03d}"
                records.append({
                    "condition_id": cid, "log_file": f"logs/{name}", "frame": "cartesian",
                    "axis": axis, "inflation_pct": frac * 100.0, "demand_n": float(demand),
                    "segment_start_s": float(ts.t[0]),
                    "segment_end_s": float(ts.t[len(ts) - 1]),
                    "settle_band_n": p["settle_band_n"],
                })
                traces[cid] = (ts.t[:len(ts)], ts.f_true_cart[:len(ts), AXIS_INDEX[axis]])
                index += 1
    write_conditions(directory / "conditions.csv", records)
    return summarize_step_records(scenario.kind, scenario.seed, records, traces)


_RUNNERS = {
    "transmission_sweep": _run_transmission_sweep,
    "static_sensing": _run_static_sensing,
    "repeatability": _run_repeatability,
    "quasistatic_validation": _run_quasistatic_validation,
    "damping_id": _run_damping_id,
    "sfa_steps": _run_sfa_steps,
    "see_steps": _run_see_steps,
}


def run_scenario(scenario: ExperimentScenario, out_dir=None, fmt: str | None = None) -> RunSummary:
    """Execute a scenario, write logs and summary, and return the summary."""
    if scenario.kind == "calibration":
        raise ValueError("calibration configs run through run_calibration / the calibrate command")
    directory = _prepare_out(scenario, out_dir)
    runner = _RUNNERS[scenario.kind]
    log.info("running %s (seed %d) -> %s", scenario.kind, scenario.seed, directory)
    summary = runner(scenario, directory)
    summary.write(directory, fmt or scenario.output_format)
    return summary


def run_calibration(scenario: ExperimentScenario, out_dir=None) -> Path:
    """Identify stiffness, damping and transmission from plant sweeps.

    Writes the calibration artifact (YAML) and returns its path. The sweep
    volumes follow a Latin-hypercube pattern over actuator space by default so
    coupled configurations are excited.
    """
    if scenario.kind != "calibration":
        raise ValueError(f"expected a calibration config, got kind {scenario.kind!r}")
    directory = _prepare_out(scenario, out_dir)
    p = scenario.params
    n = scenario.plant.count
    rng = _condition_rng(scenario.seed, 0)
    count = int(p["stiffness_samples"])
    v_lo, v_hi = p["volume_min_ml"], scenario.plant.v_max
    if p["sampling"] == "latin_hypercube":
        u = (rng.permuted(np.tile(np.arange(count), (n, 1)), axis=1).T + rng.random((count, n))) / count
    else:
        u = rng.random((count, n))
    volumes = v_lo + u * (v_hi - v_lo)

    plant = _seeded_plant(scenario, 1)
    settle = int(p["settle_samples"])
    stiffness_samples = []
    for volume in volumes:
        plant.reset_to(volume, ContactModel.free())
        pressure = _settled_measurements(plant, settle)[0].mean(axis=0)
        stiffness_samples.append(StiffnessSample(volume=volume, pressure=pressure))
    stiffness = calibrate_stiffness(stiffness_samples)

    transmission = None
    damping_fit = None
    if n == 1:
        sweep = ExperimentScenario(
            kind="transmission_sweep", seed=scenario.seed, plant=scenario.plant,
            sensing_mode=scenario.sensing_mode, sensing_stiffness=None,
            sensing_transmission=None, sensing_damping=None, controller=None,
            geometry=None, params={
                "volumes_ml": p["volumes_ml"], "bend_angles_deg": p["bend_angles_deg"],
                "loads_n": p["loads_n"], "linear_region_min_ml": p["linear_region_min_ml"],
                "bend_sensitivity_kpa_per_n_per_rad": 0.0, "settle_samples": settle,
            }, output_dir=scenario.output_dir, output_format=scenario.output_format,
            resolved=scenario.resolved)
        samples = []
        t_plant = _seeded_plant(scenario, 2)
        for volume in p["volumes_ml"]:
            t_plant.reset_to([volume], ContactModel.free())
            p_free = _settled_measurements(t_plant, settle)[0].mean(axis=0)
            for load in p["loads_n"]:
                if load <= 0:
                    continue
                t_plant.reset_to([volume], ContactModel.deadweight([load]))
                p_loaded = _settled_measurements(t_plant, settle)[0].mean(axis=0)
                samples.append(TransmissionSample(
                    volume=float(volume), bend_angle=0.0, force=float(load),
                    pressure_rise=float(p_loaded[0] - p_free[0])))
        transmission_cal = calibrate_transmission(samples, v_lin=p["linear_region_min_ml"])
        transmission = np.full(n, transmission_cal.t_linear)

        dt = 0.004
        trajectories = []
        for idx, rate in enumerate(p["flow_rates_ml_per_s"]):
            if rate <= 0:
                continue
            for sign in (1.0, -1.0):
                d_plant = _seeded_plant(scenario, 100 + 10 * idx + (0 if sign > 0 else 1))
                start = p["volume_start_ml"] if sign > 0 else p["volume_end_ml"]
                d_plant.reset_to([start], ContactModel.free())
                ticks = int((p["volume_end_ml"] - p["volume_start_ml"]) / (rate * dt)) - 1
                t, v, pressure = [], [], []
                for _ in range(ticks):
                    state = d_plant.step([sign * rate], dt)
                    measured_p, _ = d_plant.measure()
                    t.append(state.clock)
                    v.append(state.volume[0])
                    pressure.append(measured_p[0])
                trajectories.append(DampingTrajectory(
                    flow=sign * rate, time=np.array(t), volume=np.array(v),
                    pressure=np.array(pressure)))
        damping_fit = calibrate_damping(trajectories, stiffness)

    artifact_path = directory / "calibration.yaml"
    save_artifact(
        artifact_path,
        stiffness=stiffness,
        transmission=transmission if transmission is not None else scenario.plant.transmission,
        damping=damping_fit if damping_fit is not None else scenario.plant.damping,
        provenance={
            "stiffness_samples": count,
            "sampling": p["sampling"],
            "seed": scenario.seed,
            "transmission_samples": 0 if n != 1 else len(samples),
            "damping_trajectories": 0 if damping_fit is None else 2 * sum(
                1 for r in p["flow_rates_ml_per_s"] if r > 0),
        },
    )
    log.info("calibration artifact written to %s", artifact_path)
    return artifact_path
