"""Config schema, defaults and validation for experiment scenarios.

One YAML schema (integer ``schema_version``) covers plant, sensing,
controller, geometry and scenario blocks for every scenario kind plus the
calibration sweep. Unknown keys are rejected with the offending key named;
omitted keys fall back to per-kind defaults, and the fully resolved tree is
echoed to the log and written next to the outputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import yaml

from ..control import ControllerConfig, PidGains
from ..kinematics import SeeGeometry, default_see_geometry
from ..plant import DampingLaw, NoiseTable, PlantConfig, RelaxationConfig
from ..sensing import MODES, SensingModel

__all__ = ["ConfigError", "ExperimentScenario", "load_config", "resolve_config", "KINDS"]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

KINDS = (
    "transmission_sweep",
    "static_sensing",
    "repeatability",
    "quasistatic_validation",
    "damping_id",
    "sfa_steps",
    "see_steps",
    "calibration",
)

CONTROL_KINDS = ("sfa_steps", "see_steps")

#: Typical coupled stiffness estimate of the characterised three-actuator
#: assembly, kPa/ml.
COUPLED_STIFFNESS = [
    [43.31, 1.94, 1.48],
    [0.94, 48.64, 1.39],
    [0.36, 1.18, 44.18],
]

SINGLE_STIFFNESS = [[43.31]]

#: Calibrated scalar transmission, kPa/N.
TRANSMISSION = 48.5

#: Relative error of assuming a constant transmission across the inflation
#: range used for validation; the validation preset carries this mismatch
#: between plant truth and sensing model so the load-proportional error of the
#: physical system is reproduced.
TRANSMISSION_LINEARISATION_ERROR = 0.0669


class ConfigError(ValueError):
    """Config failed to parse or validate; message names the offending field."""


@dataclass(frozen=True)
class ExperimentScenario:
    """Validated, fully resolved description of one reproduction run."""

    kind: str
    seed: int
    plant: PlantConfig
    sensing_mode: str
    sensing_stiffness: np.ndarray | None
    sensing_transmission: np.ndarray | None
    sensing_damping: DampingLaw | None
    controller: ControllerConfig | None
    geometry: SeeGeometry | None
    params: dict
    output_dir: str
    output_format: str
    resolved: dict = field(repr=False, default_factory=dict)

    def sensing_model(self, mode: str | None = None,
                      baseline=None) -> SensingModel:
        """Sensing model with any overrides applied; unset entries match the plant."""
        model = SensingModel(
            stiffness=self.sensing_stiffness if self.sensing_stiffness is not None
            else self.plant.stiffness.copy(),
            transmission=self.sensing_transmission if self.sensing_transmission is not None
            else self.plant.transmission.copy(),
            damping=self.sensing_damping if self.sensing_damping is not None
            else self.plant.damping,
            mode=mode or self.sensing_mode,
        )
        if baseline is not None:
            model = model.with_baseline(baseline)
        return model


# --- low-level validated getters -------------------------------------------

def _check_mapping(node, path: str) -> dict:
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ConfigError(f"'{path}' must be a mapping, got {type(node).__name__}")
    return node


def _check_keys(mapping: dict, allowed, path: str) -> None:
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}' in '{path}'")


def _get_scalar(mapping, key, path, default, lo=None, hi=None, integer=False):
    value = mapping.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{path}.{key}' must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"'{path}.{key}' must be an integer, got {value!r}")
    value = int(value) if integer else float(value)
    if lo is not None and value < lo:
        raise ConfigError(f"'{path}.{key}' must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(f"'{path}.{key}' must be <= {hi}, got {value}")
    return value


def _get_bool(mapping, key, path, default):
    value = mapping.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"'{path}.{key}' must be true or false, got {value!r}")
    return value


def _get_choice(mapping, key, path, default, choices):
    value = mapping.get(key, default)
    if value not in choices:
        raise ConfigError(f"'{path}.{key}' must be one of {list(choices)}, got {value!r}")
    return value


def _get_list(mapping, key, path, default, lo=None, hi=None, min_len=1):
    value = mapping.get(key)
    if value is None:
        value = list(default)
    if not isinstance(value, (list, tuple)) or len(value) < min_len:
        raise ConfigError(f"'{path}.{key}' must be a list with >= {min_len} entries")
    out = []
    for i, item in enumerate(value):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"'{path}.{key}[{i}]' must be a number, got {item!r}")
        item = float(item)
        if lo is not None and item < lo:
            raise ConfigError(f"'{path}.{key}[{i}]' must be >= {lo}, got {item}")
        if hi is not None and item > hi:
            raise ConfigError(f"'{path}.{key}[{i}]' must be <= {hi}, got {item}")
        out.append(item)
    return out


# --- block parsers -----------------------------------------------------------

def _parse_damping(node, path: str, default: DampingLaw) -> DampingLaw:
    block = _check_mapping(node, path)
    if not block:
        return default
    _check_keys(block, ["kind", "d_v", "slope_neg", "offset_neg", "plateau",
                        "threshold", "slope_pos", "offset_pos"], path)
    kind = _get_choice(block, "kind", path, default.kind, ("linear", "piecewise"))
    base = DampingLaw.piecewise_default() if kind == "piecewise" else DampingLaw.linear()
    return DampingLaw(
        kind=kind,
        d_v=_get_scalar(block, "d_v", path, base.d_v),
        slope_neg=_get_scalar(block, "slope_neg", path, base.slope_neg),
        offset_neg=_get_scalar(block, "offset_neg", path, base.offset_neg),
        plateau=_get_scalar(block, "plateau", path, base.plateau),
        threshold=_get_scalar(block, "threshold", path, base.threshold, lo=0.0),
        slope_pos=_get_scalar(block, "slope_pos", path, base.slope_pos),
        offset_pos=_get_scalar(block, "offset_pos", path, base.offset_pos),
    )


def _parse_noise(node, path: str, default_enabled: bool) -> NoiseTable | None:
    block = _check_mapping(node, path)
    _check_keys(block, ["enabled", "table"], path)
    enabled = _get_bool(block, "enabled", path, default_enabled)
    if not enabled:
        return None
    table = block.get("table", "default")
    if table == "default":
        return NoiseTable.bench_default()
    if not isinstance(table, list):
        raise ConfigError(f"'{path}.table' must be 'default' or a list of [fraction, sigma_x, sigma_p] rows")
    rows = []
    for i, row in enumerate(table):
        if not isinstance(row, (list, tuple)) or len(row) != 3:
            raise ConfigError(f"'{path}.table[{i}]' must be a [fraction, sigma_x, sigma_p] triple")
        rows.append([float(x) for x in row])
    arr = np.asarray(rows)
    try:
        return NoiseTable(fractions=arr[:, 0], sigma_extension=arr[:, 1], sigma_pressure=arr[:, 2])
    except ValueError as exc:
        raise ConfigError(f"'{path}.table': {exc}") from exc


def _parse_relaxation(node, path: str) -> RelaxationConfig:
    block = _check_mapping(node, path)
    _check_keys(block, ["enabled", "amplitude_ratio", "time_constant_s"], path)
    try:
        return RelaxationConfig(
            enabled=_get_bool(block, "enabled", path, False),
            amplitude_ratio=_get_scalar(block, "amplitude_ratio", path, 0.05, lo=0.0),
            time_constant_s=_get_scalar(block, "time_constant_s", path, 30.0),
        )
    except ValueError as exc:
        raise ConfigError(f"'{path}': {exc}") from exc


def _parse_matrix(value, n: int, path: str):
    if value is None:
        return None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if n == 1:
            return np.array([[float(value)]])
        raise ConfigError(f"'{path}' must be an {n}x{n} matrix")
    if not isinstance(value, list):
        raise ConfigError(f"'{path}' must be a matrix (list of rows)")
    arr = np.asarray(value, dtype=float)
    if arr.shape != (n, n):
        raise ConfigError(f"'{path}' must have shape ({n}, {n}), got {arr.shape}")
    return arr


def _parse_per_actuator(value, n: int, path: str):
    if value is None:
        return None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return np.full(n, float(value))
    if not isinstance(value, list) or len(value) != n:
        raise ConfigError(f"'{path}' must be a number or a list of {n} numbers")
    return np.asarray([float(v) for v in value], dtype=float)


def _default_n(kind: str) -> int:
    return 3 if kind == "see_steps" else 1


def _parse_plant(node, kind: str, seed: int) -> PlantConfig:
    path = "plant"
    block = _check_mapping(node, path)
    _check_keys(block, ["actuators", "stiffness", "transmission", "v_max_ml",
                        "extension_gain_mm_per_ml", "axial_compliance_mm_per_n",
                        "damping", "noise", "relaxation"], path)
    n = _get_scalar(block, "actuators", path, _default_n(kind), lo=1, integer=True)
    default_k = COUPLED_STIFFNESS if n == 3 else np.diag(np.full(n, 43.31)).tolist()
    stiffness = _parse_matrix(block.get("stiffness"), n, f"{path}.stiffness")
    if stiffness is None:
        stiffness = np.asarray(default_k, dtype=float)
    default_t = TRANSMISSION
    if kind == "quasistatic_validation":
        default_t = TRANSMISSION * (1.0 + TRANSMISSION_LINEARISATION_ERROR)
    transmission = _parse_per_actuator(block.get("transmission"), n, f"{path}.transmission")
    if transmission is None:
        transmission = np.full(n, default_t)
    default_compliance = 0.5 if kind == "see_steps" else 1.0
    default_damping = DampingLaw.piecewise_default() if kind == "damping_id" else DampingLaw.linear()
    noise_default = kind in ("repeatability", "quasistatic_validation", "static_sensing")
    try:
        return PlantConfig(
            stiffness=stiffness,
            transmission=transmission,
            damping=_parse_damping(block.get("damping"), f"{path}.damping", default_damping),
            v_max=_get_scalar(block, "v_max_ml", path, 3.5),
            extension_gain=_get_scalar(block, "extension_gain_mm_per_ml", path, 10.0),
            axial_compliance=_get_scalar(block, "axial_compliance_mm_per_n", path, default_compliance),
            noise=_parse_noise(block.get("noise"), f"{path}.noise", noise_default),
            relaxation=_parse_relaxation(block.get("relaxation"), f"{path}.relaxation"),
            rng_seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(f"'{path}': {exc}") from exc


def _parse_sensing(node, kind: str, plant: PlantConfig):
    path = "sensing"
    block = _check_mapping(node, path)
    _check_keys(block, ["mode", "stiffness", "transmission", "damping"], path)
    default_mode = "static" if kind == "static_sensing" else "quasi_static"
    mode = _get_choice(block, "mode", path, default_mode, MODES)
    n = plant.count
    stiffness = _parse_matrix(block.get("stiffness"), n, f"{path}.stiffness")
    transmission = _parse_per_actuator(block.get("transmission"), n, f"{path}.transmission")
    if transmission is None and kind == "quasistatic_validation":
        # Sense with the linear-region constant even though the plant's true
        # transmission sits above it; see TRANSMISSION_LINEARISATION_ERROR.
        transmission = np.full(n, TRANSMISSION)
    damping = _parse_damping(block.get("damping"), f"{path}.damping", plant.damping) \
        if block.get("damping") is not None else None
    return mode, stiffness, transmission, damping


def _parse_controller(node, kind: str) -> ControllerConfig | None:
    path = "controller"
    block = _check_mapping(node, path)
    if kind not in CONTROL_KINDS:
        if block:
            raise ConfigError(f"'{path}' is only valid for {CONTROL_KINDS}")
        return None
    _check_keys(block, ["rate_hz", "filter_cutoff_hz", "derivative_cutoff_hz",
                        "flow_saturation_ml_per_s", "anti_windup", "gains"], path)
    gains_block = _check_mapping(block.get("gains"), f"{path}.gains")
    _check_keys(gains_block, ["g_p", "g_i", "g_d"], f"{path}.gains")
    if kind == "sfa_steps":
        defaults = PidGains(g_p=1.97, g_i=0.0, g_d=0.2)
    else:
        defaults = PidGains(g_p=1.97, g_i=0.02, g_d=0.0)
    try:
        gains = PidGains(
            g_p=_get_scalar(gains_block, "g_p", f"{path}.gains", defaults.g_p, lo=0.0),
            g_i=_get_scalar(gains_block, "g_i", f"{path}.gains", defaults.g_i, lo=0.0),
            g_d=_get_scalar(gains_block, "g_d", f"{path}.gains", defaults.g_d, lo=0.0),
        )
        return ControllerConfig(
            gains=gains,
            rate=_get_scalar(block, "rate_hz", path, 250.0),
            filter_cutoff=_get_scalar(block, "filter_cutoff_hz", path, 100.0),
            derivative_cutoff=_get_scalar(block, "derivative_cutoff_hz", path, 5.0),
            flow_saturation=_get_scalar(block, "flow_saturation_ml_per_s", path, 5.0),
            anti_windup=_get_bool(block, "anti_windup", path, True),
        )
    except ValueError as exc:
        raise ConfigError(f"'{path}': {exc}") from exc


def _parse_geometry(node, kind: str, plant: PlantConfig) -> SeeGeometry | None:
    path = "geometry"
    block = _check_mapping(node, path)
    if plant.count == 1 and not block:
        return None
    _check_keys(block, ["actuators", "radius_mm", "tilt_deg", "phase_deg"], path)
    count = _get_scalar(block, "actuators", path, plant.count, lo=1, integer=True)
    if count != plant.count:
        raise ConfigError(f"'{path}.actuators' ({count}) must match plant.actuators ({plant.count})")
    try:
        return default_see_geometry(
            count=count,
            radius=_get_scalar(block, "radius_mm", path, 25.0, lo=0.0),
            tilt_deg=_get_scalar(block, "tilt_deg", path, 15.0),
            phase_deg=_get_scalar(block, "phase_deg", path, 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"'{path}': {exc}") from exc


_DEFAULT_FLOW_RATES = [round(0.25 * k, 2) for k in range(1, 21)]
_DEFAULT_INFLATIONS_FULL = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
_DEFAULT_INFLATIONS_STEPS = [0.5, 0.6, 0.7, 0.8]


def _parse_params(node, kind: str, plant: PlantConfig) -> dict:
    path = "scenario"
    block = _check_mapping(node, path)
    p: dict = {}
    if kind == "transmission_sweep":
        _check_keys(block, ["volumes_ml", "bend_angles_deg", "loads_n",
                            "linear_region_min_ml", "bend_sensitivity_kpa_per_n_per_rad",
                            "settle_samples"], path)
        p["volumes_ml"] = _get_list(block, "volumes_ml", path,
                                    [0.5 * k for k in range(1, 8)], lo=0.0, hi=plant.v_max)
        p["bend_angles_deg"] = _get_list(block, "bend_angles_deg", path,
                                         [10.0 * k for k in range(10)])
        p["loads_n"] = _get_list(block, "loads_n", path, [2.0, 4.0, 6.0], lo=0.0)
        p["linear_region_min_ml"] = _get_scalar(block, "linear_region_min_ml", path, 2.5, lo=0.0)
        p["bend_sensitivity_kpa_per_n_per_rad"] = _get_scalar(
            block, "bend_sensitivity_kpa_per_n_per_rad", path, 0.0)
        p["settle_samples"] = _get_scalar(block, "settle_samples", path, 25, lo=1, integer=True)
    elif kind == "static_sensing":
        _check_keys(block, ["inflations", "loads_n", "baseline_samples", "measure_samples"], path)
        p["inflations"] = _get_list(block, "inflations", path, _DEFAULT_INFLATIONS_FULL,
                                    lo=0.0, hi=1.0)
        p["loads_n"] = _get_list(block, "loads_n", path, [2.0, 4.0, 6.0], lo=0.0)
        p["baseline_samples"] = _get_scalar(block, "baseline_samples", path, 50, lo=10, integer=True)
        p["measure_samples"] = _get_scalar(block, "measure_samples", path, 100, lo=1, integer=True)
    elif kind == "repeatability":
        _check_keys(block, ["repetitions", "levels"], path)
        p["repetitions"] = _get_scalar(block, "repetitions", path, 500, lo=1, integer=True)
        default_levels = (plant.noise.fractions.tolist() if plant.noise is not None
                          else NoiseTable.bench_default().fractions.tolist())
        p["levels"] = _get_list(block, "levels", path, default_levels, lo=0.0, hi=1.0)
    elif kind == "quasistatic_validation":
        _check_keys(block, ["poses", "inflations", "loads_n"], path)
        p["poses"] = _get_scalar(block, "poses", path, 100, lo=1, integer=True)
        p["inflations"] = _get_list(block, "inflations", path, _DEFAULT_INFLATIONS_FULL,
                                    lo=0.0, hi=1.0)
        p["loads_n"] = _get_list(block, "loads_n", path, [0.0, 2.0, 4.0, 6.0], lo=0.0)
    elif kind == "damping_id":
        _check_keys(block, ["flow_rates_ml_per_s", "volume_start_ml", "volume_end_ml"], path)
        p["flow_rates_ml_per_s"] = _get_list(block, "flow_rates_ml_per_s", path,
                                             _DEFAULT_FLOW_RATES, lo=0.0)
        p["volume_start_ml"] = _get_scalar(block, "volume_start_ml", path, 0.5,
                                           lo=0.0, hi=plant.v_max)
        p["volume_end_ml"] = _get_scalar(block, "volume_end_ml", path, 3.0,
                                         lo=0.0, hi=plant.v_max)
        if p["volume_end_ml"] <= p["volume_start_ml"]:
            raise ConfigError("'scenario.volume_end_ml' must exceed 'scenario.volume_start_ml'")
    elif kind == "sfa_steps":
        _check_keys(block, ["inflations", "demands_n", "segment_s", "settle_band_n"], path)
        p["inflations"] = _get_list(block, "inflations", path, _DEFAULT_INFLATIONS_STEPS,
                                    lo=0.0, hi=1.0)
        p["demands_n"] = _get_list(block, "demands_n", path, [0.0, 2.0, 4.0, 6.0])
        p["segment_s"] = _get_scalar(block, "segment_s", path, 8.0, lo=0.1)
        p["settle_band_n"] = _get_scalar(block, "settle_band_n", path, 0.1, lo=0.0)
    elif kind == "see_steps":
        _check_keys(block, ["inflations", "demands_xy_n", "demands_z_n", "axes",
                            "segment_s", "settle_band_n"], path)
        p["inflations"] = _get_list(block, "inflations", path, _DEFAULT_INFLATIONS_STEPS,
                                    lo=0.0, hi=1.0)
        p["demands_xy_n"] = _get_list(block, "demands_xy_n", path, [-5.0, -2.5, 0.0, 2.5, 5.0])
        # Table-style z levels by default; the figure-style preset {0, 5, 10, 15}
        # can be configured explicitly.
        p["demands_z_n"] = _get_list(block, "demands_z_n", path, [0.0, 3.75, 7.5, 11.25, 15.0])
        axes = block.get("axes", ["x", "y", "z"])
        if not isinstance(axes, list) or not axes or any(a not in ("x", "y", "z") for a in axes):
            raise ConfigError("'scenario.axes' must be a non-empty subset of [x, y, z]")
        p["axes"] = list(axes)
        p["segment_s"] = _get_scalar(block, "segment_s", path, 8.0, lo=0.1)
        p["settle_band_n"] = _get_scalar(block, "settle_band_n", path, 0.1, lo=0.0)
    elif kind == "calibration":
        _check_keys(block, ["stiffness_samples", "sampling", "volume_min_ml",
                            "flow_rates_ml_per_s", "volume_start_ml", "volume_end_ml",
                            "volumes_ml", "bend_angles_deg", "loads_n",
                            "linear_region_min_ml", "settle_samples"], path)
        p["stiffness_samples"] = _get_scalar(block, "stiffness_samples", path, 50, lo=3, integer=True)
        p["sampling"] = _get_choice(block, "sampling", path, "latin_hypercube",
                                    ("latin_hypercube", "uniform"))
        p["volume_min_ml"] = _get_scalar(block, "volume_min_ml", path, 0.25, lo=0.0)
        p["flow_rates_ml_per_s"] = _get_list(block, "flow_rates_ml_per_s", path,
                                             _DEFAULT_FLOW_RATES, lo=0.0)
        p["volume_start_ml"] = _get_scalar(block, "volume_start_ml", path, 0.5, lo=0.0, hi=plant.v_max)
        p["volume_end_ml"] = _get_scalar(block, "volume_end_ml", path, 3.0, lo=0.0, hi=plant.v_max)
        p["volumes_ml"] = _get_list(block, "volumes_ml", path, [2.5, 3.0, 3.5],
                                    lo=0.0, hi=plant.v_max)
        p["bend_angles_deg"] = _get_list(block, "bend_angles_deg", path, [0.0])
        p["loads_n"] = _get_list(block, "loads_n", path, [2.0, 4.0, 6.0], lo=0.0)
        p["linear_region_min_ml"] = _get_scalar(block, "linear_region_min_ml", path, 2.5, lo=0.0)
        p["settle_samples"] = _get_scalar(block, "settle_samples", path, 25, lo=1, integer=True)
    else:  # pragma: no cover - guarded by kind validation
        raise ConfigError(f"unhandled kind {kind!r}")
    return p


def _damping_dict(law: DampingLaw) -> dict:
    if law.kind == "linear":
        return {"kind": "linear", "d_v": law.d_v}
    return {
        "kind": "piecewise", "slope_neg": law.slope_neg, "offset_neg": law.offset_neg,
        "plateau": law.plateau, "threshold": law.threshold,
        "slope_pos": law.slope_pos, "offset_pos": law.offset_pos,
    }


def _resolved_tree(scenario: "ExperimentScenario") -> dict:
    plant = scenario.plant
    tree = {
        "schema_version": SCHEMA_VERSION,
        "kind": scenario.kind,
        "seed": scenario.seed,
        "plant": {
            "actuators": plant.count,
            "stiffness": plant.stiffness.tolist(),
            "transmission": plant.transmission.tolist(),
            "v_max_ml": plant.v_max,
            "extension_gain_mm_per_ml": plant.extension_gain,
            "axial_compliance_mm_per_n": plant.axial_compliance,
            "damping": _damping_dict(plant.damping),
            "noise": {
                "enabled": plant.noise is not None,
                **({"table": np.column_stack([
                    plant.noise.fractions, plant.noise.sigma_extension,
                    plant.noise.sigma_pressure]).tolist()} if plant.noise is not None else {}),
            },
            "relaxation": {
                "enabled": plant.relaxation.enabled,
                "amplitude_ratio": plant.relaxation.amplitude_ratio,
                "time_constant_s": plant.relaxation.time_constant_s,
            },
        },
        "sensing": {
            "mode": scenario.sensing_mode,
            "stiffness": None if scenario.sensing_stiffness is None
            else scenario.sensing_stiffness.tolist(),
            "transmission": None if scenario.sensing_transmission is None
            else scenario.sensing_transmission.tolist(),
            "damping": None if scenario.sensing_damping is None
            else _damping_dict(scenario.sensing_damping),
        },
        "scenario": scenario.params,
        "output": {"directory": scenario.output_dir, "format": scenario.output_format},
    }
    if scenario.controller is not None:
        ctrl = scenario.controller
        tree["controller"] = {
            "rate_hz": ctrl.rate,
            "filter_cutoff_hz": ctrl.filter_cutoff,
            "derivative_cutoff_hz": ctrl.derivative_cutoff,
            "flow_saturation_ml_per_s": ctrl.flow_saturation,
            "anti_windup": ctrl.anti_windup,
            "gains": {"g_p": ctrl.gains.g_p, "g_i": ctrl.gains.g_i, "g_d": ctrl.gains.g_d},
        }
    if scenario.geometry is not None:
        tree["geometry"] = {
            "actuators": scenario.geometry.count,
            "directions": scenario.geometry.directions.tolist(),
            "attachment_points_mm": scenario.geometry.attachment_points.tolist(),
        }
    return tree


def resolve_config(data: dict) -> ExperimentScenario:
    """Validate a config mapping, fill defaults, and echo the resolved tree."""
    data = _check_mapping(data, "config")
    _check_keys(data, ["schema_version", "kind", "seed", "plant", "sensing",
                       "controller", "geometry", "scenario", "output"], "config")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"'schema_version' must be {SCHEMA_VERSION}, got {version!r}")
    if "kind" not in data:
        raise ConfigError("'kind' is required")
    kind = _get_choice(data, "kind", "config", None, KINDS)
    seed = _get_scalar(data, "seed", "config", 0, lo=0, integer=True)

    plant = _parse_plant(data.get("plant"), kind, seed)
    mode, s_stiff, s_trans, s_damp = _parse_sensing(data.get("sensing"), kind, plant)
    controller = _parse_controller(data.get("controller"), kind)
    geometry = _parse_geometry(data.get("geometry"), kind, plant)
    if kind == "see_steps" and geometry is None:
        geometry = default_see_geometry(count=plant.count)
    params = _parse_params(data.get("scenario"), kind, plant)

    out_block = _check_mapping(data.get("output"), "output")
    _check_keys(out_block, ["directory", "format"], "output")
    out_dir = out_block.get("directory", "out")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("'output.directory' must be a non-empty string")
    out_format = _get_choice(out_block, "format", "output", "csv", ("csv", "json"))

    scenario = ExperimentScenario(
        kind=kind,
        seed=seed,
        plant=plant,
        sensing_mode=mode,
        sensing_stiffness=s_stiff,
        sensing_transmission=s_trans,
        sensing_damping=s_damp,
        controller=controller,
        geometry=geometry,
        params=params,
        output_dir=out_dir,
        output_format=out_format,
    )
    resolved = _resolved_tree(scenario)
    object.__setattr__(scenario, "resolved", resolved)
    log.info("resolved %s config:\n%s", kind, yaml.safe_dump(resolved, sort_keys=True))
    return scenario


def load_config(path) -> ExperimentScenario:
    """Load and validate a scenario config file (YAML, schema_version 1)."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"failed to parse {path}{where}: {getattr(exc, 'problem', exc)}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if data is None:
        raise ConfigError(f"{path} is empty")
    return resolve_config(data)
