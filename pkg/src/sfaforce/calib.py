"""Identification of the sensing model from recorded experiment batches.

Stiffness comes from linear least squares over unloaded (volume, pressure)
samples, the damping law from constant-flow trajectories with the first half
of each trajectory discarded, and the force transmission from loaded
pressure-rise samples averaged over the linear inflation region. Calibration
operates on offline record batches; there is no streaming path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import yaml

from .core import as_matrix, as_vector, check_stiffness, solve_least_squares
from .plant import DampingLaw, damping_pressure

__all__ = [
    "CalibrationError",
    "StiffnessSample",
    "DampingTrajectory",
    "TransmissionSample",
    "DampingFit",
    "TransmissionMap",
    "TransmissionCalibration",
    "calibrate_stiffness",
    "calibrate_damping",
    "calibrate_transmission",
    "save_artifact",
    "load_artifact",
]

ARTIFACT_SCHEMA_VERSION = 1

#: Stacked-volume condition number above which the sample spread is degenerate.
MAX_SAMPLE_CONDITION = 1e6
MIN_BRANCH_SAMPLES = 10
#: Tolerated deviation of realised flow from the nominal trajectory rate.
FLOW_TOLERANCE = 0.05


class CalibrationError(ValueError):
    """Calibration input is degenerate or insufficient."""


@dataclass(frozen=True)
class StiffnessSample:
    """Unloaded, settled (volume, pressure) pair; recorded with zero external force."""

    volume: np.ndarray
    pressure: np.ndarray

    def __post_init__(self):
        v = as_vector(self.volume, name="volume")
        p = as_vector(self.pressure, n=v.size, name="pressure")
        object.__setattr__(self, "volume", v)
        object.__setattr__(self, "pressure", p)


@dataclass(frozen=True)
class DampingTrajectory:
    """Time series recorded while inflating or deflating at a constant rate.

    flow is the nominal commanded rate (ml/s, signed); the realised rate must
    stay within 5% of it throughout the retained half of the trajectory.
    """

    flow: float
    time: np.ndarray
    volume: np.ndarray
    pressure: np.ndarray
    direction: str = ""

    def __post_init__(self):
        t = as_vector(self.time, name="time")
        v = as_vector(self.volume, n=t.size, name="volume")
        p = as_vector(self.pressure, n=t.size, name="pressure")
        direction = self.direction or ("deflate" if self.flow < 0.0 else "inflate")
        if direction not in ("inflate", "deflate"):
            raise ValueError(f"direction must be inflate or deflate, got {direction!r}")
        object.__setattr__(self, "time", t)
        object.__setattr__(self, "volume", v)
        object.__setattr__(self, "pressure", p)
        object.__setattr__(self, "direction", direction)

    def retained(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Second half of the trajectory; the start is polluted by pump acceleration."""
        k = self.time.size // 2
        return self.time[k:], self.volume[k:], self.pressure[k:]


@dataclass(frozen=True)
class TransmissionSample:
    """Pressure rise under a known axial tip load at one (volume, bend) point."""

    volume: float
    bend_angle: float
    force: float
    pressure_rise: float

    def __post_init__(self):
        if self.force <= 0.0:
            raise ValueError("transmission samples require a positive applied force")


@dataclass(frozen=True)
class DampingFit:
    """Both damping descriptions recovered from one batch; the caller selects.

    piecewise: three-branch law (regression per outer branch, plateau mean).
    linear: single through-origin coefficient over all retained samples.
    """

    piecewise: DampingLaw
    linear: DampingLaw
    samples_negative: int
    samples_plateau: int
    samples_positive: int
    residual_rms: float


def calibrate_stiffness(samples: list[StiffnessSample]) -> np.ndarray:
    """Least-squares stiffness matrix (kPa/ml) from unloaded samples.

    Needs at least 3n samples whose volume vectors span actuator space; each
    output row is solved independently against the stacked volumes.
    """
    if not samples:
        raise CalibrationError("no stiffness samples")
    n = samples[0].volume.size
    if len(samples) < 3 * n:
        raise CalibrationError(f"need at least {3 * n} samples for {n} actuators, got {len(samples)}")
    volumes = np.vstack([s.volume for s in samples])
    pressures = np.vstack([s.pressure for s in samples])
    if volumes.shape[1] != n or pressures.shape[1] != n:
        raise CalibrationError("inconsistent sample dimensions")
    cond = np.linalg.cond(volumes)
    if not np.isfinite(cond) or cond > MAX_SAMPLE_CONDITION:
        raise CalibrationError(
            f"volume samples are degenerate (condition number {cond:.3e} > {MAX_SAMPLE_CONDITION:.0e})"
        )
    rows = [solve_least_squares(volumes, pressures[:, i]) for i in range(n)]
    return check_stiffness(np.vstack(rows))


def _fit_branch(flows: np.ndarray, residuals: np.ndarray, name: str) -> tuple[float, float]:
    if flows.size < MIN_BRANCH_SAMPLES:
        raise CalibrationError(
            f"{name} flow branch has {flows.size} samples, need >= {MIN_BRANCH_SAMPLES}"
        )
    if np.unique(flows).size < 2:
        raise CalibrationError(f"{name} flow branch needs at least two distinct rates")
    slope, offset = np.polyfit(flows, residuals, 1)
    return float(slope), float(offset)


def calibrate_damping(trajectories: list[DampingTrajectory], stiffness,
                      threshold: float = 0.1) -> DampingFit:
    """Recover the damping law from constant-flow trajectories.

    The first half of every trajectory is discarded, the elastic pressure
    (stiffness * volume) is subtracted, and the residuals are fitted per flow
    branch with the branch boundary fixed at ``threshold`` (joint breakpoint
    estimation is deliberately out of scope). When no retained sample falls in
    the low positive-flow band, the plateau is reported as the fitted
    positive-branch offset, which the characterised hardware shows to coincide
    with it.
    """
    k = as_matrix(stiffness, name="stiffness")
    if k.shape != (1, 1):
        raise CalibrationError("damping identification operates on single-actuator data")
    k_scalar = float(k[0, 0])
    directions = {t.direction for t in trajectories}
    if directions != {"inflate", "deflate"}:
        raise CalibrationError("trajectories must cover both flow signs (inflate and deflate)")
    flows, residuals = [], []
    for traj in trajectories:
        t, v, p = traj.retained()
        if t.size < 2:
            raise CalibrationError("trajectory too short to retain samples")
        dt = np.diff(t)
        realised = np.diff(v) / dt
        if np.any(np.abs(realised - traj.flow) > FLOW_TOLERANCE * abs(traj.flow)):
            raise CalibrationError(
                f"realised flow deviates more than {FLOW_TOLERANCE:.0%} from nominal "
                f"{traj.flow} ml/s in retained segment"
            )
        flows.append(np.full(t.size, traj.flow))
        residuals.append(p - k_scalar * v)
    flow = np.concatenate(flows)
    resid = np.concatenate(residuals)

    neg = flow <= 0.0
    mid = (flow > 0.0) & (flow <= threshold)
    pos = flow > threshold
    slope_neg, offset_neg = _fit_branch(flow[neg], resid[neg], "negative")
    slope_pos, offset_pos = _fit_branch(flow[pos], resid[pos], "positive")
    if np.count_nonzero(mid) >= MIN_BRANCH_SAMPLES:
        plateau = float(resid[mid].mean())
    else:
        plateau = offset_pos
    piecewise = DampingLaw(
        kind="piecewise",
        slope_neg=slope_neg,
        offset_neg=offset_neg,
        plateau=plateau,
        threshold=threshold,
        slope_pos=slope_pos,
        offset_pos=offset_pos,
    )
    d_v = float(np.sum(flow * resid) / np.sum(flow * flow))
    fitted = damping_pressure(flow, piecewise)
    rms = float(np.sqrt(np.mean((resid - fitted) ** 2)))
    return DampingFit(
        piecewise=piecewise,
        linear=DampingLaw.linear(d_v),
        samples_negative=int(np.count_nonzero(neg)),
        samples_plateau=int(np.count_nonzero(mid)),
        samples_positive=int(np.count_nonzero(pos)),
        residual_rms=rms,
    )


@dataclass(frozen=True)
class TransmissionMap:
    """Pressure-rise-per-force ratios over a (volume, bend angle) grid.

    Queries bilinearly interpolate between grid nodes and clamp at the edges.
    """

    volumes: np.ndarray
    angles: np.ndarray
    ratio: np.ndarray

    def __post_init__(self):
        v = as_vector(self.volumes, name="volumes")
        a = as_vector(self.angles, name="angles")
        r = as_matrix(self.ratio, shape=(v.size, a.size), name="ratio")
        if np.any(np.diff(v) <= 0.0) or (a.size > 1 and np.any(np.diff(a) <= 0.0)):
            raise ValueError("grid axes must be strictly increasing")
        object.__setattr__(self, "volumes", v)
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "ratio", r)

    def ratio_at(self, volume: float, angle: float) -> float:
        v = float(np.clip(volume, self.volumes[0], self.volumes[-1]))
        if self.angles.size == 1:
            column = self.ratio[:, 0]
            return float(np.interp(v, self.volumes, column))
        a = float(np.clip(angle, self.angles[0], self.angles[-1]))
        iv = min(int(np.searchsorted(self.volumes, v, side="right") - 1), self.volumes.size - 2)
        ia = min(int(np.searchsorted(self.angles, a, side="right") - 1), self.angles.size - 2)
        tv = (v - self.volumes[iv]) / (self.volumes[iv + 1] - self.volumes[iv])
        ta = (a - self.angles[ia]) / (self.angles[ia + 1] - self.angles[ia])
        r = self.ratio
        return float(
            (1 - tv) * (1 - ta) * r[iv, ia]
            + tv * (1 - ta) * r[iv + 1, ia]
            + (1 - tv) * ta * r[iv, ia + 1]
            + tv * ta * r[iv + 1, ia + 1]
        )


@dataclass(frozen=True)
class TransmissionCalibration:
    """Grid map plus the linearised scalar used by the estimators."""

    map: TransmissionMap
    t_linear: float
    t_sigma: float
    linear_samples: int


def calibrate_transmission(samples: list[TransmissionSample],
                           v_lin: float = 2.5) -> TransmissionCalibration:
    """Transmission map over the sweep grid and its linear-region average.

    The scalar transmission is the mean pressure-rise/force ratio over all
    samples at volumes >= ``v_lin``, where the ratio is close to constant;
    the reported sigma is the sample spread in that region.
    """
    if not samples:
        raise CalibrationError("no transmission samples")
    volumes = np.array(sorted({s.volume for s in samples}))
    angles = np.array(sorted({s.bend_angle for s in samples}))
    ratio = np.full((volumes.size, angles.size), np.nan)
    counts = np.zeros_like(ratio)
    for s in samples:
        iv = int(np.searchsorted(volumes, s.volume))
        ia = int(np.searchsorted(angles, s.bend_angle))
        value = s.pressure_rise / s.force
        if np.isnan(ratio[iv, ia]):
            ratio[iv, ia] = 0.0
        ratio[iv, ia] += value
        counts[iv, ia] += 1
    if np.any(counts == 0):
        raise CalibrationError("transmission sweep grid has empty cells")
    ratio /= counts

    linear = np.array([s.pressure_rise / s.force for s in samples if s.volume >= v_lin])
    linear_volumes = {s.volume for s in samples if s.volume >= v_lin}
    if linear.size == 0:
        raise CalibrationError(f"no samples at volumes >= {v_lin} ml (empty linearisation region)")
    if len(linear_volumes) < 3:
        raise CalibrationError(
            f"need samples at >= 3 volumes above {v_lin} ml, got {len(linear_volumes)}"
        )
    t_linear = float(linear.mean())
    t_sigma = float(linear.std(ddof=1)) if linear.size > 1 else 0.0
    return TransmissionCalibration(
        map=TransmissionMap(volumes=volumes, angles=angles, ratio=ratio),
        t_linear=t_linear,
        t_sigma=t_sigma,
        linear_samples=int(linear.size),
    )


def _damping_to_dict(law: DampingLaw) -> dict:
    if law.kind == "linear":
        return {"kind": "linear", "d_v": float(law.d_v)}
    return {
        "kind": "piecewise",
        "slope_neg": float(law.slope_neg),
        "offset_neg": float(law.offset_neg),
        "plateau": float(law.plateau),
        "threshold": float(law.threshold),
        "slope_pos": float(law.slope_pos),
        "offset_pos": float(law.offset_pos),
    }


def damping_from_dict(data: dict) -> DampingLaw:
    kind = data.get("kind", "linear")
    allowed = {"kind", "d_v", "slope_neg", "offset_neg", "plateau", "threshold",
               "slope_pos", "offset_pos"}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown damping keys {sorted(unknown)}")
    return DampingLaw(**{**{"kind": kind}, **{k: float(v) for k, v in data.items() if k != "kind"}})


def save_artifact(path, stiffness, transmission, damping: DampingFit | DampingLaw,
                  provenance: dict | None = None) -> None:
    """Write a calibration artifact (YAML, schema_version 1)."""
    stiffness = as_matrix(stiffness, name="stiffness")
    transmission = as_vector(transmission, name="transmission")
    if isinstance(damping, DampingFit):
        damping_block = {
            "piecewise": _damping_to_dict(damping.piecewise),
            "linear": _damping_to_dict(damping.linear),
        }
    else:
        damping_block = {"selected": _damping_to_dict(damping)}
    payload = {
        "schema_version": ARTIFACT_SCHEMA_VERSION,
        "kind": "calibration",
        "stiffness_kpa_per_ml": [[float(x) for x in row] for row in stiffness],
        "transmission_kpa_per_n": [float(x) for x in transmission],
        "damping": damping_block,
        "provenance": provenance or {},
    }
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(payload, handle, sort_keys=True)


def load_artifact(path) -> dict:
    """Read a calibration artifact back; validates the schema version."""
    with open(path, "r", encoding="utf-8") as handle:
        payload = yaml.safe_load(handle)
    if not isinstance(payload, dict):
        raise CalibrationError(f"artifact {path} is not a mapping")
    version = payload.get("schema_version")
    if version != ARTIFACT_SCHEMA_VERSION:
        raise CalibrationError(
            f"artifact schema_version {version!r} unsupported (expected {ARTIFACT_SCHEMA_VERSION})"
        )
    payload["stiffness_kpa_per_ml"] = as_matrix(payload["stiffness_kpa_per_ml"])
    payload["transmission_kpa_per_n"] = as_vector(payload["transmission_kpa_per_n"])
    return payload
