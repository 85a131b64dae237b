"""Intrinsic force estimators: static, quasi-static and dynamic.

All three infer the external axial force per actuator from actuation-side
signals only (fluid pressure, injected volume, flow rate), then map to
Cartesian space through the wrench transform. Estimators are pure functions
over a measurement and an immutable calibrated model; the only state is the
baseline pressure captured for static mode. Negative estimates pass through
unclamped, since pull loads are physical for a fastened tip.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import as_matrix, as_vector
from .kinematics import actuator_to_cartesian
from .plant import DampingLaw, PlantConfig, damping_pressure

__all__ = [
    "SensingModel",
    "ForceEstimate",
    "capture_baseline",
    "estimate_static",
    "estimate_quasistatic",
    "estimate_dynamic",
    "to_cartesian",
]

MODES = ("static", "quasi_static", "dynamic")

MIN_BASELINE_SAMPLES = 10
#: Per-actuator sample spread (kPa) above which a baseline capture is rejected
#: as an unsettled system.
MAX_BASELINE_SPREAD_KPA = 5.0


@dataclass(frozen=True)
class SensingModel:
    """Calibrated quantities the estimators rely on.

    stiffness: (n, n) kPa/ml; transmission: (n,) kPa/N, strictly positive;
    damping: law used by the dynamic mode; baseline_pressure: (n,) kPa,
    required by static mode only and ignored by the others.
    """

    stiffness: np.ndarray
    transmission: np.ndarray
    damping: DampingLaw
    mode: str = "quasi_static"
    baseline_pressure: np.ndarray | None = None

    def __post_init__(self):
        k = as_matrix(self.stiffness, name="stiffness")
        t = as_vector(self.transmission, n=k.shape[0], name="transmission")
        if np.any(t <= 0.0):
            raise ValueError("transmission entries must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        baseline = self.baseline_pressure
        if baseline is not None:
            baseline = as_vector(baseline, n=k.shape[0], name="baseline_pressure")
        object.__setattr__(self, "stiffness", k)
        object.__setattr__(self, "transmission", t)
        object.__setattr__(self, "baseline_pressure", baseline)

    @property
    def count(self) -> int:
        return self.stiffness.shape[0]

    @classmethod
    def matched(cls, plant_config: PlantConfig, mode: str = "quasi_static") -> "SensingModel":
        """Model whose parameters equal the plant ground truth (oracle runs)."""
        return cls(
            stiffness=plant_config.stiffness.copy(),
            transmission=plant_config.transmission.copy(),
            damping=plant_config.damping,
            mode=mode,
        )

    def with_baseline(self, baseline) -> "SensingModel":
        return replace(self, baseline_pressure=as_vector(baseline, n=self.count))


@dataclass(frozen=True)
class ForceEstimate:
    """Actuator-space and Cartesian force estimate at one instant."""

    f_act: np.ndarray
    f_cart: np.ndarray
    timestamp: float = 0.0


def capture_baseline(pressure_samples) -> np.ndarray:
    """Mean rest pressure per actuator from samples taken at zero flow.

    Requires at least 10 samples; a per-actuator spread above 5 kPa signals
    an unsettled system and is rejected.
    """
    samples = np.atleast_2d(np.asarray(pressure_samples, dtype=float))
    if samples.shape[0] < MIN_BASELINE_SAMPLES:
        raise ValueError(
            f"baseline capture needs >= {MIN_BASELINE_SAMPLES} samples, got {samples.shape[0]}"
        )
    spread = samples.std(axis=0, ddof=1)
    if np.any(spread > MAX_BASELINE_SPREAD_KPA):
        raise ValueError(
            f"baseline sample spread {spread} kPa exceeds {MAX_BASELINE_SPREAD_KPA} kPa; "
            "system not settled"
        )
    return samples.mean(axis=0)


def estimate_static(pressure, model: SensingModel) -> np.ndarray:
    """Force from the pressure rise over a captured rest baseline.

    Valid while the inflation is unchanged since the baseline capture;
    volume-induced pressure is not compensated.
    """
    if model.mode != "static":
        raise ValueError(f"model mode is {model.mode!r}, expected 'static'")
    if model.baseline_pressure is None:
        raise ValueError("static estimation requires a captured baseline pressure")
    p = as_vector(pressure, n=model.count, name="pressure")
    return (p - model.baseline_pressure) / model.transmission


def estimate_quasistatic(pressure, volume, model: SensingModel) -> np.ndarray:
    """Force with the volume-induced internal pressure compensated."""
    if model.mode == "static":
        raise ValueError("model is configured for static mode")
    p = as_vector(pressure, n=model.count, name="pressure")
    v = as_vector(volume, n=model.count, name="volume")
    return (p - model.stiffness @ v) / model.transmission


def estimate_dynamic(pressure, volume, flow, model: SensingModel) -> np.ndarray:
    """Force with volume and flow-induced pressure both compensated.

    Reduces exactly to the quasi-static estimate at zero flow under a linear
    damping law.
    """
    if model.mode != "dynamic":
        raise ValueError(f"model mode is {model.mode!r}, expected 'dynamic'")
    p = as_vector(pressure, n=model.count, name="pressure")
    v = as_vector(volume, n=model.count, name="volume")
    vdot = as_vector(flow, n=model.count, name="flow")
    internal = model.stiffness @ v + damping_pressure(vdot, model.damping)
    return (p - internal) / model.transmission


def to_cartesian(f_act, h, timestamp: float = 0.0) -> ForceEstimate:
    """Wrap an actuator-space estimate with its Cartesian image under H."""
    f_act = np.atleast_1d(np.asarray(f_act, dtype=float))
    return ForceEstimate(f_act=f_act, f_cart=actuator_to_cartesian(h, f_act), timestamp=timestamp)
