"""Ground-truth lumped-parameter simulator for one actuator or a coupled assembly.

Fixed-timestep explicit update of fluid volume, pressure, extension and
external load. The retained physics are all first order and slow relative to
the 4 ms control tick, so explicit Euler at the control timestep is adequate.
Hysteresis is not modelled; its measured effect is folded into the
state-dependent noise table.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ActuatorState, as_matrix, as_vector, check_stiffness

__all__ = [
    "DampingLaw",
    "NoiseTable",
    "RelaxationConfig",
    "ContactModel",
    "PlantConfig",
    "PlantState",
    "Plant",
    "damping_pressure",
    "plant_step",
    "measure",
    "steady_state",
]

MAX_STEP_S = 0.01  # explicit update stability bound


@dataclass(frozen=True)
class DampingLaw:
    """Pressure offset associated with fluid flow through the lines.

    kind "linear": pressure = d_v * flow.
    kind "piecewise": three branches of flow (ml/s) -> pressure (kPa),
        flow <= 0:            slope_neg * flow + offset_neg
        0 < flow <= threshold: plateau
        flow > threshold:      slope_pos * flow + offset_pos
    Discontinuities at 0 and at the threshold are permitted; evaluation is
    finite for all finite flows.
    """

    kind: str = "linear"
    d_v: float = 4.46
    slope_neg: float = 3.00
    offset_neg: float = -16.82
    plateau: float = 13.1
    threshold: float = 0.1
    slope_pos: float = 1.66
    offset_pos: float = 13.10

    def __post_init__(self):
        if self.kind not in ("linear", "piecewise"):
            raise ValueError(f"unknown damping law kind {self.kind!r}")

    @classmethod
    def linear(cls, d_v: float = 4.46) -> "DampingLaw":
        return cls(kind="linear", d_v=d_v)

    @classmethod
    def piecewise_default(cls) -> "DampingLaw":
        return cls(kind="piecewise")


def damping_pressure(flow, law: DampingLaw):
    """Evaluate the damping pressure (kPa) for a flow rate or array of rates."""
    v = np.asarray(flow, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("flow must be finite")
    if law.kind == "linear":
        return law.d_v * v
    return np.where(
        v <= 0.0,
        law.slope_neg * v + law.offset_neg,
        np.where(v <= law.threshold, law.plateau, law.slope_pos * v + law.offset_pos),
    )


@dataclass(frozen=True)
class NoiseTable:
    """Measurement noise magnitudes versus fill fraction.

    Linear interpolation between rows, clamped at the ends. Fractions must be
    strictly increasing within [0, 1]. sigma_extension in mm, sigma_pressure
    in kPa.
    """

    fractions: np.ndarray
    sigma_extension: np.ndarray
    sigma_pressure: np.ndarray

    def __post_init__(self):
        frac = as_vector(self.fractions, name="fractions")
        sx = as_vector(self.sigma_extension, n=frac.size, name="sigma_extension")
        sp = as_vector(self.sigma_pressure, n=frac.size, name="sigma_pressure")
        if np.any(frac < 0.0) or np.any(frac > 1.0) or np.any(np.diff(frac) <= 0.0):
            raise ValueError("noise table fractions must be strictly increasing within [0, 1]")
        if np.any(sx < 0.0) or np.any(sp < 0.0):
            raise ValueError("noise magnitudes must be non-negative")
        object.__setattr__(self, "fractions", frac)
        object.__setattr__(self, "sigma_extension", sx)
        object.__setattr__(self, "sigma_pressure", sp)

    @classmethod
    def bench_default(cls) -> "NoiseTable":
        """Repeatability spread of the characterised actuator, per fill level."""
        return cls(
            fractions=[0.0, 0.1429, 0.2857, 0.4290, 0.5714, 0.7143, 0.8571, 1.0],
            sigma_extension=[0.15, 0.22, 0.25, 0.29, 0.24, 0.19, 0.14, 0.12],
            sigma_pressure=[3.12, 3.81, 4.02, 4.01, 3.30, 2.49, 2.01, 0.88],
        )

    def at(self, fraction) -> tuple[np.ndarray, np.ndarray]:
        f = np.asarray(fraction, dtype=float)
        return (
            np.interp(f, self.fractions, self.sigma_extension),
            np.interp(f, self.fractions, self.sigma_pressure),
        )


@dataclass(frozen=True)
class RelaxationConfig:
    """First-order stress-relaxation lag toward a fraction of elastic pressure.

    Disabled by default. With relaxation on, the relaxed pressure state R per
    actuator follows dR/dt = (amplitude_ratio * K V - R) / time_constant and
    is subtracted from the elastic pressure, reproducing the slow upward drift
    of a force controller holding a clamped contact.
    """

    enabled: bool = False
    amplitude_ratio: float = 0.05
    time_constant_s: float = 30.0

    def __post_init__(self):
        if not 0.0 <= self.amplitude_ratio < 1.0:
            raise ValueError("amplitude_ratio must lie in [0, 1)")
        if self.time_constant_s <= 0.0:
            raise ValueError("time_constant_s must be positive")


@dataclass(frozen=True)
class ContactModel:
    """Tip boundary condition.

    free: no external force. deadweight: constant axial load (N) per actuator.
    clamped: tip rigidly attached at extension x_c (mm) per actuator; the
    external force emerges from the constraint x = x_c and may be negative
    (pull) since the tip is fastened, not merely resting against a stop.
    """

    kind: str
    x_c: np.ndarray | None = None
    load: np.ndarray | None = None

    @classmethod
    def free(cls) -> "ContactModel":
        return cls(kind="free")

    @classmethod
    def clamped(cls, x_c) -> "ContactModel":
        return cls(kind="clamped", x_c=as_vector(x_c, name="x_c"))

    @classmethod
    def deadweight(cls, load) -> "ContactModel":
        return cls(kind="deadweight", load=as_vector(load, name="load"))

    def external_force(self, volume: np.ndarray, config: "PlantConfig") -> np.ndarray:
        if self.kind == "free":
            return np.zeros_like(volume)
        if self.kind == "deadweight":
            return as_vector(self.load, n=volume.size, name="load")
        if self.kind == "clamped":
            x_c = as_vector(self.x_c, n=volume.size, name="x_c")
            if config.axial_compliance <= 0.0:
                raise ValueError("clamped contact requires a positive axial compliance")
            return (config.extension_gain * volume - x_c) / config.axial_compliance
        raise ValueError(f"unknown contact kind {self.kind!r}")


@dataclass(frozen=True)
class PlantConfig:
    """Ground-truth parameters of the simulated actuator assembly.

    stiffness: (n, n) kPa/ml; transmission: (n,) kPa/N; v_max in ml per
    actuator; extension_gain in mm/ml; axial_compliance in mm/N (extension
    lost per newton of axial load).
    """

    stiffness: np.ndarray
    transmission: np.ndarray
    damping: DampingLaw = DampingLaw.linear()
    v_max: float = 3.5
    extension_gain: float = 10.0
    axial_compliance: float = 1.0
    noise: NoiseTable | None = None
    relaxation: RelaxationConfig = field(default_factory=RelaxationConfig)
    rng_seed: int = 0

    def __post_init__(self):
        k = check_stiffness(self.stiffness)
        t = as_vector(self.transmission, n=k.shape[0], name="transmission")
        if np.any(t <= 0.0):
            raise ValueError("transmission entries must be positive")
        if self.v_max <= 0.0:
            raise ValueError("v_max must be positive")
        if self.extension_gain <= 0.0:
            raise ValueError("extension_gain must be positive")
        if self.axial_compliance < 0.0:
            raise ValueError("axial_compliance must be non-negative")
        object.__setattr__(self, "stiffness", k)
        object.__setattr__(self, "transmission", t)

    @property
    def count(self) -> int:
        return self.stiffness.shape[0]

    @classmethod
    def single_default(cls, **overrides) -> "PlantConfig":
        kwargs = {"stiffness": [[43.31]], "transmission": [48.5]}
        kwargs.update(overrides)
        return cls(**kwargs)

    @classmethod
    def coupled_default(cls, **overrides) -> "PlantConfig":
        kwargs = {
            "stiffness": [[43.31, 1.94, 1.48], [0.94, 48.64, 1.39], [0.36, 1.18, 44.18]],
            "transmission": [48.5, 48.5, 48.5],
        }
        kwargs.update(overrides)
        return cls(**kwargs)


@dataclass(frozen=True)
class PlantState:
    """Simulator state: per-actuator fluid state plus slow internal state.

    volume/flow/pressure/extension as in ActuatorState (vectorised),
    relaxed_pressure R in kPa, external_force in N, clock in s.
    """

    volume: np.ndarray
    flow: np.ndarray
    pressure: np.ndarray
    extension: np.ndarray
    relaxed_pressure: np.ndarray
    external_force: np.ndarray
    clock: float = 0.0

    def actuator(self, i: int) -> ActuatorState:
        return ActuatorState(
            volume=float(self.volume[i]),
            flow=float(self.flow[i]),
            pressure=float(self.pressure[i]),
            extension=float(self.extension[i]),
        )


def _resolve(config: PlantConfig, volume, flow, relaxed, contact: ContactModel, clock: float) -> PlantState:
    f_ext = contact.external_force(volume, config)
    extension = config.extension_gain * volume - config.axial_compliance * f_ext
    # The damping term is a pressure drop across moving fluid; at rest the
    # transducer sees the actuator directly, so the contribution vanishes even
    # though the discontinuous law's branches do not pass through zero.
    line_drop = np.where(flow == 0.0, 0.0, damping_pressure(flow, config.damping))
    pressure = (
        config.stiffness @ volume
        - relaxed
        + line_drop
        + config.transmission * f_ext
    )
    return PlantState(
        volume=volume,
        flow=flow,
        pressure=pressure,
        extension=extension,
        relaxed_pressure=relaxed,
        external_force=f_ext,
        clock=clock,
    )


def steady_state(config: PlantConfig, volume, contact: ContactModel | None = None,
                 clock: float = 0.0) -> PlantState:
    """State with zero flow and no accumulated relaxation at the given volume."""
    contact = contact or ContactModel.free()
    v = as_vector(volume, n=config.count, name="volume")
    if np.any(v < 0.0) or np.any(v > config.v_max):
        raise ValueError(f"volume must lie within [0, {config.v_max}] ml")
    zero = np.zeros(config.count)
    return _resolve(config, v, zero.copy(), zero.copy(), contact, clock)


def plant_step(state: PlantState, commanded_flow, dt: float, config: PlantConfig,
               contact: ContactModel) -> PlantState:
    """Advance the plant one step under a commanded flow (ml/s per actuator).

    Volume integrates the command and clamps to [0, v_max]; the realised flow
    (after clamping) is what enters the damping term. The external force is
    resolved from the contact model, relaxation follows its first-order lag,
    and pressure combines elastic, relaxation, damping and load terms.
    """
    if not 0.0 < dt <= MAX_STEP_S:
        raise ValueError(f"dt must lie in (0, {MAX_STEP_S}] s, got {dt}")
    flow = as_vector(commanded_flow, n=config.count, name="commanded_flow")
    v_new = np.clip(state.volume + flow * dt, 0.0, config.v_max)
    realised_flow = (v_new - state.volume) / dt
    relax = config.relaxation
    if relax.enabled:
        target = relax.amplitude_ratio * (config.stiffness @ v_new)
        r_new = state.relaxed_pressure + dt * (target - state.relaxed_pressure) / relax.time_constant_s
    else:
        r_new = state.relaxed_pressure
    return _resolve(config, v_new, realised_flow, r_new, contact, state.clock + dt)


def measure(state: PlantState, config: PlantConfig,
            rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Measured (pressure kPa, extension mm) with fill-dependent Gaussian noise.

    With no noise table the true values are returned exactly. Noise draws are
    deterministic for a given generator state and call sequence; pressure is
    drawn before extension.
    """
    if config.noise is None or rng is None:
        return state.pressure.copy(), state.extension.copy()
    sigma_x, sigma_p = config.noise.at(state.volume / config.v_max)
    pressure = state.pressure + rng.standard_normal(config.count) * sigma_p
    extension = state.extension + rng.standard_normal(config.count) * sigma_x
    return pressure, extension


class Plant:
    """Single-owner mutable wrapper around the pure step/measure functions.

    Not thread safe; run independent instances for parallel scenarios.
    """

    def __init__(self, config: PlantConfig, initial_volume=None,
                 contact: ContactModel | None = None, seed=None):
        self.config = config
        self.contact = contact or ContactModel.free()
        v0 = np.zeros(config.count) if initial_volume is None else initial_volume
        self.state = steady_state(config, v0, self.contact)
        # seed accepts anything numpy's default_rng takes (int, sequence, None)
        self._rng = np.random.default_rng(config.rng_seed if seed is None else seed)

    @property
    def count(self) -> int:
        return self.config.count

    def reset_to(self, volume, contact: ContactModel | None = None) -> PlantState:
        """Jump to a settled state at the given volume (pump moved, transients died)."""
        if contact is not None:
            self.contact = contact
        self.state = steady_state(self.config, volume, self.contact, clock=self.state.clock)
        return self.state

    def step(self, commanded_flow, dt: float) -> PlantState:
        self.state = plant_step(self.state, commanded_flow, dt, self.config, self.contact)
        return self.state

    def measure(self) -> tuple[np.ndarray, np.ndarray]:
        return measure(self.state, self.config, self._rng)

    def with_contact(self, contact: ContactModel) -> "Plant":
        """Switch the boundary condition and re-resolve forces at the current volume."""
        self.contact = contact
        self.state = _resolve(self.config, self.state.volume, self.state.flow,
                              self.state.relaxed_pressure, contact, self.state.clock)
        return self
