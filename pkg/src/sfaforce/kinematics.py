"""Geometric maps: constant-curvature actuator poses and the actuator/Cartesian wrench transform."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import as_matrix, as_vector, invert_transform

__all__ = [
    "SeeGeometry",
    "TipPose",
    "UncontrollableGeometryError",
    "default_see_geometry",
    "build_wrench_transform",
    "constant_curvature_pose",
    "actuator_to_cartesian",
    "cartesian_to_actuator",
]

# Below this bend angle the closed-form arc expressions are replaced by their
# series expansion to stay continuous through the straight configuration.
_SERIES_ANGLE = 1e-6


class UncontrollableGeometryError(ValueError):
    """Actuator directions do not span Cartesian force space (rank < 3)."""


@dataclass(frozen=True)
class SeeGeometry:
    """Geometry of a parallel actuator assembly.

    directions: (n, 3) unit vectors, one per actuator, pointing along each
        actuator's extension axis expressed in the tip frame.
    attachment_points: (n, 3) positions in mm where the actuators meet the tip
        plate. Reserved for moment transforms; unused in force-only mode.
    """

    directions: np.ndarray
    attachment_points: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        directions = as_matrix(self.directions, name="directions")
        if directions.shape[1] != 3:
            raise ValueError(f"directions must be (n, 3), got {directions.shape}")
        norms = np.linalg.norm(directions, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError(f"actuator directions must be unit vectors, norms {norms}")
        if self.attachment_points is None:
            points = np.zeros_like(directions)
        else:
            points = as_matrix(self.attachment_points, shape=directions.shape, name="attachment_points")
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "attachment_points", points)

    @property
    def count(self) -> int:
        return self.directions.shape[0]


@dataclass(frozen=True)
class TipPose:
    """Tip position (mm) and unit tangent of a bent actuator centerline."""

    position: np.ndarray
    tangent: np.ndarray


def default_see_geometry(count: int = 3, radius: float = 25.0, tilt_deg: float = 15.0,
                         phase_deg: float = 0.0) -> SeeGeometry:
    """Evenly spaced actuators on a circle, each tilted radially outward.

    The physical end-effector's tilt angle, circle radius and rest length are
    not fixed by this package; these values are a plausible rank-3 default and
    every harness config may override them.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    tilt = np.deg2rad(tilt_deg)
    azimuths = np.deg2rad(phase_deg) + 2.0 * np.pi * np.arange(count) / count
    directions = np.column_stack([
        np.sin(tilt) * np.cos(azimuths),
        np.sin(tilt) * np.sin(azimuths),
        np.full(count, np.cos(tilt)),
    ])
    points = radius * np.column_stack([np.cos(azimuths), np.sin(azimuths), np.zeros(count)])
    return SeeGeometry(directions=directions, attachment_points=points)


def build_wrench_transform(geometry: SeeGeometry) -> np.ndarray:
    """Build the 3 x n force map H whose columns are the actuator directions.

    For assemblies of three or more actuators the map must have rank 3,
    otherwise Cartesian forces are not controllable.
    """
    h = geometry.directions.T.copy()
    if geometry.count >= 3 and np.linalg.matrix_rank(h) < 3:
        raise UncontrollableGeometryError(
            f"actuator directions span only rank {np.linalg.matrix_rank(h)} of 3"
        )
    return h


def constant_curvature_pose(arc_length: float, bend_angle: float) -> TipPose:
    """Tip pose of an inextensible centerline bent into a circular arc.

    The arc of length ``arc_length`` (mm) starts at the origin pointing along
    +y and bends by ``bend_angle`` (rad) in the x-y plane. For a nonzero angle
    the tip lies on a circle of radius L/angle; the straight configuration is
    the continuous limit, handled by series expansion for |angle| < 1e-6.
    """
    if arc_length <= 0.0:
        raise ValueError("arc_length must be positive")
    if abs(bend_angle) >= 2.0 * np.pi:
        raise ValueError("bend angle must satisfy |angle| < 2*pi")
    a = float(bend_angle)
    length = float(arc_length)
    if abs(a) < _SERIES_ANGLE:
        # L/a*(1-cos a) = L*a/2*(1 - a^2/12 + ...), L/a*sin a = L*(1 - a^2/6 + ...)
        x = length * a / 2.0 * (1.0 - a * a / 12.0)
        y = length * (1.0 - a * a / 6.0)
    else:
        radius = length / a
        x = radius * (1.0 - np.cos(a))
        y = radius * np.sin(a)
    position = np.array([x, y, 0.0])
    tangent = np.array([np.sin(a), np.cos(a), 0.0])
    return TipPose(position=position, tangent=tangent)


def actuator_to_cartesian(h, f_act) -> np.ndarray:
    """Map actuator-space forces (N) to a Cartesian force vector via H."""
    h = as_matrix(h, name="H")
    f_act = as_vector(f_act, n=h.shape[1], name="f_act")
    return h @ f_act


def cartesian_to_actuator(h, f_cart) -> np.ndarray:
    """Map a Cartesian force (N) to actuator space via the (pseudo-)inverse of H."""
    h = as_matrix(h, name="H")
    f_cart = as_vector(f_cart, n=3, name="f_cart")
    return invert_transform(h) @ f_cart
