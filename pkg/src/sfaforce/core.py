"""Shared numeric conventions, domain types and the small dense linear-algebra kit.

Units used everywhere in this package: volume in ml, pressure in kPa, force
in N, length in mm, flow in ml/s, time in s. Angles are radians internally;
degrees appear only at the config/CLI boundary. All other modules rely on
these conventions so that published actuator constants (e.g. stiffness in
kPa/ml, transmission in kPa/N) can be used verbatim.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ActuatorState",
    "RankDeficientError",
    "SingularTransformError",
    "as_vector",
    "as_matrix",
    "check_stiffness",
    "solve_least_squares",
    "invert_transform",
]

#: Condition number above which a wrench transform is treated as singular.
SINGULAR_CONDITION_LIMIT = 1e8


class RankDeficientError(ValueError):
    """Least-squares matrix does not have full column rank.

    Carries the numerical rank found during factorisation.
    """

    def __init__(self, numerical_rank: int, columns: int):
        self.numerical_rank = numerical_rank
        self.columns = columns
        super().__init__(
            f"matrix is rank deficient: numerical rank {numerical_rank} < {columns} columns"
        )


class SingularTransformError(ValueError):
    """Wrench transform is singular or too ill-conditioned to invert."""

    def __init__(self, condition_number: float):
        self.condition_number = condition_number
        super().__init__(
            f"transform condition number {condition_number:.3e} exceeds "
            f"{SINGULAR_CONDITION_LIMIT:.0e} (singular configuration)"
        )


@dataclass(frozen=True)
class ActuatorState:
    """Fluid state of one actuator at one instant.

    volume in ml, flow in ml/s, pressure in kPa, extension in mm.
    """

    volume: float
    flow: float
    pressure: float
    extension: float


def as_vector(values, n: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float array, optionally checking its length."""
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} must have length {n}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_matrix(values, shape: tuple[int, int] | None = None, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float array, optionally checking its shape."""
    arr = np.atleast_2d(np.asarray(values, dtype=float))
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if shape is not None and arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_stiffness(stiffness: np.ndarray, name: str = "stiffness") -> np.ndarray:
    """Validate a volumetric stiffness matrix (kPa/ml).

    Diagonal entries must be strictly positive; a physically plausible
    coupled system should also be diagonally dominant, which is reported
    as a warning rather than an error.
    """
    k = as_matrix(stiffness, name=name)
    if k.shape[0] != k.shape[1]:
        raise ValueError(f"{name} must be square, got {k.shape}")
    diag = np.diag(k)
    if np.any(diag <= 0.0):
        raise ValueError(f"{name} diagonal entries must be strictly positive, got {diag}")
    off_diag_sums = np.sum(np.abs(k), axis=1) - np.abs(diag)
    if np.any(np.abs(diag) <= off_diag_sums):
        warnings.warn(
            f"{name} is not diagonally dominant; coupled-actuator identification "
            "may be poorly conditioned",
            stacklevel=2,
        )
    return k


def solve_least_squares(a, b) -> np.ndarray:
    """Solve min ||A x - b|| for an m x n system with m >= n via QR.

    QR is used rather than the normal equations because the conditioning of
    stacked calibration data is not known in advance. A consistent system is
    reproduced to better than 1e-9 relative error.

    Raises:
        RankDeficientError: if A does not have full column rank; carries the
            numerical rank.
    """
    a = as_matrix(a, name="A")
    m, n = a.shape
    b = as_vector(b, n=m, name="b")
    if m < n:
        raise ValueError(f"need at least as many rows as columns, got {m} x {n}")
    q, r = np.linalg.qr(a)
    diag = np.abs(np.diag(r))
    tol = max(m, n) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    rank = int(np.count_nonzero(diag > tol))
    if rank < n:
        raise RankDeficientError(rank, n)
    return np.linalg.solve(r, q.T @ b)


def invert_transform(h) -> np.ndarray:
    """Invert a 3 x n wrench transform.

    Returns the exact inverse for n == 3 and the Moore-Penrose pseudo-inverse
    otherwise (right inverse for n > 3, so H @ H+ == I3; left inverse for
    n < 3, so H+ @ H == In).

    Raises:
        SingularTransformError: condition number above 1e8.
    """
    h = as_matrix(h, name="H")
    if h.shape[0] != 3:
        raise ValueError(f"wrench transform must have 3 rows, got {h.shape}")
    cond = np.linalg.cond(h)
    if not np.isfinite(cond) or cond > SINGULAR_CONDITION_LIMIT:
        raise SingularTransformError(float(cond))
    if h.shape[1] == 3:
        return np.linalg.inv(h)
    return np.linalg.pinv(h)
