"""Dense vector/matrix arithmetic, norms, projections, and a finite-difference
gradient checker.

Vectors are 1-D float64 numpy arrays, matrices 2-D float64 numpy arrays.
Every public operation validates shapes and finiteness of its result; all
functions are pure and safe to call concurrently.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from attrex.errors import InputError

Vector = np.ndarray
Matrix = np.ndarray


def as_vector(values: Sequence[float] | np.ndarray) -> Vector:
    """Coerce to a finite 1-D float64 array."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise InputError(f"expected a 1-D vector, got array of shape {v.shape}")
    if v.size == 0:
        raise InputError("expected a non-empty vector")
    if not np.all(np.isfinite(v)):
        raise InputError("vector contains non-finite entries")
    return v


def as_matrix(values: Sequence[Sequence[float]] | np.ndarray) -> Matrix:
    """Coerce to a finite 2-D float64 array."""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise InputError(f"expected a 2-D matrix, got array of shape {m.shape}")
    if m.shape[0] == 0 or m.shape[1] == 0:
        raise InputError(f"expected a matrix with positive dimensions, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError("matrix contains non-finite entries")
    return m


def _check_same_length(a: Vector, b: Vector, op: str) -> None:
    if a.shape != b.shape:
        raise InputError(f"{op}: vector lengths differ ({a.shape[0]} vs {b.shape[0]})")


def matvec(m: Matrix, v: Vector) -> Vector:
    """Matrix-vector product m @ v."""
    if m.shape[1] != v.shape[0]:
        raise InputError(
            f"matvec: matrix of shape {m.shape[0]}x{m.shape[1]} cannot multiply "
            f"vector of length {v.shape[0]}"
        )
    return m @ v


def euclidean_distance(a: Vector, b: Vector) -> float:
    """l2 distance between two equal-length vectors."""
    _check_same_length(a, b, "euclidean_distance")
    return float(np.linalg.norm(a - b))


def linf_distance(a: Vector, b: Vector) -> float:
    """Max absolute coordinate difference."""
    _check_same_length(a, b, "linf_distance")
    return float(np.max(np.abs(a - b)))


def clip_to_ball_and_range(
    x_hat: Vector, x_orig: Vector, eps: float, lo: float = 0.0, hi: float = 1.0
) -> Vector:
    """Clamp x_hat into the eps-ball around x_orig intersected with [lo, hi].

    The intersection is taken coordinatewise; the range clamp is applied last
    so the output always lies within [lo, hi] even when the ball pokes out.
    """
    _check_same_length(x_hat, x_orig, "clip_to_ball_and_range")
    if eps < 0:
        raise InputError(f"clip_to_ball_and_range: eps must be nonnegative, got {eps}")
    if lo > hi:
        raise InputError(f"clip_to_ball_and_range: lo ({lo}) exceeds hi ({hi})")
    out = np.clip(x_hat, x_orig - eps, x_orig + eps)
    return np.clip(out, lo, hi)


def finite_diff_gradient(
    f: Callable[[Vector], float], x: Vector, h: float = 1e-5
) -> Vector:
    """Central-difference gradient of a scalar function, one probe pair per coordinate."""
    if h <= 0:
        raise InputError(f"finite_diff_gradient: h must be positive, got {h}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.shape[0]):
        probe = x.copy()
        probe[i] = x[i] + h
        f_plus = float(f(probe))
        probe[i] = x[i] - h
        f_minus = float(f(probe))
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise InputError(
                f"finite_diff_gradient: non-finite function value at coordinate {i}"
            )
        grad[i] = (f_plus - f_minus) / (2.0 * h)
    return grad
