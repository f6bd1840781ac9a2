"""Discrete one-dimensional Skorokhod decomposition on [0, inf).

Given a grid path y with y[0] >= 0, the minimal reflection is

    k[i] = max(0, max_{j<=i} (-y[j])),     x[i] = y[i] + k[i].

Whenever the running maximum updates at index i, k[i] equals -y[i] so that
x[i] = y[i] + k[i] is exactly 0.0 in floating point; the complementarity
condition (k increases only while x sits at the boundary) therefore holds
bit-exactly, and the Stieltjes integral of x against dk vanishes exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainViolation, ShapeError

__all__ = ["GridPath", "ReflectedPath", "reflect", "stieltjes_against_k"]


def _as_grid(times) -> np.ndarray:
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size < 1:
        raise DomainViolation("time grid must be a nonempty 1-d array")
    if times[0] != 0.0:
        raise DomainViolation("time grid must start at 0")
    if times.size > 1 and not np.all(np.diff(times) > 0.0):
        raise DomainViolation("time grid must be strictly increasing")
    return times


@dataclass(frozen=True, eq=False)
class GridPath:
    """A real-valued path sampled on a strictly increasing grid from t=0."""

    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        times = _as_grid(self.times)
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != times.shape:
            raise ShapeError("times and values must have equal length")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class ReflectedPath:
    """The pair (x, k): reflected path and cumulative reflection."""

    times: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)

    def __post_init__(self):
        times = _as_grid(self.times)
        x = np.asarray(self.x, dtype=np.float64)
        k = np.asarray(self.k, dtype=np.float64)
        if x.shape != times.shape or k.shape != times.shape:
            raise ShapeError("times, x and k must have equal length")
        if np.any(x < 0.0):
            raise DomainViolation("reflected path must be >= 0")
        if k[0] != 0.0 or np.any(np.diff(k) < 0.0):
            raise DomainViolation("reflection process must be nondecreasing from 0")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "k", k)


def reflect(y: GridPath) -> ReflectedPath:
    """Minimal Skorokhod decomposition of a grid path started at y[0] >= 0."""
    if y.values[0] < 0.0:
        raise DomainViolation("initial value must be >= 0")
    k = np.maximum(np.maximum.accumulate(-y.values), 0.0)
    x = y.values + k
    return ReflectedPath(times=y.times, x=x, k=k)


def stieltjes_against_k(values, path: ReflectedPath) -> float:
    """Integrate grid-node values against the increments of k.

    Uses right-endpoint evaluation: sum_i values[i] * (k[i] - k[i-1]).
    At every index where k increases the reflected path is exactly zero, so
    integrating x itself returns exactly 0.0.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape != path.k.shape:
        raise ShapeError("integrand must have one value per grid node")
    if values.size == 1:
        return 0.0
    return float(np.dot(values[1:], np.diff(path.k)))
