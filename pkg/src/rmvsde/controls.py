"""Strict and relaxed control policies over a finite action set.

A strict policy selects one action per time; a relaxed policy selects a
probability vector over the action set per time cell. Strict open-loop
policies embed into the relaxed class as one-hot rows, and every relaxed
policy can be approximated by a fast-switching strict policy whose
occupation measure per block reproduces the relaxed weights in duration
(the chattering construction).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainViolation, ShapeError, UnsupportedPolicyForm

__all__ = [
    "ActionSet", "OpenLoopPolicy", "FeedbackPolicy", "RelaxedControlPolicy",
    "as_relaxed", "chattering_approximation", "weak_gap", "uniform_grid",
]

ROW_SUM_TOL = 1e-12


def uniform_grid(horizon: float, cells: int) -> np.ndarray:
    """Shared constructor for uniform cell boundaries on [0, horizon]."""
    if horizon <= 0.0 or cells < 1:
        raise DomainViolation("need horizon > 0 and at least one cell")
    return np.linspace(0.0, float(horizon), cells + 1)


def _check_boundaries(boundaries) -> np.ndarray:
    b = np.asarray(boundaries, dtype=np.float64)
    if b.ndim != 1 or b.size < 2:
        raise DomainViolation("cell boundaries need at least two nodes")
    if b[0] != 0.0 or not np.all(np.diff(b) > 0.0):
        raise DomainViolation("cell boundaries must increase strictly from 0")
    return b


def _cell_index(boundaries: np.ndarray, t) -> np.ndarray:
    idx = np.searchsorted(boundaries, t, side="right") - 1
    return np.clip(idx, 0, boundaries.size - 2)


@dataclass(frozen=True, eq=False)
class ActionSet:
    """Finite sorted set of admissible action values."""

    points: np.ndarray = field(repr=False)
    interval: tuple | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 1 or pts.size == 0 or not np.all(np.isfinite(pts)):
            raise DomainViolation("action set needs finitely many finite points")
        pts = np.sort(pts)
        if np.any(np.diff(pts) == 0.0):
            raise DomainViolation("action values must be distinct")
        if self.interval is not None:
            lo, hi = float(self.interval[0]), float(self.interval[1])
            if lo > hi:
                raise DomainViolation("action interval is empty")
            if pts[0] < lo or pts[-1] > hi:
                raise DomainViolation("action values fall outside the declared interval")
            object.__setattr__(self, "interval", (lo, hi))
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return int(self.points.size)

    def contains(self, value: float) -> bool:
        idx = np.searchsorted(self.points, value)
        return idx < self.points.size and self.points[idx] == value

    def nearest(self, values):
        """Snap values to the closest action points (ties to the smaller)."""
        pts = self.points
        idx = np.clip(np.searchsorted(pts, values), 1, pts.size - 1) if pts.size > 1 else 0
        if pts.size == 1:
            return np.broadcast_to(pts[0], np.shape(values)).copy() if np.ndim(values) else pts[0]
        lo, hi = pts[idx - 1], pts[idx]
        pick_hi = (np.asarray(values) - lo) > (hi - np.asarray(values))
        return np.where(pick_hi, hi, lo)

    def same_points(self, other: "ActionSet") -> bool:
        return self.points.shape == other.points.shape and bool(
            np.all(self.points == other.points)
        )


@dataclass(frozen=True, eq=False)
class OpenLoopPolicy:
    """Piecewise-constant strict control: one action value per time cell."""

    action_set: ActionSet
    boundaries: np.ndarray = field(repr=False)
    actions: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = _check_boundaries(self.boundaries)
        acts = np.asarray(self.actions, dtype=np.float64)
        if acts.shape != (b.size - 1,):
            raise ShapeError("need exactly one action per cell")
        for a in acts:
            if not self.action_set.contains(a):
                raise UnsupportedPolicyForm(
                    f"action {a!r} is not a member of the action set"
                )
        b.setflags(write=False)
        acts.setflags(write=False)
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "actions", acts)

    @property
    def horizon(self) -> float:
        return float(self.boundaries[-1])

    def action_at(self, t):
        return self.actions[_cell_index(self.boundaries, t)]


@dataclass(frozen=True, eq=False)
class FeedbackPolicy:
    """Strict control given by a map (t, x, m1, m2) -> action.

    The map may return anything real-valued; outputs are snapped to the
    nearest action point, so the policy always produces members of the set.
    """

    action_set: ActionSet
    rule: object  # callable(t, x, m1, m2) -> float or array

    def action_at(self, t, x, m1, m2):
        return self.action_set.nearest(self.rule(t, x, m1, m2))


@dataclass(frozen=True, eq=False)
class RelaxedControlPolicy:
    """Piecewise-constant relaxed control: a probability row per time cell.

    Row sums are accumulated left to right once at construction and must
    equal 1 within 1e-12. The time marginal of the induced measure on
    [0, T] x A is Lebesgue by construction; `time_marginal_mass` evaluates
    it through the algebraically equivalent form t + sum(width*(rowsum-1))
    so that exact unit rows give exactly t.
    """

    action_set: ActionSet
    boundaries: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    row_sums: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        b = _check_boundaries(self.boundaries)
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape != (b.size - 1, self.action_set.size):
            raise ShapeError(
                "weights must be (cells x actions) matching boundaries and action set"
            )
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise DomainViolation("weights must be finite and >= 0")
        sums = np.empty(w.shape[0])
        for i in range(w.shape[0]):
            acc = 0.0
            for v in w[i]:
                acc += v
            sums[i] = acc
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            raise DomainViolation("each weight row must sum to 1 within 1e-12")
        b.setflags(write=False)
        w.setflags(write=False)
        sums.setflags(write=False)
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "row_sums", sums)

    @property
    def horizon(self) -> float:
        return float(self.boundaries[-1])

    @property
    def cells(self) -> int:
        return int(self.boundaries.size - 1)

    def weights_at(self, t):
        return self.weights[_cell_index(self.boundaries, t)]

    def time_marginal_mass(self, t: float) -> float:
        """Mass of the control measure on [0, t] x A."""
        t = float(t)
        if t < 0.0 or t > self.horizon:
            raise DomainViolation("t outside [0, horizon]")
        correction = 0.0
        for i in range(self.cells):
            lo, hi = self.boundaries[i], min(self.boundaries[i + 1], t)
            if hi <= lo:
                break
            correction += (hi - lo) * (self.row_sums[i] - 1.0)
        return t + correction


def as_relaxed(u: OpenLoopPolicy) -> RelaxedControlPolicy:
    """Embed an open-loop strict policy as one-hot relaxed weights."""
    if not isinstance(u, OpenLoopPolicy):
        raise UnsupportedPolicyForm(
            "only open-loop policies embed into the relaxed class"
        )
    pts = u.action_set.points
    w = np.zeros((u.actions.size, pts.size))
    cols = np.searchsorted(pts, u.actions)
    w[np.arange(u.actions.size), cols] = 1.0
    return RelaxedControlPolicy(u.action_set, u.boundaries.copy(), w)


def _block_average_weights(q: RelaxedControlPolicy, lo: float, hi: float) -> np.ndarray:
    """Time average of the weight rows over [lo, hi]."""
    b = q.boundaries
    first = int(_cell_index(b, lo))
    last = int(_cell_index(b, np.nextafter(hi, lo)))
    acc = np.zeros(q.action_set.size)
    for i in range(first, last + 1):
        overlap = min(hi, b[i + 1]) - max(lo, b[i])
        if overlap > 0.0:
            acc += overlap * q.weights[i]
    return acc / (hi - lo)


def chattering_approximation(q: RelaxedControlPolicy, n: int) -> OpenLoopPolicy:
    """Fast-switching strict policy reproducing q's occupation per block.

    [0, T] is split into n macro-blocks; inside block k the block-averaged
    weight vector assigns each action a sub-interval of proportional length,
    in ascending action order. Zero-weight actions get no sub-interval.
    """
    if n < 1:
        raise DomainViolation("chattering level n must be >= 1")
    T = q.horizon
    blocks = uniform_grid(T, n)
    pts = q.action_set.points
    boundaries = [0.0]
    actions = []
    for k in range(n):
        lo, hi = float(blocks[k]), float(blocks[k + 1])
        wbar = _block_average_weights(q, lo, hi)
        length = hi - lo
        live = [j for j in range(pts.size) if wbar[j] > 0.0]
        pos = lo
        for rank, j in enumerate(live):
            end = hi if rank == len(live) - 1 else min(pos + length * wbar[j], hi)
            if end > boundaries[-1]:
                boundaries.append(end)
                actions.append(pts[j])
            pos = end
    return OpenLoopPolicy(q.action_set, np.array(boundaries), np.array(actions))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _cell_integral(phi, lo: float, hi: float, action: float) -> float:
    """16-node Gauss-Legendre integral of t -> phi(t, action) over [lo, hi].

    Exact for polynomial time dependence up to degree 31.
    """
    half = 0.5 * (hi - lo)
    tq = half * _GL_NODES + 0.5 * (hi + lo)
    return half * float(np.dot(_GL_WEIGHTS, np.broadcast_to(phi(tq, action), tq.shape)))


def weak_gap(u: OpenLoopPolicy, q: RelaxedControlPolicy, tests) -> float:
    """Largest test-function discrepancy between a strict and a relaxed policy.

    Returns max over phi of
    |int phi(t, u_t) dt  -  int sum_j w_j(t) phi(t, a_j) dt|.
    """
    tests = list(tests)
    if not tests:
        raise DomainViolation("need at least one test function")
    if not isinstance(u, OpenLoopPolicy):
        raise UnsupportedPolicyForm("weak gap is defined for open-loop strict policies")
    pts = q.action_set.points
    gap = 0.0
    for phi in tests:
        strict = 0.0
        for i in range(u.actions.size):
            strict += _cell_integral(
                phi, float(u.boundaries[i]), float(u.boundaries[i + 1]), float(u.actions[i])
            )
        relaxed = 0.0
        for i in range(q.cells):
            lo, hi = float(q.boundaries[i]), float(q.boundaries[i + 1])
            for j in range(pts.size):
                w = q.weights[i, j]
                if w != 0.0:
                    relaxed += w * _cell_integral(phi, lo, hi, float(pts[j]))
        gap = max(gap, abs(strict - relaxed))
    return gap
