"""Derivative-free search for near-minimal relaxed controls.

Candidates are piecewise-constant weight matrices on a fixed uniform cell
grid, so every candidate is a valid relaxed policy with exact unit time
marginal. All cost evaluations inside one search reuse the simulation seed
(common random numbers), which makes the running best monotone and lets
small particle counts discriminate between candidates.

Methods:

* random-search     independent uniform-simplex rows per candidate,
* cross-entropy     per-cell Dirichlet proposals refit to the elite mean with
                    geometrically growing concentration; proposals start
                    sparse (total mass below the dimension) and a small
                    fraction of candidates keeps sampling that sparse prior,
                    which prevents the refit from freezing onto a
                    near-optimal vertex before the right one is ever drawn,
* coordinate-descent deterministic sweeps over cells trying one-hot rows,
                    the uniform row, and half/half pairs.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .controls import (
    ActionSet,
    RelaxedControlPolicy,
    chattering_approximation,
    uniform_grid,
)
from .cost import CostSet, evaluate_relaxed, evaluate_strict
from .dynamics import CoefficientSet, SimulationConfig
from .errors import DomainViolation

__all__ = ["SearchSpec", "TraceEntry", "SearchTrace", "minimize_relaxed", "strictify_best"]

_METHODS = ("random-search", "cross-entropy", "coordinate-descent")
_POPULATION = 20
_CE_GROWTH = 1.7
_CE_SMOOTHING = 0.2
_CE_MAX_MASS = 1e8
_CE_START_MASS = 1.0
_CE_EXPLORE_MASS = 0.5
_CE_EXPLORE_FRACTION = 0.15


@dataclass(frozen=True)
class SearchSpec:
    control_cells: int
    budget: int
    method: str = "cross-entropy"
    seed: int = 0
    elite_fraction: float = 0.2

    def __post_init__(self):
        if self.control_cells < 1:
            raise DomainViolation("need at least one control cell")
        if self.budget < 1:
            raise DomainViolation("budget must be >= 1")
        if self.method not in _METHODS:
            raise DomainViolation(f"method must be one of {_METHODS}")
        if not (0.0 < self.elite_fraction <= 1.0):
            raise DomainViolation("elite fraction must be in (0, 1]")


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    digest: str
    value: float
    stderr: float


@dataclass(frozen=True, eq=False)
class SearchTrace:
    entries: tuple
    best_policy: RelaxedControlPolicy
    best_value: float

    @property
    def best_stderr(self) -> float:
        return min(self.entries, key=lambda e: e.value).stderr


def _exact_rows(w: np.ndarray) -> np.ndarray:
    """Set each row's last entry to 1 minus the left-to-right head sum.

    With that choice the plain left-to-right row sum is exactly 1.0, hence
    the candidate's time marginal is exact.
    """
    w = np.array(w, dtype=np.float64)
    for row in w:
        head = 0.0
        for v in row[:-1]:
            head += v
        row[-1] = max(1.0 - head, 0.0)
    return w


def _digest(boundaries: np.ndarray, weights: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(boundaries.tobytes())
    h.update(weights.tobytes())
    return h.hexdigest()[:12]


class _Search:
    def __init__(self, costs, coeffs, config, spec, action_set):
        self.costs = costs
        self.coeffs = coeffs
        self.config = config
        self.spec = spec
        self.action_set = action_set
        self.grid = uniform_grid(config.horizon, spec.control_cells)
        self.rng = np.random.Generator(
            np.random.Philox(key=np.array([spec.seed, 0x5EA7C4], dtype=np.uint64))
        )
        self.entries = []
        self.best_policy = None
        self.best_value = math.inf

    def exhausted(self) -> bool:
        return len(self.entries) >= self.spec.budget

    def evaluate(self, weights: np.ndarray) -> float:
        policy = RelaxedControlPolicy(self.action_set, self.grid.copy(), weights)
        est = evaluate_relaxed(
            self.costs, self.coeffs, policy, self.config, self.action_set
        )
        self.entries.append(
            TraceEntry(
                iteration=len(self.entries),
                digest=_digest(self.grid, weights),
                value=est.value,
                stderr=est.stderr,
            )
        )
        if est.value < self.best_value:
            self.best_value = est.value
            self.best_policy = policy
        return est.value

    def sample_rows(self, alpha: np.ndarray) -> np.ndarray:
        rows = np.vstack([self.rng.dirichlet(alpha[c]) for c in range(alpha.shape[0])])
        return _exact_rows(rows)

    def run_random_search(self):
        k = self.action_set.size
        alpha = np.ones((self.spec.control_cells, k))
        while not self.exhausted():
            self.evaluate(self.sample_rows(alpha))

    def run_cross_entropy(self):
        cells, k = self.spec.control_cells, self.action_set.size
        prior = np.full((cells, k), _CE_EXPLORE_MASS / k)
        alpha = np.full((cells, k), _CE_START_MASS / k)
        mass = _CE_START_MASS
        n_elite = max(1, math.ceil(self.spec.elite_fraction * _POPULATION))
        while not self.exhausted():
            population = []
            for _ in range(min(_POPULATION, self.spec.budget - len(self.entries))):
                explore = self.rng.random() < _CE_EXPLORE_FRACTION
                w = self.sample_rows(prior if explore else alpha)
                population.append((self.evaluate(w), w))
            if len(population) < _POPULATION:
                break  # budget ended mid-population: no refit possible
            population.sort(key=lambda pair: pair[0])
            elite = np.mean([w for _, w in population[:n_elite]], axis=0)
            mass = min(mass * _CE_GROWTH, _CE_MAX_MASS)
            alpha = _CE_SMOOTHING * alpha + (1.0 - _CE_SMOOTHING) * np.maximum(
                elite * mass, 1e-12
            )

    def run_coordinate_descent(self):
        cells, k = self.spec.control_cells, self.action_set.size
        moves = [np.eye(k)[j] for j in range(k)]
        moves.append(np.full(k, 1.0 / k))
        if k <= 12:
            for i in range(k):
                for j in range(i + 1, k):
                    row = np.zeros(k)
                    row[i] = row[j] = 0.5
                    moves.append(row)
        current = _exact_rows(np.full((cells, k), 1.0 / k))
        best = self.evaluate(current.copy())
        while not self.exhausted():
            improved = False
            for c in range(cells):
                for row in moves:
                    if self.exhausted():
                        return
                    trial = current.copy()
                    trial[c] = row
                    value = self.evaluate(_exact_rows(trial))
                    if value < best:
                        best = value
                        current = trial
                        improved = True
            if not improved:
                return

    def trace(self) -> SearchTrace:
        return SearchTrace(
            entries=tuple(self.entries),
            best_policy=self.best_policy,
            best_value=self.best_value,
        )


def minimize_relaxed(
    costs: CostSet,
    coeffs: CoefficientSet,
    config: SimulationConfig,
    spec: SearchSpec,
    action_set: ActionSet,
) -> SearchTrace:
    """Search the relaxed class for a low-cost policy; returns the full trace."""
    search = _Search(costs, coeffs, config, spec, action_set)
    if spec.method == "random-search":
        search.run_random_search()
    elif spec.method == "cross-entropy":
        search.run_cross_entropy()
    else:
        search.run_coordinate_descent()
    return search.trace()


def strictify_best(
    costs: CostSet,
    coeffs: CoefficientSet,
    config: SimulationConfig,
    trace: SearchTrace,
    n: int,
    action_set: ActionSet,
):
    """Chattering approximation of the best policy plus its strict cost.

    The strict cost reuses the search's simulation seed, so the gap to
    `trace.best_value` reflects the chattering level alone.
    """
    if n < 1:
        raise DomainViolation("chattering level n must be >= 1")
    policy = chattering_approximation(trace.best_policy, n)
    est = evaluate_strict(costs, coeffs, policy, config, action_set)
    return policy, est
