"""Built-in bang-bang benchmark with a purely relaxed optimum.

The classical deterministic system dX = u dt on the real line, started at 0
with actions in [-1, 1] and running cost x^2 + (u^2 - 1)^2, has infimum cost
zero: the state must stay at 0 (so the drift must vanish) while the action
must sit at +/-1 (so the control penalty vanishes). No single-valued control
does both, but the half/half mixture of -1 and +1 does, so only a relaxed
control attains the infimum, and fast alternation between -1 and +1
approaches it.

The toolkit's state space is [0, inf), so the benchmark shifts the state by
L = horizon + 1: starting at L with |drift| <= 1 keeps the state >= 1, the
reflection never activates, and the shifted simulation reproduces the
unconstrained system exactly. Costs read the state through (x - L).
"""

from __future__ import annotations

import numpy as np

from .controls import ActionSet, OpenLoopPolicy, RelaxedControlPolicy, uniform_grid
from .cost import CostSet
from .dynamics import CoefficientSet, SimulationConfig
from .errors import DomainViolation

__all__ = [
    "benchmark_action_set", "benchmark_shift", "benchmark_model",
    "benchmark_config", "alternating_policy", "half_mix_policy",
    "predicted_alternating_cost",
]


def benchmark_shift(horizon: float) -> float:
    """Shift making the lower boundary unreachable for |drift| <= 1."""
    return float(horizon) + 1.0


def benchmark_action_set(points=(-1.0, 1.0)) -> ActionSet:
    pts = np.asarray(points, dtype=np.float64)
    if np.any(pts < -1.0) or np.any(pts > 1.0):
        raise DomainViolation("benchmark actions live in [-1, 1]")
    return ActionSet(points=pts, interval=(-1.0, 1.0))


def benchmark_model(horizon: float = 1.0, points=(-1.0, 1.0)):
    """Action set, coefficients and costs of the shifted benchmark."""
    shift = benchmark_shift(horizon)
    action_set = benchmark_action_set(points)

    def drift(t, x, m1, m2, a):
        return a

    def diffusion(t, x, m1, m2):
        return 0.0

    def running_cost(t, x, m1, m2, a):
        dev = x - shift
        pen = (np.asarray(a) ** 2 - 1.0) ** 2
        return dev * dev + pen

    def zero3(x, m1, m2):
        return 0.0

    def zero4(t, x, m1, m2):
        return 0.0

    coeffs = CoefficientSet(
        b=drift, sigma=diffusion, declared_growth_c1=2.0, declared_lipschitz_c2=1.0
    )
    costs = CostSet(f=running_cost, c=zero4, g=zero3, declared_growth_c3=None)
    return action_set, coeffs, costs


def benchmark_config(horizon: float = 1.0, steps: int = 200, seed: int = 0) -> SimulationConfig:
    """One particle suffices: the benchmark dynamics are deterministic."""
    return SimulationConfig(
        horizon=horizon, steps=steps, particles=1, seed=seed,
        initial=benchmark_shift(horizon),
    )


def alternating_policy(n: int, horizon: float, action_set: ActionSet) -> OpenLoopPolicy:
    """Strict control switching between +1 and -1 on n equal blocks."""
    if n < 1:
        raise DomainViolation("need at least one block")
    boundaries = uniform_grid(horizon, n)
    actions = np.array([1.0 if k % 2 == 0 else -1.0 for k in range(n)])
    return OpenLoopPolicy(action_set, boundaries, actions)


def half_mix_policy(action_set: ActionSet, horizon: float) -> RelaxedControlPolicy:
    """Single-cell relaxed control putting mass 1/2 on each of -1 and +1."""
    pts = action_set.points
    w = np.zeros((1, pts.size))
    w[0, int(np.searchsorted(pts, -1.0))] = 0.5
    w[0, int(np.searchsorted(pts, 1.0))] = 0.5
    if not np.isclose(w.sum(), 1.0):
        raise DomainViolation("benchmark action set must contain -1 and +1")
    return RelaxedControlPolicy(action_set, uniform_grid(horizon, 1), w)


def predicted_alternating_cost(n: int, horizon: float) -> float:
    """Exact cost of the n-block alternation: the state is a triangle wave of
    amplitude horizon/n, so the squared-state integral is horizon^3/(3 n^2)."""
    return horizon ** 3 / (3.0 * n * n)
