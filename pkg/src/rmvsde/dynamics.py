"""Interacting-particle Euler scheme for the reflected mean-field dynamics.

N particles share a uniform time grid. Each step first freezes the empirical
moments (m1, m2) of the current particle cloud (the finite-N stand-in for the
law of the state), then advances every particle by an Euler increment and
projects it back onto [0, inf):

    y_i = x_i + drift * dt + sigma * dW_i,   x_i' = max(y_i, 0),   dk_i = x_i' - y_i.

The projection is the one-step Skorokhod map, so per-particle complementarity
(dk > 0 only where x' = 0) holds bit-exactly.

Reproducibility: particle i draws its noise from a dedicated Philox stream
keyed by (seed, i), and Gaussians come from inverse-CDF transformation of the
stream's uniforms. Results are bit-identical for any thread hint because
threads only split particle ranges into fixed-size chunks while the moment
reduction always runs over the full array in one deterministic pass.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .controls import ActionSet, FeedbackPolicy, OpenLoopPolicy, RelaxedControlPolicy
from .errors import DomainViolation, NumericalBlowup, ShapeError
from .measure import EmpiricalMeasure

__all__ = [
    "CoefficientSet", "SimulationConfig", "TrajectoryBundle",
    "simulate_strict", "simulate_relaxed", "mean_field_moment_curve",
    "brownian_increments", "snap_cells_to_grid",
    "check_growth_bound", "check_lipschitz_bound",
]

_CHUNK = 8192  # particles per thread task; fixed so results ignore thread count
_MIN_UNIFORM = 2.0 ** -53


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """Drift and diffusion with optional declared growth/Lipschitz constants.

    `b(t, x, m1, m2, a)` and `sigma(t, x, m1, m2)` must accept numpy arrays
    for x (and a) and broadcast; m1/m2 are the first and second moments of
    the empirical law. Declared constants are only metadata checked by the
    sampled-probe validators below.
    """

    b: object
    sigma: object
    declared_growth_c1: float | None = None
    declared_lipschitz_c2: float | None = None


@dataclass(frozen=True, eq=False)
class SimulationConfig:
    horizon: float
    steps: int
    particles: int
    seed: int
    initial: object = 0.0  # scalar or per-particle array, all >= 0
    thread_hint: int | None = None

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise DomainViolation("horizon must be > 0")
        if self.steps < 1 or self.particles < 1:
            raise DomainViolation("need steps >= 1 and particles >= 1")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise DomainViolation("seed must fit in 64 unsigned bits")
        if self.thread_hint is not None and self.thread_hint < 1:
            raise DomainViolation("thread hint must be positive")

    def initial_state(self) -> np.ndarray:
        x0 = np.asarray(self.initial, dtype=np.float64)
        if x0.ndim == 0:
            x0 = np.full(self.particles, float(x0))
        if x0.shape != (self.particles,):
            raise ShapeError("initial must be a scalar or one value per particle")
        if np.any(x0 < 0.0) or not np.all(np.isfinite(x0)):
            raise DomainViolation("initial state must be finite and >= 0")
        return x0.copy()


@dataclass(frozen=True, eq=False)
class TrajectoryBundle:
    """Simulated paths: x, k are (particles x nodes), noise is (particles x steps)."""

    times: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)
    noise: np.ndarray = field(repr=False)

    @property
    def particles(self) -> int:
        return int(self.x.shape[0])

    @property
    def steps(self) -> int:
        return int(self.times.size - 1)

    @property
    def terminal_law(self) -> EmpiricalMeasure:
        return EmpiricalMeasure(self.x[:, -1])


def brownian_increments(seed: int, particles: int, steps: int, dt: float) -> np.ndarray:
    """Per-particle Brownian increments, sqrt(dt) * standard normal.

    Particle i owns the Philox stream keyed (seed, i); uniforms are mapped
    through the inverse normal CDF (u = 0 is floored to 2^-53).
    """
    out = np.empty((particles, steps))
    root = np.sqrt(dt)
    for i in range(particles):
        gen = np.random.Generator(
            np.random.Philox(key=np.array([seed, i], dtype=np.uint64))
        )
        u = gen.random(steps)
        out[i] = ndtri(np.maximum(u, _MIN_UNIFORM)) * root
    return out


def snap_cells_to_grid(boundaries: np.ndarray, horizon: float, steps: int) -> np.ndarray:
    """Map control-cell boundaries to nearest grid node indices.

    Returns one node index per boundary, clipped to [0, steps] and forced to
    start at 0 and end at steps. Cells whose endpoints snap together cover no
    step.
    """
    if not np.isclose(boundaries[-1], horizon, rtol=1e-12, atol=0.0):
        raise DomainViolation("policy horizon does not match the simulation horizon")
    dt = horizon / steps
    idx = np.rint(np.asarray(boundaries) / dt).astype(np.int64)
    idx = np.maximum.accumulate(np.clip(idx, 0, steps))
    idx[0], idx[-1] = 0, steps
    return idx


def _steps_per_cell(idx: np.ndarray) -> np.ndarray:
    return np.diff(idx)


def open_loop_step_actions(policy: OpenLoopPolicy, horizon: float, steps: int) -> np.ndarray:
    """Action value governing each of the `steps` grid cells."""
    idx = snap_cells_to_grid(policy.boundaries, horizon, steps)
    return np.repeat(policy.actions, _steps_per_cell(idx))


def relaxed_step_weights(policy: RelaxedControlPolicy, horizon: float, steps: int) -> np.ndarray:
    """Weight row governing each of the `steps` grid cells, (steps x actions)."""
    idx = snap_cells_to_grid(policy.boundaries, horizon, steps)
    return np.repeat(policy.weights, _steps_per_cell(idx), axis=0)


def _check_policy_actions(policy, action_set: ActionSet | None):
    if action_set is None:
        return
    if isinstance(policy, OpenLoopPolicy):
        for a in policy.actions:
            if not action_set.contains(float(a)):
                raise DomainViolation(
                    f"policy action {a!r} is outside the model's action set"
                )
    elif not policy.action_set.same_points(action_set):
        raise DomainViolation("policy action set differs from the model's")


def _run(coeffs: CoefficientSet, drift_of_step, config: SimulationConfig) -> TrajectoryBundle:
    """Shared Euler loop; `drift_of_step(s, t, xs, m1, m2)` supplies the drift."""
    n, steps = config.particles, config.steps
    dt = config.horizon / steps
    times = np.linspace(0.0, config.horizon, steps + 1)
    noise = brownian_increments(config.seed, n, steps, dt)
    x = np.empty((n, steps + 1))
    k = np.empty((n, steps + 1))
    x[:, 0] = config.initial_state()
    k[:, 0] = 0.0

    workers = config.thread_hint or 1
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 and n > _CHUNK else None
    try:
        for s in range(steps):
            t = float(times[s])
            xs = x[:, s]
            with np.errstate(over="ignore"):
                m1 = float(np.mean(xs))
                m2 = float(np.mean(xs * xs))
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    drift = drift_of_step(s, t, xs, m1, m2)
                    sig = coeffs.sigma(t, xs, m1, m2)
            except NumericalBlowup as err:
                raise NumericalBlowup(
                    f"coefficient blow-up at step {s}: {err}", step=s, where=err.where
                ) from err
            y = np.empty(n)

            def advance(lo, hi):
                # transient inf is tolerated; the finiteness check below reports it
                with np.errstate(over="ignore", invalid="ignore"):
                    d = drift[lo:hi] if np.ndim(drift) else drift
                    sg = sig[lo:hi] if np.ndim(sig) else sig
                    y[lo:hi] = xs[lo:hi] + d * dt + sg * noise[lo:hi, s]

            if pool is None:
                advance(0, n)
            else:
                spans = [(lo, min(lo + _CHUNK, n)) for lo in range(0, n, _CHUNK)]
                list(pool.map(lambda span: advance(*span), spans))
            if not np.all(np.isfinite(y)):
                raise NumericalBlowup(
                    f"state became non-finite at step {s}", step=s
                )
            xn = np.maximum(y, 0.0)
            x[:, s + 1] = xn
            k[:, s + 1] = k[:, s] + (xn - y)
    finally:
        if pool is not None:
            pool.shutdown(wait=False)
    return TrajectoryBundle(times=times, x=x, k=k, noise=noise)


def simulate_strict(
    coeffs: CoefficientSet,
    policy,
    config: SimulationConfig,
    action_set: ActionSet | None = None,
) -> TrajectoryBundle:
    """Simulate under a strict (open-loop or feedback) control."""
    _check_policy_actions(policy, action_set)
    if isinstance(policy, OpenLoopPolicy):
        step_actions = open_loop_step_actions(policy, config.horizon, config.steps)

        def drift_of_step(s, t, xs, m1, m2):
            return coeffs.b(t, xs, m1, m2, float(step_actions[s]))

    elif isinstance(policy, FeedbackPolicy):

        def drift_of_step(s, t, xs, m1, m2):
            return coeffs.b(t, xs, m1, m2, policy.action_at(t, xs, m1, m2))

    else:
        raise DomainViolation(f"not a strict control policy: {policy!r}")
    return _run(coeffs, drift_of_step, config)


def simulate_relaxed(
    coeffs: CoefficientSet,
    q: RelaxedControlPolicy,
    config: SimulationConfig,
    action_set: ActionSet | None = None,
) -> TrajectoryBundle:
    """Simulate under a relaxed control; drift is the exact weight mixture."""
    _check_policy_actions(q, action_set)
    step_weights = relaxed_step_weights(q, config.horizon, config.steps)
    pts = q.action_set.points

    def drift_of_step(s, t, xs, m1, m2):
        row = step_weights[s]
        acc = np.zeros_like(xs)
        for j in range(pts.size):
            w = row[j]
            if w != 0.0:
                acc += w * coeffs.b(t, xs, m1, m2, float(pts[j]))
        return acc

    return _run(coeffs, drift_of_step, config)


def mean_field_moment_curve(bundle: TrajectoryBundle) -> np.ndarray:
    """Per grid node (t, m1, m2) of the particle cloud; shape (nodes, 3)."""
    m1 = np.mean(bundle.x, axis=0)
    m2 = np.mean(bundle.x * bundle.x, axis=0)
    return np.column_stack([bundle.times, m1, m2])


def _probe_points(action_set: ActionSet, horizon: float, samples: int, seed: int):
    gen = np.random.Generator(np.random.Philox(key=np.array([seed, 2 ** 32], dtype=np.uint64)))
    t = gen.random(samples) * horizon
    x = gen.random(samples) * 10.0
    m1 = gen.random(samples) * 5.0
    sd = gen.random(samples) * 5.0
    m2 = m1 * m1 + sd * sd
    a = action_set.points[gen.integers(0, action_set.size, samples)]
    return t, x, m1, m2, a


def check_growth_bound(
    coeffs: CoefficientSet,
    action_set: ActionSet,
    horizon: float,
    samples: int = 1000,
    seed: int = 0,
):
    """Sampled probe of |b|^2 + sigma^2 <= C1 (1 + x^2 + m2).

    Returns (True, None) or (False, witness dict). Without a declared growth
    constant the bound is skipped but totality (finite values on every probe)
    is still required.
    """
    c1 = coeffs.declared_growth_c1
    t, x, m1, m2, a = _probe_points(action_set, horizon, samples, seed)
    for i in range(samples):
        bv = float(np.asarray(coeffs.b(t[i], x[i], m1[i], m2[i], a[i])))
        sv = float(np.asarray(coeffs.sigma(t[i], x[i], m1[i], m2[i])))
        lhs = bv * bv + sv * sv
        witness = {"t": t[i], "x": x[i], "m1": m1[i], "m2": m2[i], "a": float(a[i]),
                   "lhs": lhs}
        if not np.isfinite(lhs):
            return False, witness
        if c1 is not None:
            rhs = c1 * (1.0 + x[i] * x[i] + m2[i])
            if not (lhs <= rhs):
                witness["rhs"] = rhs
                return False, witness
    return True, None


def check_lipschitz_bound(
    coeffs: CoefficientSet,
    action_set: ActionSet,
    horizon: float,
    samples: int = 1000,
    seed: int = 0,
):
    """Sampled probe of the joint Lipschitz bound for b and sigma.

    Compares coefficient differences at paired states/laws against
    C2 (|x - x'| + W2(mu, mu')), with the laws realised as small empirical
    measures so the Wasserstein term is computable.
    """
    from .measure import from_samples, second_moment, w2_distance

    c2 = coeffs.declared_lipschitz_c2
    if c2 is None:
        return True, None
    gen = np.random.Generator(np.random.Philox(key=np.array([seed, 2 ** 33], dtype=np.uint64)))
    for _ in range(samples):
        t = float(gen.random() * horizon)
        a = float(action_set.points[int(gen.integers(0, action_set.size))])
        x1, x2 = float(gen.random() * 10.0), float(gen.random() * 10.0)
        mu1 = from_samples(gen.random(8) * 10.0)
        mu2 = from_samples(gen.random(8) * 10.0)
        p1 = (float(np.mean(mu1.atoms)), second_moment(mu1))
        p2 = (float(np.mean(mu2.atoms)), second_moment(mu2))
        dist = abs(x1 - x2) + w2_distance(mu1, mu2)
        db = abs(float(np.asarray(coeffs.b(t, x1, p1[0], p1[1], a)))
                 - float(np.asarray(coeffs.b(t, x2, p2[0], p2[1], a))))
        ds = abs(float(np.asarray(coeffs.sigma(t, x1, p1[0], p1[1])))
                 - float(np.asarray(coeffs.sigma(t, x2, p2[0], p2[1]))))
        if db + ds > c2 * dist + 1e-9:
            return False, {"t": t, "x": x1, "x_prime": x2, "a": a,
                           "lhs": db + ds, "rhs": c2 * dist}
    return True, None
