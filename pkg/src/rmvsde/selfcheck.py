"""Reduced-scale invariant suite behind the selftest command.

Each property runs in well under a second and returns (name, ok, detail).
The `tamper` argument exists for exercising the failure path: the named
property runs with an impossible acceptance threshold and must then fail.
"""

from __future__ import annotations

import numpy as np

from . import expressions as ex
from .bangbang import benchmark_config, benchmark_model, benchmark_shift, half_mix_policy
from .controls import (
    ActionSet,
    OpenLoopPolicy,
    RelaxedControlPolicy,
    as_relaxed,
    chattering_approximation,
    uniform_grid,
)
from .cost import CostSet, evaluate_relaxed, evaluate_strict
from .dynamics import CoefficientSet, SimulationConfig, simulate_relaxed, simulate_strict
from .errors import ToolkitError
from .measure import from_samples, w2_distance
from .roxin import check_roxin_sampled
from .skorokhod import GridPath, reflect, stieltjes_against_k

__all__ = ["run_selfcheck", "PROPERTY_NAMES"]


def _rng(tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([2024, tag], dtype=np.uint64)))


def _check_skorokhod(tol: float):
    gen = _rng(1)
    for case in range(100):
        m = int(gen.integers(2, 40))
        times = np.concatenate([[0.0], np.cumsum(gen.random(m) + 0.01)])
        values = np.cumsum(np.concatenate([[gen.random()], gen.normal(size=m)]))
        ypath = GridPath(times, values)
        path = reflect(ypath)
        if np.any(path.x < 0.0):
            return False, f"negative reflected value in case {case}"
        dk = np.diff(path.k)
        if path.k[0] != 0.0 or np.any(dk < 0.0):
            return False, f"reflection not nondecreasing in case {case}"
        if np.any((dk > 0.0) & (path.x[1:] > tol)):
            return False, f"complementarity violated in case {case}"
        if abs(stieltjes_against_k(path.x, path)) > tol:
            return False, f"boundary integral nonzero in case {case}"
        # independent feasible reflection: must dominate the minimal one
        slack = gen.random(m + 1)
        alt = np.empty(m + 1)
        alt[0] = 0.0
        for i in range(1, m + 1):
            alt[i] = max(alt[i - 1], -ypath.values[i] + slack[i])
        if np.any(path.k > alt + tol):
            return False, f"minimality violated in case {case}"
    return True, "100 random paths"


def _check_w2_axioms(tol: float):
    gen = _rng(2)
    for case in range(50):
        mus = [from_samples(gen.random(int(gen.integers(1, 12))) * 5.0) for _ in range(3)]
        a, b, c = mus
        if w2_distance(a, a) > tol:
            return False, f"self distance nonzero in case {case}"
        if w2_distance(a, b) != w2_distance(b, a):
            return False, f"asymmetric in case {case}"
        if w2_distance(a, c) > w2_distance(a, b) + w2_distance(b, c) + tol:
            return False, f"triangle inequality violated in case {case}"
    return True, "50 random triples"


def _check_coupling_bound(tol: float):
    gen = _rng(3)
    for case in range(50):
        n = int(gen.integers(1, 12))
        xs = gen.random(n) * 4.0
        ys = gen.random(n) * 4.0
        d = w2_distance(from_samples(xs), from_samples(ys))
        for _ in range(10):
            perm = gen.permutation(n)
            if d * d > float(np.mean((xs - ys[perm]) ** 2)) + tol:
                return False, f"coupling bound violated in case {case}"
    return True, "50 pairs x 10 pairings"


def _check_chattering_occupation(tol: float):
    aset = ActionSet(points=np.array([-1.0, 0.0, 1.0]))
    q = RelaxedControlPolicy(
        aset, uniform_grid(1.0, 2), np.array([[0.25, 0.25, 0.5], [0.5, 0.0, 0.5]])
    )
    for n in (1, 2, 4, 8):
        u = chattering_approximation(q, n)
        blocks = uniform_grid(1.0, n)
        for k in range(n):
            lo, hi = blocks[k], blocks[k + 1]
            length = hi - lo
            for j, a in enumerate(aset.points):
                inside = 0.0
                for i in range(u.actions.size):
                    if u.actions[i] == a:
                        inside += max(
                            0.0, min(hi, u.boundaries[i + 1]) - max(lo, u.boundaries[i])
                        )
                want = 0.0
                for c in range(q.cells):
                    ov = max(0.0, min(hi, q.boundaries[c + 1]) - max(lo, q.boundaries[c]))
                    want += ov * q.weights[c, j]
                if abs(inside - want) > tol:
                    return False, f"occupation off at n={n}, block {k}, action {a}"
    return True, "dyadic occupation exact"


def _check_marginal_mass(tol: float):
    aset = ActionSet(points=np.array([0.0, 1.0]))
    grid = uniform_grid(2.0, 4)
    q = RelaxedControlPolicy(
        aset, grid, np.array([[0.5, 0.5], [1.0, 0.0], [0.25, 0.75], [0.0, 1.0]])
    )
    for t in grid:
        if abs(q.time_marginal_mass(float(t)) - float(t)) > tol:
            return False, f"marginal mass off at t={t}"
    return True, "marginal mass exact on the grid"


def _dirac_pair(seed: int):
    aset = ActionSet(points=np.array([-0.5, 0.25, 1.0]))
    coeffs = CoefficientSet(
        b=lambda t, x, m1, m2, a: a - 0.4 * x + 0.1 * m1,
        sigma=lambda t, x, m1, m2: 0.3,
    )
    costs = CostSet(
        f=lambda t, x, m1, m2, a: x * x + a * a,
        c=lambda t, x, m1, m2: 1.0 + 0.0 * np.asarray(x),
        g=lambda x, m1, m2: x,
    )
    config = SimulationConfig(horizon=1.0, steps=64, particles=16, seed=seed, initial=0.5)
    return aset, coeffs, costs, config


def _check_dirac_equivalence(tol: float):
    for seed in (11, 12):
        aset, coeffs, costs, config = _dirac_pair(seed)
        action = float(aset.points[1])
        strict = OpenLoopPolicy(aset, np.array([0.0, 1.0]), np.array([action]))
        relaxed = as_relaxed(strict)
        bs = simulate_strict(coeffs, strict, config, aset)
        br = simulate_relaxed(coeffs, relaxed, config, aset)
        if not (np.array_equal(bs.x, br.x) and np.array_equal(bs.k, br.k)):
            return False, f"paths differ under seed {seed}"
        es = evaluate_strict(costs, coeffs, strict, config, aset)
        er = evaluate_relaxed(costs, coeffs, relaxed, config, aset)
        if es != er or abs(es.value - er.value) > tol:
            return False, f"costs differ under seed {seed}"
    return True, "2 seeded models bit-identical"


def _check_expression_roundtrip(tol: float):
    del tol
    sources = [
        "a - x + 0.5*m1", "x^2 + (a^2 - 1)^2", "min(1, max(-1, a))",
        "exp(-t)*x", "-x^2", "2^-3*t", "sqrt(x + 1) / (m2 + 1)",
    ]
    for src in sources:
        tree = ex.parse(src, ex.DRIFT_VARS)
        again = ex.parse(ex.unparse(tree), ex.DRIFT_VARS)
        if tree != again:
            return False, f"round-trip changed {src!r}"
    return True, f"{len(sources)} expressions"


def _check_expression_fuzz(tol: float):
    del tol
    gen = _rng(4)
    atoms = ["t", "x", "m1", "m2", "a", "1.5", "0", "2", "+", "-", "*", "/", "^",
             "(", ")", ",", "sin", "max", "garbage", "?"]
    for case in range(200):
        soup = " ".join(atoms[int(i)] for i in gen.integers(0, len(atoms), gen.integers(1, 12)))
        try:
            ex.parse(soup, ex.DRIFT_VARS)
        except ToolkitError:
            continue
        except Exception as err:  # noqa: BLE001 - the property under test
            return False, f"non-toolkit error on {soup!r}: {err!r}"
    return True, "200 token soups"


def _check_moment_bound(tol: float):
    aset = ActionSet(points=np.array([1.0]))
    coeffs = CoefficientSet(
        b=lambda t, x, m1, m2, a: a - x, sigma=lambda t, x, m1, m2: 0.4,
        declared_growth_c1=3.0, declared_lipschitz_c2=1.0,
    )
    policy = OpenLoopPolicy(aset, np.array([0.0, 1.0]), np.array([1.0]))
    peaks = []
    for steps in (50, 100):
        for particles in (50, 200):
            config = SimulationConfig(
                horizon=1.0, steps=steps, particles=particles, seed=5, initial=1.0
            )
            bundle = simulate_strict(coeffs, policy, config, aset)
            peaks.append(float(np.max(np.mean(bundle.x ** 4, axis=0))))
    ratio = max(peaks) / min(peaks)
    if ratio > 2.0 + tol:
        return False, f"fourth-moment peak ratio {ratio:.3f} exceeds 2"
    return True, f"peak ratio {ratio:.3f}"


def _check_declared_bounds(tol: float):
    from .cost import check_cost_growth_bound
    from .dynamics import check_growth_bound, check_lipschitz_bound

    aset = ActionSet(points=np.array([0.0, 1.0]))
    coeffs = CoefficientSet(
        b=lambda t, x, m1, m2, a: a - x + 0.2 * m1,
        sigma=lambda t, x, m1, m2: 0.5,
        declared_growth_c1=6.0,
        declared_lipschitz_c2=1.5,
    )
    costs = CostSet(
        f=lambda t, x, m1, m2, a: x * x + a,
        c=lambda t, x, m1, m2: 1.0,
        g=lambda x, m1, m2: x,
        # a tampered (negative) tolerance claims an unholdable growth constant
        declared_growth_c3=6.0 if tol >= 0.0 else 1e-6,
    )
    ok, witness = check_growth_bound(coeffs, aset, 1.0, samples=300)
    if not ok:
        return False, f"growth probe failed: {witness}"
    ok, witness = check_lipschitz_bound(coeffs, aset, 1.0, samples=300)
    if not ok:
        return False, f"Lipschitz probe failed: {witness}"
    ok, witness = check_cost_growth_bound(costs, aset, 1.0, samples=300)
    if not ok:
        return False, f"cost growth probe failed: {witness}"
    return True, "declared bounds hold on 300 probes"


def _check_roxin_witness(tol: float):
    del tol
    action_set, coeffs, costs = benchmark_model(1.0)
    shift = benchmark_shift(1.0)
    convex, witness = check_roxin_sampled(
        coeffs, costs, action_set, [(0.0, shift, shift, shift * shift)], tolerance=0.5
    )
    if convex or witness is None or witness["pair"] != (-1.0, 1.0):
        return False, f"expected witness pair (-1, 1), got {witness}"
    return True, "mixture of extremes is not attainable strictly"


def _check_benchmark_relaxed_zero(tol: float):
    action_set, coeffs, costs = benchmark_model(1.0)
    q = half_mix_policy(action_set, 1.0)
    est = evaluate_relaxed(costs, coeffs, q, benchmark_config(1.0, steps=64), action_set)
    if abs(est.value) > tol:
        return False, f"relaxed benchmark cost {est.value!r} not ~0"
    return True, "relaxed benchmark cost is zero"


_PROPERTIES = (
    ("skorokhod-invariants", _check_skorokhod, 0.0),
    ("wasserstein-metric-axioms", _check_w2_axioms, 1e-12),
    ("wasserstein-coupling-bound", _check_coupling_bound, 1e-12),
    ("chattering-occupation", _check_chattering_occupation, 0.0),
    ("relaxed-marginal-mass", _check_marginal_mass, 0.0),
    ("dirac-equivalence", _check_dirac_equivalence, 0.0),
    ("expression-roundtrip", _check_expression_roundtrip, 0.0),
    ("expression-fuzz", _check_expression_fuzz, 0.0),
    ("moment-bound", _check_moment_bound, 1e-9),
    ("declared-bounds", _check_declared_bounds, 0.0),
    ("roxin-witness", _check_roxin_witness, 0.0),
    ("benchmark-relaxed-zero", _check_benchmark_relaxed_zero, 1e-12),
)

PROPERTY_NAMES = tuple(name for name, _, _ in _PROPERTIES)


def run_selfcheck(tamper: str | None = None):
    """Run every property; returns a list of {name, ok, detail} dicts."""
    results = []
    for name, check, tol in _PROPERTIES:
        use_tol = -1.0 if tamper == name else tol
        try:
            ok, detail = check(use_tol)
        except ToolkitError as err:
            ok, detail = False, f"raised {err!r}"
        results.append({"name": name, "ok": bool(ok), "detail": detail})
    return results
