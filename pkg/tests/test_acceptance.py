"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report including wall-clock times.
"""

import math
import time

import numpy as np

from rmvsde.bangbang import benchmark_config, benchmark_model, benchmark_shift
from rmvsde.controls import ActionSet, OpenLoopPolicy, as_relaxed
from rmvsde.cost import CostSet, evaluate_relaxed, evaluate_strict
from rmvsde.dynamics import (
    CoefficientSet,
    SimulationConfig,
    check_growth_bound,
    check_lipschitz_bound,
    simulate_relaxed,
    simulate_strict,
)
from rmvsde.fileio import load_config
from rmvsde.measure import from_samples, w2_distance
from rmvsde.optimizer import SearchSpec, minimize_relaxed, strictify_best
from rmvsde.roxin import check_roxin_sampled, select_strict
from rmvsde.skorokhod import GridPath, reflect, stieltjes_against_k
from rmvsde.workflows import run_chatter, run_example3, run_optimize, run_simulate


class _Gate:
    def __init__(self, number, name, budget_s):
        self.number = number
        self.name = name
        self.budget_s = budget_s

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        status = "PASS" if exc_type is None else "FAIL"
        print(f"ACCEPTANCE {self.number:2d} {self.name}: {status} ({elapsed:.2f}s)")
        if exc_type is None:
            assert elapsed < self.budget_s, (
                f"criterion {self.number} exceeded its {self.budget_s}s budget"
            )
        return False


def test_01_benchmark_relaxed_optimum_is_zero():
    with _Gate(1, "relaxed optimum cost is zero", 1.0):
        summary = run_example3(n_max=1)["summary"]
        assert abs(summary["relaxed_value"]) <= 1e-12
        assert summary["relaxed_stderr"] == 0.0


def test_02_benchmark_chattering_rate():
    with _Gate(2, "alternating cost tracks 1/(3n^2)", 10.0):
        table = run_example3(n_max=32)["summary"]["table"]
        values = {}
        for n, value, predicted, _ in table:
            assert abs(value - predicted) <= 1e-4
            values[n] = value
        for n in (1, 2, 4, 8, 16):
            ratio = values[n] / values[2 * n]
            assert 3.5 <= ratio <= 4.5


def test_03_skorokhod_suite():
    with _Gate(3, "reflection invariants on 1000 paths", 5.0):
        gen = np.random.Generator(np.random.Philox(key=np.array([501, 0], dtype=np.uint64)))
        for _ in range(1000):
            m = int(gen.integers(2, 50))
            times = np.concatenate([[0.0], np.cumsum(gen.random(m) + 1e-3)])
            values = np.cumsum(np.concatenate([[gen.random()], gen.normal(size=m)]))
            ypath = GridPath(times, values)
            path = reflect(ypath)
            dk = np.diff(path.k)
            assert np.all(path.x >= 0.0)
            assert path.k[0] == 0.0 and np.all(dk >= 0.0)
            assert np.all(path.x[1:][dk > 0.0] == 0.0)
            assert stieltjes_against_k(path.x, path) == 0.0
            bump = np.concatenate([[0.0], np.cumsum(gen.random(m))])
            assert np.all(path.k <= path.k + bump)
            alt = np.empty(m + 1)
            alt[0] = 0.0
            slack = gen.random(m + 1) + 1e-6
            for i in range(1, m + 1):
                alt[i] = max(alt[i - 1], -ypath.values[i] + slack[i])
            assert np.all(path.k <= alt + 1e-12)


def test_04_wasserstein_suite():
    with _Gate(4, "metric axioms and coupling bound", 5.0):
        gen = np.random.Generator(np.random.Philox(key=np.array([502, 0], dtype=np.uint64)))
        for _ in range(200):
            mus = [
                from_samples(gen.random(int(gen.integers(1, 20))) * 10.0)
                for _ in range(3)
            ]
            a, b, c = mus
            assert w2_distance(a, a) == 0.0
            assert w2_distance(a, b) == w2_distance(b, a)
            assert w2_distance(a, c) <= w2_distance(a, b) + w2_distance(b, c) + 1e-12
            n = int(gen.integers(1, 20))
            xs, ys = gen.random(n) * 10.0, gen.random(n) * 10.0
            d2 = w2_distance(from_samples(xs), from_samples(ys)) ** 2
            for _ in range(50):
                perm = gen.permutation(n)
                assert d2 <= float(np.mean((xs - ys[perm]) ** 2)) + 1e-12


def _random_model(gen):
    pts = np.sort(gen.choice(np.linspace(-2.0, 2.0, 17), size=int(gen.integers(2, 6)),
                             replace=False))
    aset = ActionSet(points=pts)
    ca, cx, cm = gen.normal(), abs(gen.normal()) * 0.5, gen.normal() * 0.3
    s0, s1 = abs(gen.normal()) * 0.3 + 0.05, gen.random() * 0.2
    fa, fx = gen.normal(), abs(gen.normal())
    coeffs = CoefficientSet(
        b=lambda t, x, m1, m2, a: ca * np.asarray(a) - cx * x + cm * m1,
        sigma=lambda t, x, m1, m2: s0 + s1 * np.tanh(x),
    )
    costs = CostSet(
        f=lambda t, x, m1, m2, a: fx * x * x + fa * np.asarray(a) ** 2,
        c=lambda t, x, m1, m2: 1.0 + 0.0 * np.asarray(x),
        g=lambda x, m1, m2: x + 0.1 * m2,
    )
    config = SimulationConfig(
        horizon=1.0,
        steps=int(gen.integers(32, 128)),
        particles=int(gen.integers(8, 32)),
        seed=int(gen.integers(0, 2 ** 32)),
        initial=float(gen.random() * 2.0),
    )
    return aset, coeffs, costs, config


def test_05_dirac_equivalence():
    with _Gate(5, "relaxed Dirac == strict, bit-exact, 20 models", 30.0):
        gen = np.random.Generator(np.random.Philox(key=np.array([503, 0], dtype=np.uint64)))
        for _ in range(20):
            aset, coeffs, costs, config = _random_model(gen)
            action = float(gen.choice(aset.points))
            strict = OpenLoopPolicy(aset, np.array([0.0, 1.0]), np.array([action]))
            relaxed = as_relaxed(strict)
            bs = simulate_strict(coeffs, strict, config, aset)
            br = simulate_relaxed(coeffs, relaxed, config, aset)
            assert np.array_equal(bs.x, br.x)
            assert np.array_equal(bs.k, br.k)
            assert np.array_equal(bs.noise, br.noise)
            es = evaluate_strict(costs, coeffs, strict, config, aset)
            er = evaluate_relaxed(costs, coeffs, relaxed, config, aset)
            assert es == er


def test_06_mean_field_consistency():
    with _Gate(6, "mean tracks the limiting ODE", 60.0):
        aset = ActionSet(points=np.array([0.0]))
        coeffs = CoefficientSet(
            b=lambda t, x, m1, m2, a: -x + 0.5 * m1,
            sigma=lambda t, x, m1, m2: 0.1,
        )
        policy = OpenLoopPolicy(aset, np.array([0.0, 1.0]), np.array([0.0]))
        steps, particles = 1000, 10_000
        config = SimulationConfig(
            horizon=1.0, steps=steps, particles=particles, seed=606, initial=4.0
        )
        bundle = simulate_strict(coeffs, policy, config, aset)
        m1_final = float(np.mean(bundle.x[:, -1]))
        stderr = float(np.std(bundle.x[:, -1], ddof=1) / math.sqrt(particles))
        dt = 1.0 / steps
        target = 4.0 * math.exp(-0.5)
        assert abs(m1_final - target) <= 3.0 * (stderr + 0.01 * dt)


def test_07_moment_bound_stability():
    with _Gate(7, "fourth moment stable under refinement", 60.0):
        aset = ActionSet(points=np.array([1.0]))
        coeffs = CoefficientSet(
            b=lambda t, x, m1, m2, a: a - x,
            sigma=lambda t, x, m1, m2: 0.4,
            declared_growth_c1=3.0,
            declared_lipschitz_c2=1.0,
        )
        ok, witness = check_growth_bound(coeffs, aset, 1.0)
        assert ok, witness
        ok, witness = check_lipschitz_bound(coeffs, aset, 1.0)
        assert ok, witness
        policy = OpenLoopPolicy(aset, np.array([0.0, 1.0]), np.array([1.0]))
        peaks = []
        for steps in (100, 200, 400, 800):
            for particles in (100, 1000, 10_000):
                config = SimulationConfig(
                    horizon=1.0, steps=steps, particles=particles, seed=707, initial=1.0
                )
                bundle = simulate_strict(coeffs, policy, config, aset)
                peaks.append(float(np.max(np.mean(bundle.x ** 4, axis=0))))
        assert max(peaks) < 2.0 * min(peaks)


def test_08_roxin_failure_witness():
    with _Gate(8, "convexity failure witnessed at the extremes", 1.0):
        action_set, coeffs, costs = benchmark_model(1.0)
        shift = benchmark_shift(1.0)
        probe = (0.0, shift, shift, shift * shift)
        convex, witness = check_roxin_sampled(
            coeffs, costs, action_set, [probe], tolerance=0.5
        )
        assert not convex
        assert witness["pair"] == (-1.0, 1.0)
        selection = select_strict(
            coeffs, costs, action_set, [0.5, 0.5], *probe, tolerance=0.5
        )
        assert abs(selection.residual - 1.0) <= 1e-9
        assert not selection.representable

        affine_set = ActionSet(points=np.linspace(-1.0, 1.0, 41), interval=(-1.0, 1.0))
        affine_coeffs = CoefficientSet(
            b=lambda t, x, m1, m2, a: a, sigma=lambda t, x, m1, m2: 0.0
        )
        affine_costs = CostSet(
            f=lambda t, x, m1, m2, a: 2.0 * np.asarray(a),
            c=lambda t, x, m1, m2: 0.0,
            g=lambda x, m1, m2: 0.0,
        )
        spacing, lipschitz = 0.05, math.sqrt(5.0)
        result = select_strict(
            affine_coeffs, affine_costs, affine_set,
            np.where(np.abs(affine_set.points) == 1.0, 0.5, 0.0),
            0.0, 0.0, 0.0, 0.0, tolerance=1.0,
        )
        assert result.residual <= lipschitz * spacing / 2.0


def test_09_optimizer_reaches_the_relaxed_infimum():
    with _Gate(9, "cross-entropy search meets the infimum", 60.0):
        action_set, coeffs, costs = benchmark_model(1.0, points=(-1.0, 0.0, 1.0))
        config = benchmark_config(1.0, steps=256, seed=0)
        spec = SearchSpec(control_cells=1, budget=500, method="cross-entropy", seed=0)
        trace = minimize_relaxed(costs, coeffs, config, spec, action_set)
        assert trace.best_value <= 1e-3
        fine = benchmark_config(1.0, steps=3200, seed=0)
        _, est = strictify_best(costs, coeffs, fine, trace, 16, action_set)
        assert est.value <= 1.0 / (3.0 * 16 ** 2) + 5e-4
        assert est.value >= trace.best_value - 2.0 * trace.best_stderr


DETERMINISM_CONFIG = """\
[model]
actions = [-1.0, 0.0, 1.0]
drift = "a - 0.5*x + 0.1*m1"
diffusion = "0.2"
running_cost = "x^2 + a^2"
reflection_cost = "1"
terminal_cost = "x"
horizon = 1.0

[simulation]
steps = 64
particles = 40
seed = 17
initial = 0.5

[policy]
kind = "relaxed"
boundaries = [0.0, 1.0]
weights = [[0.5, 0.0, 0.5]]
"""


def test_10_reruns_are_byte_identical():
    with _Gate(10, "reruns and thread counts are byte-identical", 30.0):
        cfg = load_config(DETERMINISM_CONFIG)
        sim1 = run_simulate(cfg, thread_hint=1)
        sim4 = run_simulate(cfg, thread_hint=4)
        assert sim1["files"] == sim4["files"]
        assert run_simulate(cfg)["files"] == run_simulate(cfg)["files"]
        chat = [run_chatter(cfg, None, [1, 4]) for _ in range(2)]
        assert chat[0]["files"] == chat[1]["files"]
        opt = [
            run_optimize(cfg, budget=20, method="cross-entropy", search_seed=2)
            for _ in range(2)
        ]
        assert opt[0]["files"] == opt[1]["files"]
        ex3 = [run_example3(4) for _ in range(2)]
        assert ex3[0]["files"] == ex3[1]["files"]
