"""Orchestration shared by the HTTP service and any direct library use.

Every function takes plain inputs (config text already parsed into a
ModelConfig, numbers, flags), runs the core modules, and returns
{"files": {name: text}, "summary": {...}} with fully deterministic content:
rerunning with identical inputs reproduces every byte.
"""

from __future__ import annotations

import numpy as np

from .bangbang import (
    alternating_policy,
    benchmark_config,
    benchmark_model,
    benchmark_shift,
    half_mix_policy,
    predicted_alternating_cost,
)
from .controls import RelaxedControlPolicy, chattering_approximation, weak_gap
from .cost import evaluate_relaxed, evaluate_strict
from .dynamics import mean_field_moment_curve, simulate_relaxed, simulate_strict
from .errors import ConfigError
from .fileio import (
    ModelConfig,
    cost_csv,
    csv_text,
    dump_policy,
    load_policy,
    moments_csv,
    trajectories_csv,
)
from .optimizer import SearchSpec, minimize_relaxed, strictify_best
from .roxin import check_roxin_sampled, select_strict

__all__ = [
    "run_simulate", "run_cost", "run_chatter", "run_optimize",
    "run_example3", "run_roxin", "default_test_family", "derived_seed",
]


def default_test_family():
    """Bounded test functions probing weak closeness of control measures."""
    return (
        lambda t, a: np.ones_like(np.asarray(t, dtype=float)),
        lambda t, a: a * np.ones_like(np.asarray(t, dtype=float)),
        lambda t, a: t * a,
        lambda t, a: (a * a) * np.ones_like(np.asarray(t, dtype=float)),
        lambda t, a: t * t * a,
    )


def derived_seed(seed: int, index: int) -> int:
    """Per-evaluation seed when common random numbers are disabled."""
    return (int(seed) + 0x9E3779B97F4A7C15 * (index + 1)) % (2 ** 64)


def _load_policy_or_default(cfg: ModelConfig, policy_text):
    if policy_text is None:
        return cfg.default_policy()
    return load_policy(policy_text, cfg.action_set(), cfg.horizon)


def _simulate_policy(cfg, policy, sim):
    action_set = cfg.action_set()
    coeffs = cfg.coefficients()
    if isinstance(policy, RelaxedControlPolicy):
        return simulate_relaxed(coeffs, policy, sim, action_set)
    return simulate_strict(coeffs, policy, sim, action_set)


def _evaluate_policy(cfg, policy, sim):
    action_set = cfg.action_set()
    coeffs = cfg.coefficients()
    costs = cfg.costs()
    if isinstance(policy, RelaxedControlPolicy):
        return evaluate_relaxed(costs, coeffs, policy, sim, action_set)
    return evaluate_strict(costs, coeffs, policy, sim, action_set)


def run_simulate(cfg: ModelConfig, policy_text=None, **overrides):
    policy = _load_policy_or_default(cfg, policy_text)
    sim = cfg.simulation(**overrides)
    bundle = _simulate_policy(cfg, policy, sim)
    curve = mean_field_moment_curve(bundle)
    summary = {
        "min_x": float(np.min(bundle.x)),
        "max_x": float(np.max(bundle.x)),
        "total_k": float(np.mean(bundle.k[:, -1])),
        "terminal_m1": float(curve[-1, 1]),
        "terminal_m2": float(curve[-1, 2]),
    }
    files = {
        "trajectories.csv": trajectories_csv(bundle),
        "moments.csv": moments_csv(bundle),
    }
    return {"files": files, "summary": summary}


def run_cost(cfg: ModelConfig, policy_text=None, **overrides):
    policy = _load_policy_or_default(cfg, policy_text)
    sim = cfg.simulation(**overrides)
    est = _evaluate_policy(cfg, policy, sim)
    label = "relaxed" if isinstance(policy, RelaxedControlPolicy) else "strict"
    summary = {
        "label": label, "value": est.value, "stderr": est.stderr,
        "running": est.running, "reflection": est.reflection,
        "terminal": est.terminal,
    }
    return {"files": {"cost.csv": cost_csv([(label, est)])}, "summary": summary}


def run_chatter(cfg: ModelConfig, policy_text, n_list, common_rng=True, **overrides):
    """Chattering sweep: strict vs relaxed cost and weak gap per level n."""
    q = _load_policy_or_default(cfg, policy_text)
    if not isinstance(q, RelaxedControlPolicy):
        raise ConfigError("the chattering sweep needs a relaxed policy")
    n_list = [int(n) for n in n_list]
    if not n_list or any(n < 1 for n in n_list):
        raise ConfigError("chattering levels must be positive integers")
    action_set = cfg.action_set()
    coeffs = cfg.coefficients()
    costs = cfg.costs()
    tests = default_test_family()
    rows = []
    for idx, n in enumerate(n_list):
        sim = cfg.simulation(**overrides)
        if not common_rng:
            sim = cfg.simulation(**{**overrides, "seed": derived_seed(sim.seed, idx)})
        relaxed_est = evaluate_relaxed(costs, coeffs, q, sim, action_set)
        u = chattering_approximation(q, n)
        strict_est = evaluate_strict(costs, coeffs, u, sim, action_set)
        rows.append((
            n, strict_est.value, relaxed_est.value,
            abs(strict_est.value - relaxed_est.value),
            weak_gap(u, q, tests),
        ))
    files = {
        "chatter_table.csv": csv_text(
            ("n", "J_strict", "J_relaxed", "gap", "weak_gap"), rows
        )
    }
    summary = {"rows": [list(r) for r in rows]}
    return {"files": files, "summary": summary}


def run_optimize(
    cfg: ModelConfig,
    control_cells: int = 1,
    budget: int = 100,
    method: str = "cross-entropy",
    search_seed: int = 0,
    elite_fraction: float = 0.2,
    strictify_n: int = 16,
    **overrides,
):
    action_set = cfg.action_set()
    coeffs = cfg.coefficients()
    costs = cfg.costs()
    sim = cfg.simulation(**overrides)
    spec = SearchSpec(
        control_cells=control_cells, budget=budget, method=method,
        seed=search_seed, elite_fraction=elite_fraction,
    )
    trace = minimize_relaxed(costs, coeffs, sim, spec, action_set)
    strict_policy, strict_est = strictify_best(
        costs, coeffs, sim, trace, strictify_n, action_set
    )
    best_so_far = np.minimum.accumulate([e.value for e in trace.entries])
    trace_rows = [
        (e.iteration, e.value, e.stderr, float(b))
        for e, b in zip(trace.entries, best_so_far)
    ]
    files = {
        "trace.csv": csv_text(("iteration", "J", "stderr", "best_so_far"), trace_rows),
        "best_policy.toml": dump_policy(trace.best_policy),
        "strict_policy.toml": dump_policy(strict_policy),
        "costs.csv": cost_csv([("strictified", strict_est)]),
    }
    summary = {
        "best_value": trace.best_value,
        "best_stderr": trace.best_stderr,
        "evaluations": len(trace.entries),
        "strictify_n": strictify_n,
        "strict_value": strict_est.value,
        "strict_stderr": strict_est.stderr,
    }
    return {"files": files, "summary": summary}


def run_example3(n_max: int = 32):
    """Reproduce the built-in bang-bang benchmark.

    Reports the cost of the half/half relaxed control (zero), the strict
    alternating controls at doubling block counts against the closed-form
    prediction, and the convexity failure that rules out a strict optimum.
    """
    if n_max < 1:
        raise ConfigError("n_max must be >= 1")
    horizon = 1.0
    action_set, coeffs, costs = benchmark_model(horizon)
    shift = benchmark_shift(horizon)

    relaxed = half_mix_policy(action_set, horizon)
    relaxed_est = evaluate_relaxed(
        costs, coeffs, relaxed, benchmark_config(horizon, steps=200), action_set
    )

    rows = []
    n = 1
    while n <= n_max:
        policy = alternating_policy(n, horizon, action_set)
        est = evaluate_strict(
            costs, coeffs, policy, benchmark_config(horizon, steps=200 * n), action_set
        )
        predicted = predicted_alternating_cost(n, horizon)
        rows.append((n, est.value, predicted, abs(est.value - predicted)))
        n *= 2

    probe = (0.0, shift, shift, shift * shift)
    convex, witness = check_roxin_sampled(
        coeffs, costs, action_set, [probe], tolerance=0.5
    )
    weights = relaxed.weights[0]
    selection = select_strict(
        coeffs, costs, action_set, weights, *probe, tolerance=0.5
    )

    files = {
        "example3_table.csv": csv_text(
            ("n", "J_strict", "predicted", "abs_error"), rows
        ),
        "optimal_policy.toml": dump_policy(relaxed),
    }
    summary = {
        "relaxed_value": relaxed_est.value,
        "relaxed_stderr": relaxed_est.stderr,
        "table": [list(r) for r in rows],
        "roxin_convex": convex,
        "roxin_witness": None if witness is None else list(witness["pair"]),
        "selection_action": selection.action,
        "selection_residual": selection.residual,
        "selection_representable": selection.representable,
    }
    return {"files": files, "summary": summary}


def run_roxin(cfg: ModelConfig, tolerance: float = 1e-6, probes=None, weights=None):
    """Convexity probe plus strict selection report for a configured model."""
    action_set = cfg.action_set()
    coeffs = cfg.coefficients()
    costs = cfg.costs()
    if probes is None:
        x0 = cfg.initial if isinstance(cfg.initial, float) else float(cfg.initial[0])
        probes = [
            (t, x0, x0, x0 * x0)
            for t in (0.0, 0.5 * cfg.horizon, cfg.horizon)
        ]
    probes = [tuple(float(v) for v in p) for p in probes]
    if weights is None:
        weights = np.full(action_set.size, 1.0 / action_set.size)
        head = 0.0
        for v in weights[:-1]:
            head += v
        weights[-1] = max(1.0 - head, 0.0)
    convex, witness = check_roxin_sampled(coeffs, costs, action_set, probes, tolerance)
    rows = []
    for probe in probes:
        sel = select_strict(coeffs, costs, action_set, weights, *probe, tolerance=tolerance)
        rows.append(probe + (sel.action, sel.residual, sel.representable))
    files = {
        "roxin.csv": csv_text(
            ("t", "x", "m1", "m2", "selected", "residual", "representable"), rows
        )
    }
    summary = {
        "convex": convex,
        "witness": None if witness is None else {
            "probe": list(witness["probe"]),
            "pair": list(witness["pair"]),
            "midpoint_distance": witness["midpoint_distance"],
        },
        "tolerance": tolerance,
    }
    return {"files": files, "summary": summary}
