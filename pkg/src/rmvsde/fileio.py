"""Config and policy files (TOML) and CSV table rendering.

A model config is a TOML document:

    [model]
    actions = [-1.0, 0.0, 1.0]        # or: interval = [-1.0, 1.0], grid = 41
    drift = "a - x"                   # variables: t, x, m1, m2, a
    diffusion = "0.1"                 # variables: t, x, m1, m2 (uncontrolled)
    running_cost = "x^2"              # variables: t, x, m1, m2, a
    reflection_cost = "0"             # variables: t, x, m1, m2
    terminal_cost = "0"               # variables: x, m1, m2
    horizon = 1.0

    [simulation]
    steps = 200
    particles = 100
    seed = 7
    initial = 1.0                     # or a per-particle list

    [constants]                       # optional declared bounds
    c1 = 10.0
    c2 = 4.0
    c3 = 10.0

    [policy]                          # optional default control
    kind = "constant"                 # "constant" | "open-loop" | "relaxed"
    action = 1.0                      # constant
    # boundaries = [...], actions = [...]      open-loop
    # boundaries = [...], weights = [[...]]    relaxed

Policy files reuse the [policy] table stand-alone. Floats are written with
`repr`, which round-trips exactly; reading a written config reproduces it
field for field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml

from . import expressions as ex
from .controls import ActionSet, OpenLoopPolicy, RelaxedControlPolicy
from .cost import CostSet
from .dynamics import CoefficientSet, SimulationConfig, TrajectoryBundle
from .errors import ConfigError, ToolkitError

__all__ = [
    "ModelConfig", "load_config", "dump_config",
    "load_policy", "dump_policy", "policy_from_table",
    "format_float", "csv_text", "trajectories_csv", "moments_csv", "cost_csv",
]


# --------------------------------------------------------------------------
# model configuration

@dataclass(frozen=True)
class ModelConfig:
    drift: str
    diffusion: str
    running_cost: str
    reflection_cost: str
    terminal_cost: str
    horizon: float
    actions: tuple | None = None
    interval: tuple | None = None
    grid: int | None = None
    steps: int = 100
    particles: int = 100
    seed: int = 0
    initial: object = 0.0  # float or tuple of floats
    c1: float | None = None
    c2: float | None = None
    c3: float | None = None
    policy: dict | None = None  # raw [policy] table, if present

    def __post_init__(self):
        if self.actions is None:
            if self.interval is None:
                raise ConfigError("give either explicit actions or interval+grid")
            if self.grid is None or self.grid < 2:
                raise ConfigError("interval action sets need grid >= 2")
        elif self.grid is not None:
            raise ConfigError("explicit actions and grid are mutually exclusive")
        if self.horizon <= 0.0:
            raise ConfigError("horizon must be > 0")
        for name, src, allowed in self._expression_slots():
            try:
                ex.parse(src, allowed)
            except ToolkitError as err:
                raise ConfigError(f"{name}: {err}") from err

    def _expression_slots(self):
        return (
            ("drift", self.drift, ex.DRIFT_VARS),
            ("diffusion", self.diffusion, ex.DIFFUSION_VARS),
            ("running_cost", self.running_cost, ex.RUNNING_COST_VARS),
            ("reflection_cost", self.reflection_cost, ex.REFLECTION_COST_VARS),
            ("terminal_cost", self.terminal_cost, ex.TERMINAL_COST_VARS),
        )

    def action_set(self) -> ActionSet:
        if self.actions is not None:
            return ActionSet(points=np.asarray(self.actions), interval=self.interval)
        lo, hi = self.interval
        return ActionSet(points=np.linspace(lo, hi, self.grid), interval=self.interval)

    def coefficients(self) -> CoefficientSet:
        b = _compile(self.drift, ex.DRIFT_VARS, ("t", "x", "m1", "m2", "a"))
        sigma = _compile(self.diffusion, ex.DIFFUSION_VARS, ("t", "x", "m1", "m2"))
        return CoefficientSet(
            b=b, sigma=sigma, declared_growth_c1=self.c1, declared_lipschitz_c2=self.c2
        )

    def costs(self) -> CostSet:
        f = _compile(self.running_cost, ex.RUNNING_COST_VARS, ("t", "x", "m1", "m2", "a"))
        c = _compile(self.reflection_cost, ex.REFLECTION_COST_VARS, ("t", "x", "m1", "m2"))
        g = _compile(self.terminal_cost, ex.TERMINAL_COST_VARS, ("x", "m1", "m2"))
        return CostSet(f=f, c=c, g=g, declared_growth_c3=self.c3)

    def simulation(self, **overrides) -> SimulationConfig:
        values = dict(
            horizon=self.horizon, steps=self.steps, particles=self.particles,
            seed=self.seed, initial=self.initial,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        initial = values["initial"]
        if isinstance(initial, tuple):
            initial = np.asarray(initial)
        return SimulationConfig(
            horizon=float(values["horizon"]), steps=int(values["steps"]),
            particles=int(values["particles"]), seed=int(values["seed"]),
            initial=initial, thread_hint=overrides.get("thread_hint"),
        )

    def default_policy(self):
        table = self.policy if self.policy is not None else {
            "kind": "constant", "action": float(self.action_set().points[0]),
        }
        return policy_from_table(table, self.action_set(), self.horizon)


def _compile(source, allowed, argnames):
    tree = ex.parse(source, allowed)

    def call(*args):
        return ex.evaluate(tree, dict(zip(argnames, args)))

    call.source = source
    return call


def _require(table, key, kinds, where):
    if key not in table:
        raise ConfigError(f"missing key {key!r} in [{where}]")
    value = table[key]
    if not isinstance(value, kinds):
        raise ConfigError(f"key {key!r} in [{where}] has the wrong type")
    return value


def load_config(text: str) -> ModelConfig:
    """Parse a TOML model config, validating expressions and types."""
    try:
        doc = _toml.loads(text)
    except _toml.TOMLDecodeError as err:
        raise ConfigError(f"invalid TOML: {err}") from err
    if "model" not in doc:
        raise ConfigError("missing [model] section")
    model = doc["model"]
    sim = doc.get("simulation", {})
    consts = doc.get("constants", {})

    actions = interval = grid = None
    if "actions" in model:
        raw = _require(model, "actions", list, "model")
        actions = tuple(float(v) for v in raw)
        if "interval" in model:
            iv = model["interval"]
            interval = (float(iv[0]), float(iv[1]))
    elif "interval" in model:
        iv = _require(model, "interval", list, "model")
        interval = (float(iv[0]), float(iv[1]))
        grid = int(_require(model, "grid", int, "model"))
    else:
        raise ConfigError("[model] needs actions or interval+grid")

    initial = sim.get("initial", 0.0)
    if isinstance(initial, list):
        initial = tuple(float(v) for v in initial)
    else:
        initial = float(initial)

    return ModelConfig(
        drift=_require(model, "drift", str, "model"),
        diffusion=_require(model, "diffusion", str, "model"),
        running_cost=_require(model, "running_cost", str, "model"),
        reflection_cost=_require(model, "reflection_cost", str, "model"),
        terminal_cost=_require(model, "terminal_cost", str, "model"),
        horizon=float(_require(model, "horizon", (int, float), "model")),
        actions=actions, interval=interval, grid=grid,
        steps=int(sim.get("steps", 100)),
        particles=int(sim.get("particles", 100)),
        seed=int(sim.get("seed", 0)),
        initial=initial,
        c1=None if "c1" not in consts else float(consts["c1"]),
        c2=None if "c2" not in consts else float(consts["c2"]),
        c3=None if "c3" not in consts else float(consts["c3"]),
        policy=doc.get("policy"),
    )


def format_float(value: float) -> str:
    """Shortest decimal that round-trips the double exactly."""
    return repr(float(value))


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigError(f"cannot serialise {value!r}")


def dump_config(cfg: ModelConfig) -> str:
    """Deterministic TOML text for a model config."""
    lines = ["[model]"]
    if cfg.actions is not None:
        lines.append(f"actions = {_toml_value([float(v) for v in cfg.actions])}")
        if cfg.interval is not None:
            lines.append(f"interval = {_toml_value(list(cfg.interval))}")
    else:
        lines.append(f"interval = {_toml_value(list(cfg.interval))}")
        lines.append(f"grid = {cfg.grid}")
    for name, src, _ in cfg._expression_slots():
        lines.append(f"{name} = {_toml_value(src)}")
    lines.append(f"horizon = {format_float(cfg.horizon)}")
    lines += ["", "[simulation]"]
    lines.append(f"steps = {cfg.steps}")
    lines.append(f"particles = {cfg.particles}")
    lines.append(f"seed = {cfg.seed}")
    if isinstance(cfg.initial, tuple):
        lines.append(f"initial = {_toml_value(list(cfg.initial))}")
    else:
        lines.append(f"initial = {format_float(cfg.initial)}")
    consts = [(k, getattr(cfg, k)) for k in ("c1", "c2", "c3") if getattr(cfg, k) is not None]
    if consts:
        lines += ["", "[constants]"]
        lines += [f"{k} = {format_float(v)}" for k, v in consts]
    if cfg.policy is not None:
        lines += ["", "[policy]"] + _policy_table_lines(cfg.policy)
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# policies

def policy_from_table(table: dict, action_set: ActionSet, horizon: float):
    kind = table.get("kind")
    if kind == "constant":
        action = float(_require(table, "action", (int, float), "policy"))
        return OpenLoopPolicy(
            action_set, np.array([0.0, horizon]), np.array([action])
        )
    if kind == "open-loop":
        return OpenLoopPolicy(
            action_set,
            np.asarray(_require(table, "boundaries", list, "policy"), dtype=float),
            np.asarray(_require(table, "actions", list, "policy"), dtype=float),
        )
    if kind == "relaxed":
        return RelaxedControlPolicy(
            action_set,
            np.asarray(_require(table, "boundaries", list, "policy"), dtype=float),
            np.asarray(_require(table, "weights", list, "policy"), dtype=float),
        )
    raise ConfigError("policy kind must be constant, open-loop or relaxed")


def load_policy(text: str, action_set: ActionSet, horizon: float):
    try:
        doc = _toml.loads(text)
    except _toml.TOMLDecodeError as err:
        raise ConfigError(f"invalid TOML: {err}") from err
    if "policy" not in doc:
        raise ConfigError("missing [policy] section")
    return policy_from_table(doc["policy"], action_set, horizon)


def _policy_table_lines(table: dict) -> list:
    lines = []
    for key in ("kind", "action", "boundaries", "actions", "weights"):
        if key in table:
            lines.append(f"{key} = {_toml_value(table[key])}")
    return lines


def dump_policy(policy) -> str:
    if isinstance(policy, OpenLoopPolicy):
        table = {
            "kind": "open-loop",
            "boundaries": [float(v) for v in policy.boundaries],
            "actions": [float(v) for v in policy.actions],
        }
    elif isinstance(policy, RelaxedControlPolicy):
        table = {
            "kind": "relaxed",
            "boundaries": [float(v) for v in policy.boundaries],
            "weights": [[float(v) for v in row] for row in policy.weights],
        }
    else:
        raise ConfigError(f"cannot serialise policy {policy!r}")
    return "\n".join(["[policy]"] + _policy_table_lines(table)) + "\n"


# --------------------------------------------------------------------------
# CSV text

def csv_text(header, rows) -> str:
    def cell(v):
        if isinstance(v, (float, np.floating)):
            return format_float(v)
        return str(v)

    lines = [",".join(header)]
    lines += [",".join(cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def trajectories_csv(bundle: TrajectoryBundle) -> str:
    """One row per (particle, node): t, i, x, k."""
    rows = []
    for i in range(bundle.particles):
        for s in range(bundle.steps + 1):
            rows.append((bundle.times[s], i, bundle.x[i, s], bundle.k[i, s]))
    return csv_text(("t", "i", "x", "k"), rows)


def moments_csv(bundle: TrajectoryBundle) -> str:
    from .dynamics import mean_field_moment_curve

    curve = mean_field_moment_curve(bundle)
    return csv_text(("t", "m1", "m2"), [tuple(row) for row in curve])


def cost_csv(rows) -> str:
    """Rows of (label, CostEstimate)."""
    out = [
        (label, est.value, est.stderr, est.running, est.reflection, est.terminal)
        for label, est in rows
    ]
    return csv_text(("label", "J", "stderr", "running", "reflection", "terminal"), out)
