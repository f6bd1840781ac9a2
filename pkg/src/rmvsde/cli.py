"""Command-line driver: a thin client over the HTTP service.

Without --server the CLI mounts the service in process, so it works
standalone while still exercising the exact request/response surface a
remote deployment would. All outputs come back from the service as file
text and are written verbatim into --out.

Exit codes: 0 success, 1 selftest/property failure, 2 input error,
3 numerical blow-up.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .fileio import format_float


def _print_kv(summary: dict):
    for key in summary:
        value = summary[key]
        if isinstance(value, float):
            value = format_float(value)
        click.echo(f"{key} = {value}")


class ServiceClient:
    """POSTs to a remote server if given, else to an in-process app."""

    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # starlette warns about its own test client dependency
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import app

            self._client = TestClient(app)

    def post(self, path: str, payload: dict) -> dict:
        resp = self._client.post(path, json=payload)
        if resp.status_code == 200:
            return resp.json()
        detail = {}
        try:
            detail = resp.json().get("detail", {})
        except ValueError:
            pass
        if isinstance(detail, dict) and detail.get("kind") == "blowup":
            step = detail.get("step")
            suffix = f" (step {step})" if step is not None else ""
            click.echo(f"error: numerical blow-up{suffix}: {detail.get('message')}", err=True)
            sys.exit(3)
        message = detail.get("message") if isinstance(detail, dict) else detail
        click.echo(f"error: {message or resp.text}", err=True)
        sys.exit(2)


def _read_text(path, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as err:
        click.echo(f"error: cannot read {what} {path}: {err}", err=True)
        sys.exit(2)


def _write_files(out_dir, files: dict):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
        click.echo(f"wrote {out / name}")


@click.group()
@click.option("--config", type=click.Path(), default=None, help="Model config (TOML).")
@click.option("--seed", type=int, default=None, help="Override the simulation seed.")
@click.option("--steps", type=int, default=None, help="Override the step count.")
@click.option("--particles", type=int, default=None, help="Override the particle count.")
@click.option("--threads", type=int, default=None, help="Worker thread hint.")
@click.option("--out", type=click.Path(), default=".", help="Output directory.")
@click.option("--common-rng/--no-common-rng", default=True,
              help="Reuse one noise seed across comparative evaluations.")
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
@click.pass_context
def main(ctx, config, seed, steps, particles, threads, out, common_rng, server):
    """Simulation and control optimization for reflected mean-field SDEs."""
    ctx.ensure_object(dict)
    ctx.obj.update(
        config=config, out=out, common_rng=common_rng,
        client=ServiceClient(server),
        overrides={"seed": seed, "steps": steps, "particles": particles, "threads": threads},
    )


def _config_payload(ctx) -> str:
    path = ctx.obj["config"]
    if path is None:
        click.echo("error: --config is required for this command", err=True)
        sys.exit(2)
    return _read_text(path, "config")


@main.command()
@click.option("--policy", type=click.Path(), default=None, help="Policy file (TOML).")
@click.pass_context
def simulate(ctx, policy):
    """Simulate the configured model and write trajectory/moment CSVs."""
    payload = {
        "config_toml": _config_payload(ctx),
        "policy_toml": None if policy is None else _read_text(policy, "policy"),
        "overrides": ctx.obj["overrides"],
    }
    result = ctx.obj["client"].post("/simulate", payload)
    _write_files(ctx.obj["out"], result["files"])
    _print_kv(result["summary"])


@main.command()
@click.option("--policy", type=click.Path(), default=None, help="Policy file (TOML).")
@click.pass_context
def cost(ctx, policy):
    """Estimate the cost of a policy under the configured model."""
    payload = {
        "config_toml": _config_payload(ctx),
        "policy_toml": None if policy is None else _read_text(policy, "policy"),
        "overrides": ctx.obj["overrides"],
    }
    result = ctx.obj["client"].post("/cost", payload)
    _write_files(ctx.obj["out"], result["files"])
    _print_kv(result["summary"])


@main.command()
@click.option("--policy", type=click.Path(), required=False, default=None,
              help="Relaxed policy file (defaults to the config's policy).")
@click.option("--levels", default="1,2,4,8,16,32", show_default=True,
              help="Comma-separated chattering levels.")
@click.pass_context
def chatter(ctx, policy, levels):
    """Sweep chattering levels: strict vs relaxed cost and weak gap."""
    try:
        n_list = [int(v) for v in levels.split(",") if v.strip()]
    except ValueError:
        click.echo(f"error: bad --levels {levels!r}", err=True)
        sys.exit(2)
    payload = {
        "config_toml": _config_payload(ctx),
        "policy_toml": None if policy is None else _read_text(policy, "policy"),
        "levels": n_list,
        "common_rng": ctx.obj["common_rng"],
        "overrides": ctx.obj["overrides"],
    }
    result = ctx.obj["client"].post("/chatter", payload)
    _write_files(ctx.obj["out"], result["files"])
    for row in result["summary"]["rows"]:
        n, j_strict, j_relaxed, gap, wgap = row
        click.echo(
            f"n={n} J_strict={format_float(j_strict)} J_relaxed={format_float(j_relaxed)} "
            f"gap={format_float(gap)} weak_gap={format_float(wgap)}"
        )


@main.command()
@click.option("--cells", type=int, default=1, show_default=True)
@click.option("--budget", type=int, default=100, show_default=True)
@click.option("--method", type=click.Choice(["random-search", "cross-entropy", "coordinate-descent"]),
              default="cross-entropy", show_default=True)
@click.option("--search-seed", type=int, default=0, show_default=True)
@click.option("--elite-fraction", type=float, default=0.2, show_default=True)
@click.option("--strictify-n", type=int, default=16, show_default=True)
@click.pass_context
def optimize(ctx, cells, budget, method, search_seed, elite_fraction, strictify_n):
    """Search for a near-optimal relaxed control and strictify it."""
    payload = {
        "config_toml": _config_payload(ctx),
        "control_cells": cells,
        "budget": budget,
        "method": method,
        "search_seed": search_seed,
        "elite_fraction": elite_fraction,
        "strictify_n": strictify_n,
        "overrides": ctx.obj["overrides"],
    }
    result = ctx.obj["client"].post("/optimize", payload)
    _write_files(ctx.obj["out"], result["files"])
    _print_kv(result["summary"])


@main.command()
@click.option("--n-max", type=int, default=32, show_default=True,
              help="Largest (power-of-two) block count to evaluate.")
@click.pass_context
def example3(ctx, n_max):
    """Reproduce the built-in bang-bang benchmark and its convergence table."""
    result = ctx.obj["client"].post("/example3", {"n_max": n_max})
    _write_files(ctx.obj["out"], result["files"])
    s = result["summary"]
    click.echo(f"relaxed_value = {format_float(s['relaxed_value'])}")
    click.echo(f"relaxed_stderr = {format_float(s['relaxed_stderr'])}")
    for n, value, predicted, err in s["table"]:
        click.echo(
            f"n={n} J_strict={format_float(value)} predicted={format_float(predicted)} "
            f"abs_error={format_float(err)}"
        )
    witness = s["roxin_witness"]
    click.echo(f"roxin_convex = {s['roxin_convex']}")
    if witness is not None:
        click.echo(f"roxin_witness = ({format_float(witness[0])}, {format_float(witness[1])})")
    click.echo(
        f"selection: action={format_float(s['selection_action'])} "
        f"residual={format_float(s['selection_residual'])} "
        f"representable={s['selection_representable']}"
    )


@main.command()
@click.option("--tolerance", type=float, default=1e-6, show_default=True)
@click.pass_context
def roxin(ctx, tolerance):
    """Probe convexity of the drift/cost image and report strict selections."""
    payload = {"config_toml": _config_payload(ctx), "tolerance": tolerance}
    result = ctx.obj["client"].post("/roxin", payload)
    _write_files(ctx.obj["out"], result["files"])
    s = result["summary"]
    click.echo(f"convex = {s['convex']}")
    if s["witness"] is not None:
        pair = s["witness"]["pair"]
        click.echo(f"witness_pair = ({format_float(pair[0])}, {format_float(pair[1])})")


@main.command()
@click.option("--tamper", default=None, hidden=True,
              help="Test hook: run the named property with an impossible tolerance.")
@click.pass_context
def selftest(ctx, tamper):
    """Run the reduced-scale invariant suites of every module."""
    result = ctx.obj["client"].post("/selftest", {"tamper": tamper})
    for entry in result["results"]:
        status = "ok" if entry["ok"] else "FAIL"
        click.echo(f"{status:4s} {entry['name']}: {entry['detail']}")
    if not result["ok"]:
        first = next(e["name"] for e in result["results"] if not e["ok"])
        click.echo(f"selftest failed: {first}", err=True)
        sys.exit(1)
    click.echo("selftest passed")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service (requires uvicorn)."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
