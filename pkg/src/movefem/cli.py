"""Command-line client for the solver service.

Every subcommand issues an HTTP request: against ``--server URL`` when given,
otherwise against an in-process instance of the service mounted over an ASGI
transport, so no daemon is needed for local runs.  CSV payloads returned by
the service are written to the paths the user asked for.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path

import click
import httpx

RICHARDSON_EPS_DEFAULT = 0.5857864376269049


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=payload)

    async def _go() -> httpx.Response:
        from .service.app import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://movefem", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    return asyncio.run(_go())


def _fail(response: httpx.Response) -> None:
    try:
        detail = response.json().get("detail")
    except json.JSONDecodeError:
        detail = response.text
    if isinstance(detail, dict):
        code = detail.get("code", "")
        message = detail.get("message", "")
    else:
        code, message = "", str(detail)
    click.echo(f"error ({response.status_code}): {message or code}", err=True)
    if response.status_code in (400, 422):
        sys.exit(2)
    sys.exit(3)


def _submit(server: str | None, path: str, payload: dict) -> dict:
    try:
        response = _post(server, path, payload)
    except httpx.HTTPError as exc:
        click.echo(f"cannot reach server: {exc}", err=True)
        sys.exit(2)
    if response.status_code != 200:
        _fail(response)
    return response.json()


def _write(path: str | None, text: str | None, label: str) -> None:
    if path and text is not None:
        Path(path).write_text(text)
        click.echo(f"wrote {label} to {path}")


def _common_options(fn):
    fn = click.option("--eps", type=float, default=RICHARDSON_EPS_DEFAULT,
                      show_default=True, help="intermediate time basis node")(fn)
    fn = click.option("--supg", type=float, default=0.0, show_default=True,
                      help="streamline-upwind coefficient (0 disables)")(fn)
    fn = click.option("--transfer", type=click.Choice(["interp", "l2"]),
                      default="interp", show_default=True)(fn)
    fn = click.option("--motion", type=click.Choice(["static", "char", "solvel"]),
                      default="static", show_default=True)(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="reserved; the solver is deterministic")(fn)
    return fn


@click.group()
@click.option("--server", default=None, envvar="MOVEFEM_SERVER",
              help="base URL of a running service; defaults to in-process execution")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Moving-mesh finite element experiments."""
    ctx.obj = server


@main.command()
@click.option("--problem", required=True, type=click.Choice(["conv1", "diff2", "burgers"]))
@click.option("--n", type=int, required=True, help="odd spatial node count")
@click.option("--m", type=int, required=True, help="number of time steps")
@click.option("--reynolds", type=float, default=100.0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="results CSV path")
@click.option("--dump-solution", type=click.Path(), default=None)
@click.option("--dump-mesh", type=click.Path(), default=None)
@_common_options
@click.pass_obj
def solve(server, problem, n, m, reynolds, out, dump_solution, dump_mesh,
          eps, supg, transfer, motion, seed) -> None:
    """Run one configuration and report final-time errors."""
    payload = {
        "problem": problem, "n": n, "m": m, "motion": motion,
        "transfer": transfer, "eps": eps, "supg": supg, "reynolds": reynolds,
        "include_solution": dump_solution is not None,
        "include_mesh": dump_mesh is not None,
        "seed": seed,
    }
    data = _submit(server, "/solve", payload)
    rec = data["record"]
    click.echo(
        f"{problem} n={n} m={m} motion={motion}: "
        f"l2={rec['l2_final']} h1={rec['h1_final']} cpu={rec['cpu_seconds']:.3f}s"
    )
    _write(out, data["results_csv"], "results")
    _write(dump_solution, data.get("solution_csv"), "solution dump")
    _write(dump_mesh, data.get("mesh_csv"), "mesh dump")


@main.command()
@click.option("--problem", required=True, type=click.Choice(["conv1", "diff2", "burgers"]))
@click.option("--n", "n_list", required=True, help="comma-separated node counts")
@click.option("--m", "m_list", required=True, help="comma-separated step counts")
@click.option("--reynolds", type=float, default=100.0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="results CSV path")
@click.option("--grid-out", type=click.Path(), default=None,
              help="raw comparison grid CSV path")
@_common_options
@click.pass_obj
def table(server, problem, n_list, m_list, reynolds, out, grid_out,
          eps, supg, transfer, motion, seed) -> None:
    """Moving-vs-static L2 error ratios over an (n, m) grid."""
    if motion == "static":
        motion = "char"  # a static-vs-static table is vacuous
    payload = {
        "problem": problem,
        "n_list": [int(v) for v in n_list.split(",")],
        "m_list": [int(v) for v in m_list.split(",")],
        "motion": motion, "transfer": transfer, "eps": eps, "supg": supg,
        "reynolds": reynolds, "seed": seed,
    }
    data = _submit(server, "/table", payload)
    for row in data["rows"]:
        if row["failure"]:
            click.echo(f"n={row['n']} m={row['m']}: FAILED {row['failure']}")
        else:
            click.echo(
                f"n={row['n']} m={row['m']}: ratio={row['ratio']:.6g} "
                f"(moving={row['l2_moving']:.6g}, static={row['l2_static']:.6g})"
            )
    _write(out, data["results_csv"], "results")
    _write(grid_out, data["grid_csv"], "comparison grid")


@main.command()
@click.option("--problem", required=True, type=click.Choice(["conv1", "diff2"]))
@click.option("--axis", required=True, type=click.Choice(["space", "time"]))
@click.option("--out", type=click.Path(), default=None)
@_common_options
@click.pass_obj
def convergence(server, problem, axis, out, eps, supg, transfer, motion, seed) -> None:
    """Observed order of accuracy under mesh or step refinement."""
    if motion == "static":
        motion = "char"
    payload = {"problem": problem, "axis": axis, "motion": motion,
               "transfer": transfer, "eps": eps, "seed": seed}
    data = _submit(server, "/convergence", payload)
    for s, e in zip(data["steps"], data["errors"]):
        click.echo(f"step={s:.6g} l2={e:.6g}")
    click.echo(f"slope={data['slope']:.4f}")
    _write(out, data["csv"], "convergence data")


@main.command()
@click.option("--reynolds", type=float, default=100.0, show_default=True)
@click.option("--n", type=int, required=True)
@click.option("--m", type=int, required=True)
@click.option("--out", type=click.Path(), default=None, help="summary CSV path")
@click.option("--dump-solution", type=click.Path(), default=None,
              help="per-scheme snapshots CSV")
@click.option("--dump-mesh", type=click.Path(), default=None,
              help="moving-mesh trajectory CSV")
@click.option("--seed", type=int, default=None)
@click.pass_obj
def burgers(server, reynolds, n, m, out, dump_solution, dump_mesh, seed) -> None:
    """Shock comparison: static Galerkin vs static SUPG vs moving mesh."""
    payload = {"reynolds": reynolds, "n": n, "m": m, "seed": seed}
    data = _submit(server, "/burgers", payload)
    click.echo(
        f"R={reynolds} n={n} m={m} (supg delta {data['supg_delta']}): "
        f"overshoot static={data['overshoot_static']:.6g} "
        f"supg={data['overshoot_supg']:.6g} moving={data['overshoot_moving']:.6g}"
    )
    click.echo(
        f"front at x={data['front_position']:.4f}; min element near front "
        f"{data['min_front_element']:.6g} vs mean {data['mean_element']:.6g}"
    )
    if out:
        lines = [
            "reynolds,n,m,supg_delta,overshoot_static,overshoot_supg,"
            "overshoot_moving,front_position,min_front_element,mean_element",
            ",".join(
                format(data[k], ".12g") if isinstance(data[k], float) else str(data[k])
                for k in (
                    "reynolds", "n", "m", "supg_delta", "overshoot_static",
                    "overshoot_supg", "overshoot_moving", "front_position",
                    "min_front_element", "mean_element",
                )
            ),
        ]
        Path(out).write_text("\n".join(lines) + "\n")
        click.echo(f"wrote summary to {out}")
    _write(dump_solution, data.get("snapshots_csv"), "snapshots")
    _write(dump_mesh, data.get("mesh_csv"), "mesh dump")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8711, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the solver service under uvicorn."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
