"""Thin command-line client for the simulator service.

By default the CLI talks to an in-process instance of the FastAPI app,
so no server needs to be running; pass --server to target a remote one.
Exit codes: 0 expected-outcome match, 1 outcome mismatch, 2 config/IO
error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx
from fastapi.testclient import TestClient

from .service.app import create_app

EXIT_MISMATCH = 1
EXIT_CONFIG = 2


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server)
    return TestClient(create_app())


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_CONFIG)


def _post(client, path: str, body: dict) -> dict:
    resp = client.post(path, json=body)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        _fail(f"{path}: {detail}")
    return resp.json()


def _read_json(path: Path) -> dict:
    if not path.exists():
        _fail(f"file {path} not found")
    try:
        return json.loads(path.read_text())
    except ValueError as exc:
        _fail(f"cannot parse {path}: {exc}")


def _load_run_inputs(scenario_path: Path, subscribers_override: str | None):
    doc = _read_json(scenario_path)
    subs_ref = subscribers_override or doc.get("subscribers_file")
    if not subs_ref:
        _fail("scenario names no subscribers_file and no --subscribers given")
    subs_path = Path(subs_ref)
    if not subs_path.is_absolute():
        subs_path = scenario_path.parent / subs_path
    return doc, _read_json(subs_path)


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Remote service URL; default runs the app in-process.")
@click.pass_context
def main(ctx, server):
    """Desk-scale 5G EAP-AKA' authentication simulator."""
    ctx.obj = {"server": server}


@main.command()
@click.argument("count", type=int)
@click.option("--seed", envvar="AKAPRIME_SEED", required=True, metavar="HEX",
              help="Hex seed for deterministic credentials.")
@click.option("--out", required=True, type=click.Path(), metavar="PATH")
@click.option("--mcc", default="001")
@click.option("--mnc", default="01")
@click.pass_context
def provision(ctx, count, seed, out, mcc, mnc):
    """Write COUNT deterministic subscriber records to a JSON file."""
    with _client(ctx.obj["server"]) as client:
        data = _post(client, "/provision",
                     {"count": count, "seed_hex": seed, "mcc": mcc, "mnc": mnc})
    text = json.dumps(data["subscribers"], indent=2, sort_keys=True) + "\n"
    try:
        Path(out).write_text(text)
    except OSError as exc:
        _fail(f"cannot write {out}: {exc}")
    click.echo(f"wrote {count} subscribers to {out}")


@main.command()
@click.argument("scenario", type=click.Path())
@click.option("--subscribers", default=None, type=click.Path(),
              help="Override the scenario's subscribers_file.")
@click.option("--trace-out", default=None, type=click.Path(), metavar="PATH")
@click.option("--seed", envvar="AKAPRIME_SEED", default=None, metavar="HEX",
              help="Override the scenario rng_seed.")
@click.option("--verbose", is_flag=True)
@click.pass_context
def run(ctx, scenario, subscribers, trace_out, seed, verbose):
    """Execute one scenario; exit 0 iff the outcome matches expectations."""
    doc, subs = _load_run_inputs(Path(scenario), subscribers)
    with _client(ctx.obj["server"]) as client:
        data = _post(client, "/run", {"scenario": doc, "subscribers": subs,
                                      "seed_hex_override": seed})
    if trace_out:
        try:
            Path(trace_out).write_text("".join(l + "\n" for l in data["trace"]))
        except OSError as exc:
            _fail(f"cannot write {trace_out}: {exc}")
    if verbose:
        for line in data["trace"]:
            click.echo(line)
    click.echo(f"outcome={data['outcome']} expected={data['expected_outcome']} "
               f"ticks={data['ticks']} messages={data['message_count']} "
               f"bytes={data['payload_bytes']}")
    sys.exit(0 if data["matched"] else EXIT_MISMATCH)


@main.command()
@click.argument("scenario", type=click.Path())
@click.option("--subscribers", default=None, type=click.Path())
@click.pass_context
def compare(ctx, scenario, subscribers):
    """Run EAP-AKA' and 5G-AKA with one seed and report the differences."""
    doc, subs = _load_run_inputs(Path(scenario), subscribers)
    with _client(ctx.obj["server"]) as client:
        data = _post(client, "/compare",
                     {"scenario": doc, "subscribers": subs})
    report = data["report"]
    click.echo(f"imsi={report['imsi']} seed={report['rng_seed']}")
    for method, row in report["methods"].items():
        click.echo(f"{method}: outcome={row['outcome']} "
                   f"messages={row['message_count']} "
                   f"bytes={row['payload_bytes']} "
                   f"av={row['av_fingerprint']} "
                   f"k_ausf={row['k_ausf_fingerprint']} "
                   f"k_seaf={row['k_seaf_fingerprint']}")


@main.command()
@click.argument("scenario", type=click.Path())
@click.option("--trace", "trace_path", required=True, type=click.Path(),
              help="Previously written trace file to check against.")
@click.option("--subscribers", default=None, type=click.Path())
@click.pass_context
def replay(ctx, scenario, trace_path, subscribers):
    """Re-run a scenario and verify it reproduces a stored trace."""
    doc, subs = _load_run_inputs(Path(scenario), subscribers)
    stored = Path(trace_path)
    if not stored.exists():
        _fail(f"trace file {stored} not found")
    lines = [l for l in stored.read_text().splitlines() if l]
    with _client(ctx.obj["server"]) as client:
        data = _post(client, "/replay", {"scenario": doc, "subscribers": subs,
                                         "trace": lines})
    click.echo(f"trace_matches={data['trace_matches']} "
               f"outcome={data['outcome']} "
               f"outcome_matched={data['outcome_matched']}")
    ok = data["trace_matches"] and data["outcome_matched"]
    sys.exit(0 if ok else EXIT_MISMATCH)


if __name__ == "__main__":
    main()
