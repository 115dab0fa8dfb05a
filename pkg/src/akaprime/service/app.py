"""FastAPI service wrapping the simulator core.

The service is stateless and filesystem-free: subscriber tables and
scenarios travel inline in request bodies, traces come back as JSON
lines. The CLI is a thin client of these endpoints.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import harness, provisioning
from ..harness import CompareError, ScenarioConfigError
from ..provisioning import ProvisioningError
from .schemas import (
    CompareRequest,
    CompareResponse,
    ProvisionRequest,
    ProvisionResponse,
    ReplayRequest,
    ReplayResponse,
    RunRequest,
    RunResponse,
)


def _scenario(doc: dict, subscribers: dict,
              seed_override: str | None = None) -> harness.Scenario:
    try:
        store = provisioning.store_from_dict(subscribers)
        sc = harness.scenario_from_dict(doc, store)
        if seed_override:
            sc.rng_seed = bytes.fromhex(seed_override)
        return sc
    except (ScenarioConfigError, ProvisioningError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(title="akaprime", version="0.1.0",
                  description="5G EAP-AKA' authentication flow simulator")

    @app.post("/provision", response_model=ProvisionResponse)
    def provision(req: ProvisionRequest) -> ProvisionResponse:
        try:
            store = provisioning.generate_subscribers(
                req.count, bytes.fromhex(req.seed_hex), mcc=req.mcc,
                mnc=req.mnc)
        except (ProvisioningError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return ProvisionResponse(subscribers=provisioning.store_to_dict(store))

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest) -> RunResponse:
        sc = _scenario(req.scenario, req.subscribers, req.seed_hex_override)
        result = harness.run_scenario(sc)
        return RunResponse(
            outcome=result.outcome.value,
            expected_outcome=sc.expected_outcome.value,
            matched=result.outcome is sc.expected_outcome,
            ticks=result.stats["ticks"],
            message_count=result.stats["message_count"],
            payload_bytes=result.stats["payload_bytes"],
            trace=[ev.to_json() for ev in result.trace])

    @app.post("/compare", response_model=CompareResponse)
    def compare(req: CompareRequest) -> CompareResponse:
        sc = _scenario(req.scenario, req.subscribers)
        try:
            report = harness.compare_methods(sc)
        except CompareError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return CompareResponse(report=report)

    @app.post("/replay", response_model=ReplayResponse)
    def replay(req: ReplayRequest) -> ReplayResponse:
        sc = _scenario(req.scenario, req.subscribers)
        result = harness.run_scenario(sc)
        fresh = [ev.to_json() for ev in result.trace]
        return ReplayResponse(
            trace_matches=fresh == req.trace,
            outcome=result.outcome.value,
            expected_outcome=sc.expected_outcome.value,
            outcome_matched=result.outcome is sc.expected_outcome)

    return app


app = create_app()
