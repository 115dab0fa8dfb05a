"""Pydantic request/response models for the simulator service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class ProvisionRequest(BaseModel):
    count: int = Field(ge=1)
    seed_hex: str
    mcc: str = "001"
    mnc: str = "01"


class ProvisionResponse(BaseModel):
    subscribers: dict


class RunRequest(BaseModel):
    scenario: dict
    subscribers: dict
    seed_hex_override: str | None = None


class RunResponse(BaseModel):
    outcome: str
    expected_outcome: str
    matched: bool
    ticks: int
    message_count: int
    payload_bytes: int
    trace: list[str]


class CompareRequest(BaseModel):
    scenario: dict
    subscribers: dict


class CompareResponse(BaseModel):
    report: dict


class ReplayRequest(BaseModel):
    scenario: dict
    subscribers: dict
    trace: list[str]


class ReplayResponse(BaseModel):
    trace_matches: bool
    outcome: str
    expected_outcome: str
    outcome_matched: bool
