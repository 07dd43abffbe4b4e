"""Pydantic request/response models for the tuning service."""

from __future__ import annotations

from typing import Optional, Union

from pydantic import BaseModel, Field

ConfigValue = Union[int, bool, str]


class PipelineSpec(BaseModel):
    stages: int = 12
    sram_words_per_stage: int = 4096
    hash_units_per_stage: int = 6
    alu_slots_per_stage: int = 8


class GenerateRequest(BaseModel):
    kind: str = "zipf_requests"
    preset: str = "uniform"
    keys: int = 10_000
    events: int = 100_000
    seed: int = 0
    spacing_ns: int = 100
    delay_mu: float = 10.0
    delay_sigma: float = 1.5
    out_path: str


class GenerateResponse(BaseModel):
    path: str
    events: int
    span_ns: int


class PreprocessRequest(BaseModel):
    app: str
    pipeline: PipelineSpec = Field(default_factory=PipelineSpec)
    heuristic: str = "greedy"
    out_csv: Optional[str] = None


class PreprocessResponse(BaseModel):
    app: str
    heuristic: str
    space_size: int
    heuristic_calls: int
    grid_size: int
    reduction_pct: float
    csv_path: Optional[str] = None


class SimulateRequest(BaseModel):
    app: str
    config: dict[str, ConfigValue]
    trace_path: str
    seed: int = 0
    objective: Optional[str] = None
    recirc_delay_ns: int = 1000
    sink_out: Optional[str] = None


class SimulateResponse(BaseModel):
    app: str
    score: float
    events: int
    emitted: int
    sink_path: Optional[str] = None


class OptimizeRequest(BaseModel):
    app: str
    strategy: str = "bayesian"
    budget_secs: float = 120.0
    seed: int = 0
    train_path: str
    test_path: Optional[str] = None
    objective: Optional[str] = None
    pipeline: PipelineSpec = Field(default_factory=PipelineSpec)
    recirc_delay_ns: int = 1000
    workers: int = 1


class OptimizeResponse(BaseModel):
    report: dict


class ErrorBody(BaseModel):
    error: str  # "usage" or "domain"
    detail: str
