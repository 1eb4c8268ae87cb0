"""Request/response models for the location-provider service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

Backend = Literal["RADAR", "PBL"]


class LocateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    observations: dict[str, float] = Field(min_length=1)
    backend: Backend = "RADAR"


class BundleRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    session_id: str = ""
    step: int = Field(0, ge=0)
    sets: list[dict[str, float]] = Field(min_length=1)
    backend: Backend = "RADAR"


class ResultRecord(BaseModel):
    session_id: str
    step: int
    set_index: int
    x: Optional[float] = None
    y: Optional[float] = None
    score: Optional[float] = None
    status: Literal["ok", "unlocatable"]


class BundleResponse(BaseModel):
    results: list[ResultRecord]


class Health(BaseModel):
    status: str = "ok"
    calibration_points: int
    aps: int
    backends: list[str]
