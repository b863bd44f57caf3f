"""Run configuration.

Precedence is explicit flags > ``RDDL_*`` environment variables > defaults.
"""

from __future__ import annotations

import os
from typing import Any, Dict, Mapping, Optional

from pydantic import BaseModel, Field

from .logger import get_logger

log = get_logger(__name__)


class RunConfig(BaseModel):
    model_config = {"frozen": True}

    step: float = Field(1e-4, gt=0, description="RK4 step size")
    horizon: float = Field(10.0, ge=0, description="Integration horizon in time units")
    samples: int = Field(500, gt=0, description="Falsifier initial-state samples")
    seed: int = Field(42, description="Seed for every random draw")
    tolerance: float = Field(1e-6, gt=0, description="Equality tolerance for numeric checks")
    strict: bool = Field(False, description="Report trusted obligations individually")
    grid: int = Field(20, gt=0, description="Lattice points per axis for simulation checks")
    box_radius: float = Field(10.0, gt=0, description="Default sampling interval half-width")
    refuter_points: int = Field(10_000, gt=0, description="Sampling refuter budget")
    slack: float = Field(1e-9, ge=0, description="Slack for strict/nonstrict boundaries")

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
        env = os.environ if environ is None else environ
        found: Dict[str, Any] = {}
        for name in cls.model_fields:
            key = f"RDDL_{name.upper()}"
            if key in env:
                found[name] = env[key]
                log.debug("Config %s from %s=%s", name, key, env[key])
        return found

    @classmethod
    def resolve(
        cls,
        overrides: Optional[Mapping[str, Any]] = None,
        environ: Optional[Mapping[str, str]] = None,
    ) -> "RunConfig":
        data = cls.from_env(environ)
        for key, value in (overrides or {}).items():
            if value is not None:
                data[key] = value
        return cls.model_validate(data)
