# latent_composite/config.py
"""
Analysis configuration: a flat `key = value` file validated into AnalysisConfig,
plus process settings read from the environment (python-dotenv).

Grammar: one assignment per line, `#` starts a comment, blank lines are
ignored. Values are numbers, true/false, none, or bare words.
"""
from __future__ import annotations

import os
import re
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from latent_composite.core.records import ResponderRule
from latent_composite.inference import QmcSettings
from latent_composite.model.fit import FitOptions

_LINE = re.compile(r"^([a-z][a-z0-9_]*)\s*=\s*(.*?)\s*$")


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.key = key


class AnalysisConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    # responder rule
    theta1: float = -4.0
    theta2: float = -0.6
    w_max: int = Field(default=3, ge=1)
    theta4_level: Optional[Literal[0, 1]] = 0
    k3: int = Field(default=5, ge=2)

    # integration budgets
    qmc_points: int = Field(default=20_000, ge=1)
    qmc_shifts: int = Field(default=8, ge=1)
    qmc_seed: int = 20240607
    # finite-difference Jacobian of the latent effects only
    jacobian_qmc_points: int = Field(default=2048, ge=1)

    # latent fit
    max_iter: int = Field(default=500, ge=1)
    gtol: float = Field(default=1e-6, gt=0)
    ftol: float = Field(default=1e-10, ge=0)
    min_patients: int = Field(default=30, ge=1)
    fit_seed: int = 0

    # augmented binary
    augbin_retain: Literal["y1", "y2"] = "y1"
    augbin_condition_on_retained: bool = False

    # bootstrap
    n_boot: int = Field(default=1000, ge=1)
    boot_seed: int = 1
    boot_stratify: bool = False

    alpha: float = Field(default=0.05, gt=0, lt=1)
    gof_max_nodes: int = Field(default=96, ge=8)

    def rule(self) -> ResponderRule:
        return ResponderRule(
            theta1=self.theta1, theta2=self.theta2, w_max=self.w_max, theta4_level=self.theta4_level
        )

    def fit_options(self) -> FitOptions:
        return FitOptions(
            max_iter=self.max_iter,
            gtol=self.gtol,
            ftol=self.ftol,
            min_patients=self.min_patients,
            seed=self.fit_seed,
        )

    def qmc(self) -> QmcSettings:
        return QmcSettings(n_points=self.qmc_points, n_shifts=self.qmc_shifts, seed=self.qmc_seed)

    def jacobian_qmc(self) -> QmcSettings:
        return QmcSettings(n_points=self.jacobian_qmc_points, n_shifts=self.qmc_shifts, seed=self.qmc_seed)


def _coerce(raw: str):
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    if low == "none":
        return None
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_config_text(text: str) -> AnalysisConfig:
    values: dict = {}
    lines: dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        m = _LINE.match(body)
        if not m:
            raise ConfigError(f"expected `key = value`, got {body!r}", line=number)
        key, value = m.group(1), m.group(2)
        if key not in AnalysisConfig.model_fields:
            raise ConfigError(f"unknown key {key!r}", line=number, key=key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", line=number, key=key)
        if value == "":
            raise ConfigError(f"missing value for {key!r}", line=number, key=key)
        values[key] = _coerce(value)
        lines[key] = number

    try:
        return AnalysisConfig(**values)
    except ValidationError as e:
        err = e.errors()[0]
        key = str(err["loc"][0]) if err.get("loc") else None
        raise ConfigError(err["msg"], line=lines.get(key), key=key) from None


def load_config(path: Optional[str | Path]) -> AnalysisConfig:
    if path is None:
        return AnalysisConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from None
    return parse_config_text(text)


class EnvSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    database_url: str = "sqlite:///latent_composite.db"
    threads: int = Field(default=1, ge=1)
    log_level: str = "WARNING"


def env_settings() -> EnvSettings:
    """Process settings from LATCOMP_* variables (call load_dotenv() first)."""
    threads = os.getenv("LATCOMP_THREADS")
    return EnvSettings(
        database_url=os.getenv("LATCOMP_DATABASE_URL", "sqlite:///latent_composite.db"),
        threads=int(threads) if threads else (os.cpu_count() or 1),
        log_level=os.getenv("LATCOMP_LOG_LEVEL", "WARNING").upper(),
    )
