#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Pydantic models for run configuration validation
#
"""
Pydantic models for run configuration validation
"""

import math
import re
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from domain.ranking import ScoringMode, DEFAULT_ALPHA


def sanitize_tag(value: str) -> str:
    """Make a value safe for the `{dataset}.{stage}.{tag}.{ext}` naming scheme."""
    cleaned = re.sub(r"[^A-Za-z0-9_-]+", "-", value).strip("-")
    return cleaned or "model"


class RetryPolicy(BaseModel):
    """Retry behaviour for transient backend failures"""
    max_attempts: int = Field(default=3, ge=1)
    backoff_base_seconds: float = Field(default=1.0, ge=0)
    backoff_max_seconds: float = Field(default=30.0, ge=0)
    retry_statuses: list[int] = [408, 429, 500, 502, 503, 504]


class BackendConfig(BaseModel):
    """One chat-completion endpoint and model"""
    kind: Literal["openai", "scripted"] = "openai"
    endpoint: str = "http://localhost:8000"
    model: str
    name: Optional[str] = None  # used in file names, defaults to the model id
    api_key_env: Optional[str] = "OPENAI_API_KEY"
    max_in_flight: int = Field(default=8, ge=1)
    timeout_seconds: float = Field(default=120.0, gt=0)
    retry: RetryPolicy = RetryPolicy()
    script: Optional[Path] = None  # scripted backends only
    document_analysis: Optional["BackendConfig"] = None  # separate backend for document analysis

    @model_validator(mode="after")
    def check_script(self) -> "BackendConfig":
        if self.kind == "scripted":
            if self.script is None:
                raise ValueError("scripted backend requires 'script'")
            if not self.script.exists():
                raise ValueError(f"script not found: {self.script}")
        return self

    @property
    def tag(self) -> str:
        return sanitize_tag(self.name or self.model)


class DatasetConfig(BaseModel):
    """Paths of one BEIR-style dataset"""
    corpus: Path
    queries: Path
    qrels: Optional[Path] = None
    group: Optional[str] = None  # sub-datasets sharing a group are averaged first

    @model_validator(mode="after")
    def check_paths(self) -> "DatasetConfig":
        for label, path in (("corpus", self.corpus), ("queries", self.queries), ("qrels", self.qrels)):
            if path is not None and not path.exists():
                raise ValueError(f"{label} file not found: {path}")
        return self


class Bm25Settings(BaseModel):
    k1: float = Field(default=1.2, gt=0)
    b: float = Field(default=0.75, ge=0, le=1)
    first_stage_k: int = Field(default=100, ge=1)
    query_text: Literal["auto", "original", "augmented"] = "auto"


class PipelineSettings(BaseModel):
    template_dir: Path = Path("cfg/templates/default")
    query_name: str = "query"
    doc_name: str = "document"
    relation: str = "substantially helps answer"
    query_text: Literal["original", "augmented"] = "original"
    use_analyses: bool = True  # False = direct-judge ablation
    doc_char_budget: int = Field(default=24000, ge=1)
    concurrency_limit: int = Field(default=8, ge=1)
    query_concurrency: int = Field(default=2, ge=1)
    top_logprobs: int = Field(default=20, ge=5, le=20)
    analysis_max_new_tokens: int = Field(default=1024, ge=1)

    @field_validator("template_dir")
    @classmethod
    def check_template_dir(cls, value: Path) -> Path:
        if not value.is_dir():
            raise ValueError(f"template directory not found: {value}")
        return value


class BackendsSettings(BaseModel):
    query_analysis: BackendConfig
    judges: list[BackendConfig] = Field(min_length=1)

    @model_validator(mode="after")
    def check_unique_tags(self) -> "BackendsSettings":
        tags = [judge.tag for judge in self.judges]
        if len(tags) != len(set(tags)):
            raise ValueError(f"judge names must be unique, got {tags}")
        return self


class ScoringSettings(BaseModel):
    modes: list[ScoringMode] = [ScoringMode.DISCRETE, ScoringMode.CONTINUOUS, ScoringMode.HYBRID]
    alpha: float = Field(default=DEFAULT_ALPHA, ge=0)
    tag_prefix: str = "reljudge"

    @field_validator("alpha")
    @classmethod
    def check_alpha(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("alpha must be finite")
        return value


class EvaluationSettings(BaseModel):
    k: int = Field(default=10, ge=1)
    exclude_empty_queries: bool = False


class RunConfig(BaseModel):
    """Complete, reproducible experiment manifest"""
    output_dir: Path = Path("output")
    datasets: dict[str, DatasetConfig] = Field(min_length=1)
    bm25: Bm25Settings = Bm25Settings()
    pipeline: Optional[PipelineSettings] = None
    backends: Optional[BackendsSettings] = None
    scoring: ScoringSettings = ScoringSettings()
    evaluation: EvaluationSettings = EvaluationSettings()

    @field_validator("datasets")
    @classmethod
    def check_dataset_names(cls, value: dict[str, DatasetConfig]) -> dict[str, DatasetConfig]:
        for name in value:
            if "." in name or not name.strip():
                raise ValueError(f"dataset name '{name}' must be non-empty and contain no '.'")
        return value

    @model_validator(mode="after")
    def check_cutoffs(self) -> "RunConfig":
        wants_eval = any(d.qrels is not None for d in self.datasets.values())
        if wants_eval and self.bm25.first_stage_k < self.evaluation.k:
            raise ValueError(
                f"bm25.first_stage_k ({self.bm25.first_stage_k}) must be >= "
                f"evaluation.k ({self.evaluation.k}) when qrels are configured"
            )
        return self
