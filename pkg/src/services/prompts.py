#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Load, validate and render the prompt templates of the judging pipeline.
#
"""
Load, validate and render the prompt templates of the judging pipeline.

A template directory holds one plain-text file per step plus an optional
``system.txt``. Files use ``str.format`` placeholders: ``{query_name}``,
``{doc_name}`` and ``{relation}`` are fixed for a run; ``{query}``,
``{query_analysis}``, ``{doc}`` and ``{doc_analysis}`` carry the variable
content. Variable placeholders must follow the instruction text, in the
order query, query analysis, document, document analysis. Labels between
them may use fixed placeholders, but the file must end with the last
variable. Format specs and conversions are rejected.
"""

import hashlib
import logging
import string
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional

from domain.judgment import DocumentAnalysis
from error_handling import RelJudgeError


logger = logging.getLogger("reljudge")

DEFAULT_SYSTEM_PROMPT = "You are an expert at judging whether documents are relevant to a request."

FIXED_FIELDS = ("query_name", "doc_name", "relation")
VARIABLE_ORDER = ("query", "query_analysis", "doc", "doc_analysis")


class PipelineError(RelJudgeError):
    pass


class TemplateError(PipelineError):
    pass


class MissingPromptInputError(PipelineError):
    pass


class PromptStep(str, Enum):
    QUERY_ANALYSIS = "query_analysis"
    DOC_ANALYSIS = "doc_analysis"
    JUDGMENT = "judgment"
    DIRECT_JUDGMENT = "direct_judgment"


REQUIRED_INPUTS: dict[PromptStep, tuple[str, ...]] = {
    PromptStep.QUERY_ANALYSIS: ("query",),
    PromptStep.DOC_ANALYSIS: ("query", "query_analysis", "doc"),
    PromptStep.JUDGMENT: ("query", "query_analysis", "doc", "doc_analysis"),
    PromptStep.DIRECT_JUDGMENT: ("query", "doc"),
}


@dataclass(frozen=True)
class PromptTemplate:
    query_name: str
    doc_name: str
    relation: str
    bodies: dict[PromptStep, str]
    system_prompt: str = DEFAULT_SYSTEM_PROMPT
    source: Optional[Path] = field(default=None, compare=False)

    def body(self, step: PromptStep) -> str:
        try:
            return self.bodies[step]
        except KeyError:
            raise TemplateError(f"Template {self.source} has no '{step.value}' step") from None

    def fixed_prefix(self, step: PromptStep) -> str:
        """Rendered instruction text preceding the first variable placeholder."""
        values = self._fixed_values()
        parts: list[str] = []
        for literal, name in _fields(self.body(step)):
            parts.append(literal)
            if name is None or name in VARIABLE_ORDER:
                break
            parts.append(values[name])
        return "".join(parts)

    def hash_for(self, steps: Iterable[PromptStep]) -> str:
        """Stable hash of everything that shapes the prompts of the given steps."""
        digest = hashlib.sha256()
        for part in (self.system_prompt, self.query_name, self.doc_name, self.relation):
            digest.update(part.encode("utf-8"))
            digest.update(b"\x00")
        for step in sorted(set(steps), key=lambda s: s.value):
            digest.update(step.value.encode("utf-8"))
            digest.update(b"\x00")
            digest.update(self.body(step).encode("utf-8"))
            digest.update(b"\x00")
        return digest.hexdigest()[:16]

    def _fixed_values(self) -> dict[str, str]:
        return {"query_name": self.query_name, "doc_name": self.doc_name, "relation": self.relation}


def _fields(body: str) -> list[tuple[str, Optional[str]]]:
    """(literal_text, field_name) pairs of a format string; field_name is None for trailing text."""
    try:
        segments = list(string.Formatter().parse(body))
    except ValueError as e:
        raise TemplateError(f"Malformed placeholder: {e}") from e
    for _, name, spec, conversion in segments:
        if spec or conversion:
            raise TemplateError(f"Placeholder {{{name}}} must not carry a format spec or conversion")
    parsed = [(literal, name) for literal, name, _, _ in segments]
    if any(name == "" for _, name in parsed):
        raise TemplateError("Positional placeholders {} are not allowed")
    return parsed


def validate_body(step: PromptStep, body: str) -> None:
    parsed = _fields(body)
    names = [name for _, name in parsed if name]
    unknown = sorted(set(names) - set(FIXED_FIELDS) - set(VARIABLE_ORDER))
    if unknown:
        raise TemplateError(f"Step '{step.value}' uses unknown placeholders {unknown}")

    variables = [name for name in names if name in VARIABLE_ORDER]
    required = REQUIRED_INPUTS[step]
    if sorted(variables) != sorted(required):
        raise TemplateError(
            f"Step '{step.value}' must use each of {list(required)} exactly once, found {variables}"
        )
    if variables != sorted(variables, key=VARIABLE_ORDER.index):
        raise TemplateError(f"Step '{step.value}' must place variables in the order {list(required)}")

    last = [name for _, name in parsed].index(variables[-1])
    trailing = [name for _, name in parsed[last + 1:] if name]
    if trailing:
        raise TemplateError(f"Step '{step.value}' has placeholders {trailing} after {{{variables[-1]}}}")
    if parsed[-1][1] != variables[-1]:
        raise TemplateError(f"Step '{step.value}' must end with the {{{variables[-1]}}} placeholder")
    if not parsed[0][0].strip():
        raise TemplateError(f"Step '{step.value}' must start with instruction text")


@lru_cache(maxsize=16)
def _read_bodies(template_dir: Path) -> tuple[tuple[PromptStep, str], ...]:
    bodies = []
    for step in PromptStep:
        path = template_dir / f"{step.value}.txt"
        if not path.exists():
            continue
        # trailing whitespace is dropped so prompts end with their last variable
        body = path.read_text(encoding="utf-8").rstrip()
        validate_body(step, body)
        bodies.append((step, body))
    return tuple(bodies)


def load_template(template_dir: Path | str, query_name: str = "query", doc_name: str = "document",
                  relation: str = "substantially helps answer") -> PromptTemplate:
    template_dir = Path(template_dir)
    if not template_dir.is_dir():
        raise TemplateError(f"Template directory not found: {template_dir}")
    try:
        bodies = dict(_read_bodies(template_dir.resolve()))
    except OSError as e:
        raise TemplateError(f"Cannot read templates from {template_dir}: {e}") from e
    if not bodies:
        raise TemplateError(f"No step templates found in {template_dir}")

    system_path = template_dir / "system.txt"
    system_prompt = DEFAULT_SYSTEM_PROMPT
    if system_path.exists():
        system_prompt = system_path.read_text(encoding="utf-8").strip()

    logger.debug("Loaded templates %s from %s", [s.value for s in bodies], template_dir)
    return PromptTemplate(query_name, doc_name, relation, bodies, system_prompt, template_dir)


def clear_template_cache() -> None:
    _read_bodies.cache_clear()


def format_doc_analysis(analysis: DocumentAnalysis | str) -> str:
    if isinstance(analysis, str):
        return analysis
    if analysis.extractive_summary:
        return f"SUMMARY: {analysis.extractive_summary}\nDISCUSSION: {analysis.relevance_discussion}"
    return analysis.relevance_discussion


def render_prompt(
    template: PromptTemplate,
    step: PromptStep | str,
    query: Optional[str] = None,
    query_analysis: Optional[str] = None,
    document: Optional[str] = None,
    doc_analysis: DocumentAnalysis | str | None = None,
) -> tuple[str, str]:
    """
    Render one step into (system_prompt, user_prompt).

    Raises MissingPromptInputError when an input the step needs is None.
    """
    step = PromptStep(step)
    provided = {
        "query": query,
        "query_analysis": query_analysis,
        "doc": document,
        "doc_analysis": format_doc_analysis(doc_analysis) if doc_analysis is not None else None,
    }
    missing = [name for name in REQUIRED_INPUTS[step] if provided[name] is None]
    if missing:
        raise MissingPromptInputError(f"Step '{step.value}' requires {missing}")

    values = dict(template._fixed_values())
    values.update({name: provided[name] for name in REQUIRED_INPUTS[step]})
    user_prompt = template.body(step).format(**values)
    return template.system_prompt, user_prompt
