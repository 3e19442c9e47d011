#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Tests for prompt template loading, validation and rendering
#
import pytest

from domain.judgment import DocumentAnalysis
from services.prompts import (
    MissingPromptInputError,
    PromptStep,
    TemplateError,
    load_template,
    render_prompt,
    validate_body,
)

pytestmark = pytest.mark.unit


def write_templates(directory, **bodies):
    directory.mkdir(parents=True, exist_ok=True)
    for step, body in bodies.items():
        (directory / f"{step}.txt").write_text(body, encoding="utf-8")
    return directory


class TestDefaultTemplates:

    def test_all_steps_present(self, template):
        assert set(template.bodies) == set(PromptStep)
        assert template.system_prompt.startswith("You are an expert")

    def test_query_analysis_ends_with_query(self, template):
        system, user = render_prompt(template, PromptStep.QUERY_ANALYSIS, query="Why do cats purr?")
        assert user.endswith("Why do cats purr?")
        assert "{" not in user
        assert "question" in user
        assert system == template.system_prompt

    def test_doc_analysis_requests_labelled_sections(self, template):
        _, user = render_prompt(template, "doc_analysis", query="q", query_analysis="QA-MARK", document="DOC-MARK")
        assert "SUMMARY:" in user and "DISCUSSION:" in user
        assert user.endswith("DOC-MARK")
        assert user.index("QA-MARK") < user.index("DOC-MARK")

    def test_judgment_places_inputs_in_order(self, template):
        analysis = DocumentAnalysis("q1", "d1", "copied sentence", "it helps")
        _, user = render_prompt(template, PromptStep.JUDGMENT, query="QUERY-TEXT", query_analysis="QA-TEXT",
                                document="DOC-TEXT", doc_analysis=analysis)
        positions = [user.index(marker) for marker in ("QUERY-TEXT", "QA-TEXT", "DOC-TEXT", "SUMMARY: copied")]
        assert positions == sorted(positions)
        assert user.endswith("DISCUSSION: it helps")
        assert "substantially helps answer" in user

    def test_unlabelled_doc_analysis_rendered_verbatim(self, template):
        analysis = DocumentAnalysis("q1", "d1", "", "free text only")
        _, user = render_prompt(template, PromptStep.JUDGMENT, query="q", query_analysis="qa",
                                document="d", doc_analysis=analysis)
        assert user.endswith("free text only")
        assert "SUMMARY: \n" not in user

    def test_missing_input_rejected(self, template):
        with pytest.raises(MissingPromptInputError, match="query_analysis"):
            render_prompt(template, PromptStep.DOC_ANALYSIS, query="q", document="d")

    def test_braces_in_content_are_kept(self, template):
        _, user = render_prompt(template, PromptStep.DIRECT_JUDGMENT, query="f(x) = {x}", document="{doc}")
        assert "f(x) = {x}" in user
        assert user.endswith("{doc}")

    def test_fixed_prefix_is_instruction_only(self, template):
        prefix = template.fixed_prefix(PromptStep.JUDGMENT)
        assert prefix.startswith("Below are a question")
        assert "{" not in prefix
        _, user = render_prompt(template, PromptStep.JUDGMENT, query="q", query_analysis="qa",
                                document="d", doc_analysis="da")
        assert user.startswith(prefix)


class TestTemplateHash:

    def test_hash_is_stable(self, template, fixture_paths):
        again = load_template(fixture_paths['templates'], "question", "document", "substantially helps answer")
        steps = (PromptStep.QUERY_ANALYSIS, PromptStep.DOC_ANALYSIS, PromptStep.JUDGMENT)
        assert template.hash_for(steps) == again.hash_for(steps)
        assert len(template.hash_for(steps)) == 16

    def test_hash_depends_on_names_and_steps(self, template, fixture_paths):
        other = load_template(fixture_paths['templates'], "query", "passage", "answers")
        steps = (PromptStep.JUDGMENT,)
        assert template.hash_for(steps) != other.hash_for(steps)
        assert template.hash_for(steps) != template.hash_for((PromptStep.DIRECT_JUDGMENT,))

    def test_hash_ignores_step_order(self, template):
        a = template.hash_for((PromptStep.JUDGMENT, PromptStep.DOC_ANALYSIS))
        b = template.hash_for((PromptStep.DOC_ANALYSIS, PromptStep.JUDGMENT))
        assert a == b


class TestValidation:

    def test_unknown_placeholder(self):
        with pytest.raises(TemplateError, match="unknown"):
            validate_body(PromptStep.QUERY_ANALYSIS, "Analyse {query_name} {topic}:\n{query}")

    def test_missing_variable(self):
        with pytest.raises(TemplateError):
            validate_body(PromptStep.DIRECT_JUDGMENT, "Judge this:\n{query}")

    def test_duplicate_variable(self):
        with pytest.raises(TemplateError):
            validate_body(PromptStep.QUERY_ANALYSIS, "Analyse:\n{query}\nagain {query}")

    def test_wrong_order(self):
        with pytest.raises(TemplateError, match="order"):
            validate_body(PromptStep.DIRECT_JUDGMENT, "Judge:\n{doc}\n{query}")

    def test_must_end_with_last_variable(self):
        with pytest.raises(TemplateError, match="end with"):
            validate_body(PromptStep.DIRECT_JUDGMENT, "Judge:\n{query}\n{doc}\nAnswer now.")

    @pytest.mark.parametrize("tail", ["{relation}", "\n{doc_name}?", "{query_name}\n"])
    def test_no_fixed_placeholder_after_last_variable(self, tail):
        with pytest.raises(TemplateError, match=r"after \{doc\}"):
            validate_body(PromptStep.DIRECT_JUDGMENT, "Judge:\n{query}\n{doc}" + tail)

    def test_labels_between_variables_allowed(self):
        validate_body(PromptStep.DIRECT_JUDGMENT, "Judge:\n{query_name}: {query}\n{doc_name}:\n{doc}")

    @pytest.mark.parametrize("body", ["Judge:\n{query}\n{doc:{relation}}", "Judge:\n{query!r}\n{doc}"])
    def test_format_spec_and_conversion_rejected(self, body):
        with pytest.raises(TemplateError, match="format spec"):
            validate_body(PromptStep.DIRECT_JUDGMENT, body)

    def test_must_start_with_instructions(self):
        with pytest.raises(TemplateError, match="start"):
            validate_body(PromptStep.QUERY_ANALYSIS, "{query}")

    def test_positional_placeholder(self):
        with pytest.raises(TemplateError, match="Positional"):
            validate_body(PromptStep.QUERY_ANALYSIS, "Analyse {}:\n{query}")

    def test_malformed_braces(self):
        with pytest.raises(TemplateError):
            validate_body(PromptStep.QUERY_ANALYSIS, "Analyse {query_name:\n{query}")

    def test_trailing_newline_trimmed_on_load(self, tmp_path):
        directory = write_templates(tmp_path / "t", query_analysis="Analyse the {query_name}:\n{query}\n\n")
        loaded = load_template(directory)
        _, user = render_prompt(loaded, PromptStep.QUERY_ANALYSIS, query="q?")
        assert user == "Analyse the query:\nq?"

    def test_missing_step_file(self, tmp_path):
        directory = write_templates(tmp_path / "t", query_analysis="Analyse:\n{query}")
        loaded = load_template(directory)
        with pytest.raises(TemplateError, match="judgment"):
            render_prompt(loaded, PromptStep.JUDGMENT, query="q", query_analysis="a", document="d",
                          doc_analysis="x")

    def test_empty_directory(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(TemplateError):
            load_template(tmp_path / "empty")

    def test_missing_directory(self, tmp_path):
        with pytest.raises(TemplateError):
            load_template(tmp_path / "absent")
