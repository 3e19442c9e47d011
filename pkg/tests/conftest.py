"""
Pytest Configuration and Shared Fixtures for the RelJudge Test Suite.

This module provides:
- Import path setup for src/
- Paths of the fixture dataset and scripted judge
- Run configuration builders over a temporary output directory
- Faker/factory-boy test data fixtures
- Assertion helpers
"""

import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict

import pytest
import yaml
from dotenv import load_dotenv

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))
sys.path.insert(0, str(Path(__file__).parent / 'data'))

from backends.scripted import ScriptedBackend, load_script  # noqa: E402
from models import RunConfig  # noqa: E402
from services.prompts import clear_template_cache, load_template  # noqa: E402

# Load test environment
env_file = Path(__file__).parent.parent / ".env.test"
if env_file.exists():
    load_dotenv(env_file)

logging.basicConfig(
    level=logging.DEBUG,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

REPO_ROOT = Path(__file__).parent.parent
TEMPLATE_DIR = REPO_ROOT / "cfg" / "templates" / "default"
FIXTURE_DIR = Path(__file__).parent / "data" / "fixture"
FIXTURE_DATASET = "tiny"
SOURCE_DATE_EPOCH = "1767225600"


# ============================================================================
# FIXTURE DATASET
# ============================================================================

@pytest.fixture(scope='session')
def fixture_paths() -> Dict[str, Path]:
    """Files of the hand-built fixture dataset."""
    return {
        'corpus': FIXTURE_DIR / "corpus.jsonl",
        'queries': FIXTURE_DIR / "queries.jsonl",
        'qrels': FIXTURE_DIR / "qrels.tsv",
        'first_stage': FIXTURE_DIR / "first_stage.run",
        'script': FIXTURE_DIR / "judge_script.yaml",
        'templates': TEMPLATE_DIR,
    }


@pytest.fixture(autouse=True)
def reproducible_time(monkeypatch):
    """Pin timestamps so artifacts compare byte for byte."""
    monkeypatch.setenv("SOURCE_DATE_EPOCH", SOURCE_DATE_EPOCH)
    yield
    clear_template_cache()


@pytest.fixture
def template():
    return load_template(TEMPLATE_DIR, "question", "document", "substantially helps answer")


@pytest.fixture(scope='session')
def judge_script(fixture_paths):
    return load_script(fixture_paths['script'])


@pytest.fixture
def scripted_backend(judge_script) -> Callable[..., ScriptedBackend]:
    """Build a fresh scripted backend; counters start at zero."""
    def build(model: str = "fixture-judge", max_in_flight: int = 8) -> ScriptedBackend:
        return ScriptedBackend(judge_script, model=model, max_in_flight=max_in_flight)
    return build


def _scripted(model: str, script: Path, name: str | None = None) -> Dict[str, Any]:
    backend = {'kind': 'scripted', 'model': model, 'script': str(script), 'api_key_env': None}
    if name:
        backend['name'] = name
    return backend


@pytest.fixture
def run_config_dict(tmp_path, fixture_paths) -> Dict[str, Any]:
    """Plain dict of a complete run over the fixture dataset; tests adjust it before validation."""
    return {
        'output_dir': str(tmp_path / "output"),
        'datasets': {
            FIXTURE_DATASET: {
                'corpus': str(fixture_paths['corpus']),
                'queries': str(fixture_paths['queries']),
                'qrels': str(fixture_paths['qrels']),
            },
        },
        'bm25': {'k1': 1.2, 'b': 0.75, 'first_stage_k': 10},
        'pipeline': {
            'template_dir': str(fixture_paths['templates']),
            'query_name': 'question',
            'doc_name': 'document',
            'relation': 'substantially helps answer',
            'doc_char_budget': 200,
            'concurrency_limit': 4,
            'query_concurrency': 2,
            'top_logprobs': 20,
        },
        'backends': {
            'query_analysis': _scripted("fixture-analyst", fixture_paths['script']),
            'judges': [_scripted("fixture-judge", fixture_paths['script'])],
        },
        'scoring': {'modes': ['discrete', 'continuous', 'hybrid'], 'alpha': 100.0},
        'evaluation': {'k': 10},
    }


@pytest.fixture
def build_run_config(run_config_dict) -> Callable[..., RunConfig]:
    def build(**overrides) -> RunConfig:
        raw = dict(run_config_dict)
        raw.update(overrides)
        return RunConfig.model_validate(raw)
    return build


@pytest.fixture
def seeded_first_stage(fixture_paths) -> Callable[[Path], Path]:
    """Place the hand-written first-stage run where the rerank step looks for it."""
    def seed(output_dir: Path) -> Path:
        output_dir.mkdir(parents=True, exist_ok=True)
        target = output_dir / f"{FIXTURE_DATASET}.first_stage.bm25.run"
        target.write_bytes(fixture_paths['first_stage'].read_bytes())
        return target
    return seed


@pytest.fixture
def write_config(tmp_path) -> Callable[[Dict[str, Any]], Path]:
    """Dump a config dict to YAML for CLI tests."""
    def write(raw: Dict[str, Any], name: str = "config.yaml") -> Path:
        path = tmp_path / name
        path.write_text(yaml.safe_dump(raw, sort_keys=False), encoding="utf-8")
        return path
    return write


# ============================================================================
# FACTORY & FAKER FIXTURES
# ============================================================================

@pytest.fixture(scope='session')
def test_data_generator():
    """Provide Faker-based test data generator."""
    from fake_data import TestDataGenerator
    return TestDataGenerator(seed=1234)


# ============================================================================
# ASSERTION HELPERS
# ============================================================================

@pytest.fixture(scope='session')
def assertions():
    """Provide assertion helper functions."""
    from tests.fixtures.assertions import RunAssertions
    return RunAssertions()
