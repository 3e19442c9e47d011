"""
RelJudge Test Suite.

This package contains all test modules organized by test type:
- unit/ - Unit tests for individual components
- integration/ - End-to-end rerank runs and the command line
- performance/ - Performance benchmarks
- live/ - Smoke tests against a real endpoint (deselected by default)
- fixtures/ - Shared assertion helpers
- data/ - Fixture dataset, factories and generators
"""
