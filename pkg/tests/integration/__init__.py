"""Integration tests for complete rerank runs and the command line."""
