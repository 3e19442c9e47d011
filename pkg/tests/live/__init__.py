"""Smoke tests against a real chat-completion endpoint."""
