"""Test data factories and generators using Factory Pattern."""
