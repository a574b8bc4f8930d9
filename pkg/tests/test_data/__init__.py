"""Tests for the data pipeline."""
