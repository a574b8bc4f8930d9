"""Tests for the tensor engine."""
