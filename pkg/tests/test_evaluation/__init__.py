"""Tests for evaluation metrics."""
