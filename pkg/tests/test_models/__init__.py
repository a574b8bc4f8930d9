"""Test package for models."""
