"""Tests for recurrent layers."""
