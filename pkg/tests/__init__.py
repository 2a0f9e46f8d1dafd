"""Tests for covspec."""
