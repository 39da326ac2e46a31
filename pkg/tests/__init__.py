"""Test suite for Treegraph."""
