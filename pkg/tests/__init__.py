"""Test suite for skewrank."""
