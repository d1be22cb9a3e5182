"""Utility modules for skewrank."""
