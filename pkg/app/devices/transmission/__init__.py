"""Transmission lines."""
