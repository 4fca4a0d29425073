"""Batteries and electric vehicles."""
