"""Generators and external ties."""
