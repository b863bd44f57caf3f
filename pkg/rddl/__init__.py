"""Relational differential dynamic logic: proof kernel, numeric oracle and CLI."""
