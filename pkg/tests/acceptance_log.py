"""Collects one result line per acceptance criterion for the terminal summary."""

LINES: list[str] = []
