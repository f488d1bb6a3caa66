"""Bernstein duality for Lambda-Wright-Fisher processes with general selection."""
