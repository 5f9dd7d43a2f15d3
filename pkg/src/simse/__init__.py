"""Simulation toolkit for empirical software engineering studies."""
