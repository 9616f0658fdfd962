"""Band-limited acoustic Casimir pressure and pull-in analysis of lumped micro-switches."""

__version__ = "0.1.0"
