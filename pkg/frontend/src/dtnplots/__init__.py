"""Figure rendering for dtnlab run artifacts.

Consumes only the CSV/JSON files the dtnlab CLI writes; no shared code with
the numerical package.
"""
__version__ = "0.1.0"

#: major.minor of the dtnlab artifact schema these renderers understand
SCHEMA_VERSION = "0.1"
