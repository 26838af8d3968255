"""Rate SEC 10-K filings on qualitative dimensions with LLM graders."""

__version__ = "0.1.0"

SCHEMA_VERSION = 1
