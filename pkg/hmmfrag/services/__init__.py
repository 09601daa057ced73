"""File and report helpers for the command-line tools."""

__all__: list[str] = []
