"""
Command-line interface.

``semrelay.cli.main`` parses the subcommands; ``semrelay.cli.io`` reads run
configurations and writes reports, allocations and series files.
"""

# Modules are imported on use to keep ``python -m semrelay.cli.main`` free of import cycles.

__all__ = []
