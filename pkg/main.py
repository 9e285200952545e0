#!/usr/bin/env python3
"""
Main entry point for the semantic relay optimizer.

Runs the ``semrelay`` command line from a source checkout without
installing the package.

Usage:
    python main.py --help
    python main.py solve --config config/tiny.json --out results/tiny
    python main.py sweep --config config/sweep_br.json --modes joint,fixed-b,fixed-p,fixed-l
    python main.py trajectory --config config/trajectory.json
    python main.py scenarios --config config/scenarios.json --placement
    python main.py oracle-check --config config/tiny.json
"""

import sys
from pathlib import Path

# Add the project root to Python path for imports
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

try:
    from semrelay.cli.main import main
except ImportError as e:
    print(f"Error importing semrelay modules: {e}", file=sys.stderr)
    print("Please ensure you're running from the project root directory.", file=sys.stderr)
    sys.exit(1)


if __name__ == "__main__":
    sys.exit(main())
