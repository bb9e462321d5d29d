#!/usr/bin/env python3
"""
bwalk experiment runner

Runs one built-in scenario (or lists them) from the project root:

    python run_experiment.py angle --param trials=1000 --seed 7 --out reports/angle.json
    python run_experiment.py --list
"""

import sys
from pathlib import Path

# Add project root to Python path
sys.path.insert(0, str(Path(__file__).parent))

from bwalk.cli import main  # noqa: E402


if __name__ == "__main__":
    args = sys.argv[1:]
    if not args or args[0] in ("--list", "-l"):
        sys.exit(main(["list-experiments"]))
    sys.exit(main(["experiment", *args]))
