#!/usr/bin/env python3
"""
Run the msgflow command line from a source checkout.

Usage:
    ./msgflow_cli.py simulate --scenario reference_mini --seed 3 --out-dir out/
    ./msgflow_cli.py analyze out/*.jsonl -o out/analysis.json
"""

import sys
from pathlib import Path

# Add the package to path
sys.path.insert(0, str(Path(__file__).parent))

from msgflow.cli import run


if __name__ == "__main__":
    run()
