#!/usr/bin/env python3
"""
Run one otc-steady subcommand from a source checkout.

Usage:
    python scripts/run_otc.py steady --config configs/nonsegmented_benchmark.json
"""

import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.cli.main import main  # pylint: disable=wrong-import-position


if __name__ == "__main__":
    sys.exit(main())
