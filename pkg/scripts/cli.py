#!/usr/bin/env python3
"""
Run the structured-pca CLI from a source checkout without installing it.

Usage: python scripts/cli.py <command> [options]
"""

import sys
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from structured_pca.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
