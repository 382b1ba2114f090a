#!/usr/bin/env python3
"""
BNSL - Runner Script
Entry point for the score / learn / verify commands.
"""

import sys
from pathlib import Path

BASE_DIR = Path(__file__).parent
sys.path.insert(0, str(BASE_DIR))

from bnsl.cli import main  # noqa: E402


if __name__ == "__main__":
    sys.exit(main())
