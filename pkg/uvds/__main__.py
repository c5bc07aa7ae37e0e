"""
Entry point: python -m uvds <command> [flags]
"""

import sys

from uvds.cli import main

if __name__ == "__main__":
    sys.exit(main())
