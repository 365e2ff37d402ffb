"""Randomized sweep of the pointwise inequalities (wraps the CLI subcommand)."""

import sys

from fracflow.cli import main

if __name__ == "__main__":
    sys.exit(main(["verify-inequalities", *sys.argv[1:]]))
