#!/usr/bin/env python3
"""plateau-cli - Minimal discs in hyperbolic space bounded by knots

Thin launcher for running from a source checkout; the installed console
script calls the same entry point.
"""

from plateau_cli.main import main

if __name__ == "__main__":
    main()
