"""Module entry point for python -m msprep."""

import sys

from .cli import main

sys.exit(main())
