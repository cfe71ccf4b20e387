"""``python -m dynacq``."""

import sys

from .cli.main import main

sys.exit(main())
