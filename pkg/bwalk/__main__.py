"""python -m bwalk"""

import sys

from bwalk.cli import main

sys.exit(main())
