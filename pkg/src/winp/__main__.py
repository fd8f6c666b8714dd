import sys

from winp.cli import main

sys.exit(main())
