import sys

from platsim.cli import main

sys.exit(main())
