import sys

from cornerflow.cli import main

sys.exit(main())
