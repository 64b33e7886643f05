import sys

from frisim.cli import main

sys.exit(main())
