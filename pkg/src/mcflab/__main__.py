import sys

from mcflab.cli import main

sys.exit(main())
