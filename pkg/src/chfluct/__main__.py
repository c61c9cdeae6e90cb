import sys

from chfluct.cli import main

sys.exit(main())
