import sys

from hardyctl.cli import main

sys.exit(main())
