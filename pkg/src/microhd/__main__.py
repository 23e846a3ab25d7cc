import sys

from microhd.cli import main

sys.exit(main())
