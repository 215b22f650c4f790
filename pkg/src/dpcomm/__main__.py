import sys

from dpcomm.cli import main

sys.exit(main())
