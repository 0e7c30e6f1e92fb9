import sys

from inhpl.cli import main

sys.exit(main())
