import sys

from landau.cli import main

sys.exit(main())
