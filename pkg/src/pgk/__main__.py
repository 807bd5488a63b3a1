import sys

from pgk.cli import main

sys.exit(main())
