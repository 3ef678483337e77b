import sys

from domcheck.cli import main

sys.exit(main())
