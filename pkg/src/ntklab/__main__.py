import sys

from ntklab.harness.cli import main

sys.exit(main())
