import sys

from openrabi.cli import main

sys.exit(main())
