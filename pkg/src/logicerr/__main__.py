import sys

from logicerr.cli import main

sys.exit(main())
