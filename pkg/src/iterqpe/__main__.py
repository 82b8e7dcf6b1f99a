import sys

from iterqpe.cli import main

sys.exit(main())
