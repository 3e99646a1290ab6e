import sys

from opquant.cli import main

sys.exit(main())
