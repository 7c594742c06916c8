import sys

from retarded_spectrum.cli import main

sys.exit(main())
