import sys

from asrlm.cli import main

sys.exit(main())
