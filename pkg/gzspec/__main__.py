import sys

from gzspec.main import main

sys.exit(main())
