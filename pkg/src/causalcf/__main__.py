import sys

from causalcf.cli import main

if __name__ == "__main__":
    sys.exit(main())
