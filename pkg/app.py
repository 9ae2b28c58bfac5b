import sys

from dotenv import load_dotenv

# Config reads the environment at import time
load_dotenv()

from wfdrift.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
