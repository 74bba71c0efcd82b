import os

from dotenv import load_dotenv
from rich.console import Console

load_dotenv()

# Verbose logging flag, also toggled by `main.py --verbose`
VERBOSE = os.getenv("STEKLOV_VERBOSE", "0").lower() in {"1", "true", "yes"}

console = Console(stderr=True)


def set_verbose(flag: bool) -> None:
    global VERBOSE
    VERBOSE = flag


def vprint(*args, **kwargs):
    if VERBOSE:
        console.print(*args, **kwargs)
