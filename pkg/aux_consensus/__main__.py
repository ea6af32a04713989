"""Entry point for `python -m aux_consensus`."""

from .cli import main

if __name__ == "__main__":
    main()
