"""Main entry point for the SoftAbs HMC sampler."""

import asyncio
import sys

from .core.cli import main as cli_main


def main():
    """Main entry point for the softabs-hmc command."""
    try:
        # Run the CLI
        sys.exit(asyncio.run(cli_main(sys.argv[1:])))
    except KeyboardInterrupt:
        print("\nInterrupted.", file=sys.stderr)
        sys.exit(130)


if __name__ == "__main__":
    main()
