# main.py
# Entry point for the ilsched command line; the subcommands live in src/cli/.

from src.cli.main import main


if __name__ == "__main__":
    raise SystemExit(main())
