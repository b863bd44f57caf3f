"""Subcommands; each module exposes ``run(args, config) -> int``."""

# Exit codes shared by every subcommand.
EXIT_OK = 0
EXIT_CONDITIONAL = 1
EXIT_REFUTED = 2
EXIT_INPUT = 3
EXIT_COUNTEREXAMPLE = 4
