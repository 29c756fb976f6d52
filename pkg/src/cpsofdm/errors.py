"""Error types that map onto the CLI exit codes."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration input (CLI exit code 2)."""


class NumericError(RuntimeError):
    """Numerical failure: solver breakdown, non-convergence, bad conditioning (exit code 3)."""
