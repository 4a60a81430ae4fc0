"""Error taxonomy shared by the library and the CLI.

Each error class carries the process exit code the CLI maps it to.
"""


class FpmError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(FpmError):
    """Invalid or inconsistent configuration (bad file, bad value, missing sample)."""

    exit_code = 2


class GeometryError(FpmError):
    """Physically impossible or out-of-bounds optical geometry."""

    exit_code = 3


class SolverDivergenceError(FpmError):
    """A solver produced a non-finite objective value."""

    exit_code = 4

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration
