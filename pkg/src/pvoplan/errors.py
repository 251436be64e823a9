"""Exception and warning types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: bad mixture spec, malformed scenario file, bad bounds."""


class ShapeError(ValueError):
    """Mismatched dimensions or sample counts."""


class NumericalError(RuntimeError):
    """A linear solve or numeric routine failed beyond recoverable conditioning."""


class DesiredDistributionInfeasible(RuntimeError):
    """No control on the grid satisfies every scenario constraint."""


class NoFeasibleControl(RuntimeError):
    """Hard-filter planner methods found an empty feasible control set."""


class DegenerateVelocityWarning(RuntimeWarning):
    """Relative velocity below the epsilon floor; static-overlap limit used."""


class TailWarning(RuntimeWarning):
    """A density underflowed and was floored during a Monte-Carlo estimate."""
