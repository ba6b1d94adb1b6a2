"""Exception hierarchy shared by all modules."""


class ExcursionError(Exception):
    """Base class for every error raised by this package."""


class InvalidLaw(ExcursionError, ValueError):
    pass


class NonProbability(InvalidLaw):
    pass


class NoPositiveStep(InvalidLaw):
    pass


class NoNegativeStep(InvalidLaw):
    pass


class Periodic(InvalidLaw):
    pass


class NonPositiveDrift(ExcursionError, ValueError):
    """A routine that needs a positive-mean walk received something else."""


class NonNegativeDrift(ExcursionError, ValueError):
    """An excursion routine received a law whose mean is not negative."""


class ConvergenceFailure(ExcursionError, ArithmeticError):
    pass


class BudgetExceeded(ExcursionError):
    pass


class PathBudgetExceeded(BudgetExceeded):
    pass


class DegenerateConditioning(ExcursionError):
    pass


class ConfigError(ExcursionError):
    pass
