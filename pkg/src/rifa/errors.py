"""Exception hierarchy shared by all modules.

Four failure classes, mapped by the CLI onto process exit codes:

* ``ConfigurationError`` -- malformed or inconsistent user input (bad
  parameter ordering, unknown config keys, missing required fields).
* ``ContractError``      -- a caller violated an operation precondition
  (out-of-range copula argument, claim missing a path, arbitrage
  construction requested for a no-arbitrage premium).
* ``ResourceError``      -- a request exceeds an enforced resource cap.
* ``NumericalError``     -- a numerical routine failed to converge or
  produced an internally inconsistent value.
"""


class ConfigurationError(ValueError):
    """Invalid user-supplied configuration or parameters."""


class ContractError(ValueError):
    """An operation was called outside its stated precondition."""


class ResourceError(RuntimeError):
    """A hard resource cap would be exceeded."""


class NumericalError(RuntimeError):
    """A numerical routine failed; carries the best value found, if any."""

    def __init__(self, message: str, best_value: float | None = None):
        super().__init__(message)
        self.best_value = best_value


class VerificationError(NumericalError):
    """Monte-Carlo verification of a constructed strategy failed.

    Signals an implementation bug or a deliberately invalid input; the
    offending report is attached for inspection.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
