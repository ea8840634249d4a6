"""Exception hierarchy. Every domain error derives from SoficlabError so the
CLI can map it to exit code 2."""


class SoficlabError(Exception):
    pass


class BudgetExhausted(SoficlabError):
    """Rewriting did not reach a normal form within the step budget."""


class BudgetExceeded(SoficlabError):
    """A search ran out of nodes; ``partial`` carries the best result so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class RadiusTooLarge(SoficlabError):
    pass


class ValidationError(SoficlabError, ValueError):
    pass
