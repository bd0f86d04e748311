"""Exception hierarchy shared by every hmmlab module."""


class HmmError(Exception):
    """Base class for all hmmlab errors."""


class ValidationError(HmmError, ValueError):
    """A model document or model object violates a structural invariant."""


class MalformedDocument(ValidationError):
    pass


class NonStochasticRow(ValidationError):
    def __init__(self, state, total):
        self.state = state
        self.total = total
        super().__init__(f"row of state {state!r} sums to {total:.4f}, expected 1")


class UnusedSymbol(ValidationError):
    def __init__(self, symbol):
        self.symbol = symbol
        super().__init__(f"symbol {symbol!r} is never generated")


class BadReference(ValidationError):
    pass


class NegativeEntry(ValidationError):
    pass


class UnknownSymbol(HmmError, KeyError):
    def __str__(self):
        return f"unknown symbol {self.args[0]!r}"


class UnknownState(HmmError, KeyError):
    def __str__(self):
        return f"unknown state {self.args[0]!r}"


class NotIrreducible(HmmError):
    pass


class NullBelief(HmmError):
    pass


class NotUnifilar(HmmError):
    pass


class NotMergeable(HmmError):
    pass


class NotPathMergeable(HmmError):
    pass


class NotFlagState(HmmError):
    pass


class PeriodClash(HmmError):
    pass


class BudgetExceeded(HmmError):
    pass


class InsufficientData(HmmError):
    pass


class EpsilonTooLarge(HmmError):
    pass


class LengthMismatch(HmmError, ValueError):
    pass


class SearchTooLarge(HmmError):
    pass


class DeadState(HmmError):
    pass


class RejectionBudgetExceeded(HmmError):
    pass
