"""Exception hierarchy.

Every domain error derives from :class:`SparsefolioError` so the CLI can map
them to exit code 1 while usage errors keep exit code 2.
"""


class SparsefolioError(Exception):
    """Base class for all domain errors."""


# market_data
class MalformedRow(SparsefolioError):
    def __init__(self, line, reason=""):
        self.line = line
        super().__init__(f"malformed row at line {line}" + (f": {reason}" if reason else ""))


class NonPositivePrice(SparsefolioError):
    def __init__(self, date, asset, value):
        self.date, self.asset, self.value = date, asset, value
        super().__init__(f"non-positive price {float(value)!r} for {asset} on {date}")


class EmptyPanel(SparsefolioError):
    pass


class TooFewRows(SparsefolioError):
    pass


class BoundaryOutOfRange(SparsefolioError):
    pass


class EmptySplit(SparsefolioError):
    pass


# transform
class SingularDesign(SparsefolioError):
    pass


class BadNumeraire(SparsefolioError):
    pass


class RankDeficient(SparsefolioError):
    pass


class NonFiniteCoefficient(SparsefolioError):
    pass


# solvers
class DegenerateDesign(SparsefolioError):
    pass


class BadOmega(SparsefolioError):
    pass


class InvalidConfig(SparsefolioError):
    pass


class InfeasibleTarget(SparsefolioError):
    pass


class SingularCovariance(SparsefolioError):
    pass


class NumericalOverflow(SparsefolioError):
    def __init__(self, message, state=None):
        self.state = state or {}
        super().__init__(message)


class EmptyDraws(SparsefolioError):
    pass


# views
class SingularSystem(SparsefolioError):
    pass


# backtest
class AssetMismatch(SparsefolioError):
    pass


class EmptyTestPanel(SparsefolioError):
    pass


class EmptyAssetList(SparsefolioError):
    pass


class NoConvergence(RuntimeWarning):
    """Iteration cap reached; the returned iterate is the last (best) one."""
