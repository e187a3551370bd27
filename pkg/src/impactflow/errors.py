"""Typed domain errors.

Every contract violation raises a named subclass of DomainError so callers
(and the CLI, which maps them to exit code 1) can tell conditions apart
without parsing messages.
"""


class DomainError(ValueError):
    """Base class for input-contract violations."""


# Transaction ingestion and return decomposition.


class MalformedRow(DomainError):
    """A delimited row failed structural validation (field count, sign, volume)."""


class NonFinitePrice(DomainError):
    """A log midprice field is NaN or infinite."""


class EmptyInput(DomainError):
    """No data rows were found."""


class TooShort(DomainError):
    """Fewer transactions than the operation needs."""


# Estimators.


class ZeroVariance(DomainError):
    """Series is constant, autocorrelation undefined."""


class LagTooLarge(DomainError):
    """Requested lag reaches past the end of the series."""


class InsufficientPositivePoints(DomainError):
    """Too few strictly positive values inside the fit range."""


class TooFewTailSamples(DomainError):
    """The tail above the threshold holds too few samples."""


class ZeroLogSum(DomainError):
    """All tail samples sit exactly at the threshold."""


class SeriesTooShort(DomainError):
    """Series is shorter than the estimator's minimum length."""


class HOutOfRange(DomainError):
    """Hurst exponent outside (0.5, 1), long-memory relations undefined."""


# Impact fits and laws.


class TooFewObservations(DomainError):
    """Not enough transactions (or usable bins) for a stable fit."""


class PhiOutOfRange(DomainError):
    """Memory exponent outside (0, 0.5)."""


class AlphaOutOfRange(DomainError):
    """Size-tail exponent at or below 1."""


class MisalignedInputs(DomainError):
    """Transaction, return, and order inputs do not describe the same series."""


# Hidden orders.


class IndexOutOfRange(DomainError):
    """Transaction index outside the series."""


# Liquidity predictors.


class EmptyHistory(DomainError):
    """The autoregressive predictor needs at least one past transaction."""


class BadOrderState(DomainError):
    """An active-order view carries an impossible piece count or pace."""


class EpsHatOutOfRange(DomainError):
    """Sign predictor outside [-1, 1] where a probability is required."""


class DegenerateCertainty(DomainError):
    """Sign predictor at exactly +-1, the conditional ratio diverges."""


# Imbalance diagnostics.


class MissingLagZero(DomainError):
    """Cumulative impact needs the lag-0 row of the conditional table."""


class TooFewLargeOrders(DomainError):
    """Not enough orders above the size floor for a decay profile."""


class TooFewQualifyingPairs(DomainError):
    """Not enough completed-order pairs at the requested lag."""


# Simulator.


class ConfigInvalid(DomainError):
    """A simulation configuration field is missing, unknown, or out of range."""


class RuleStateError(DomainError):
    """Liquidity-rule bookkeeping does not match the supplied flow."""


class BracketFailure(DomainError):
    """Noise calibration could not bracket the target."""


class RunTooShort(DomainError):
    """Simulated run is too short for a stylized-facts report."""
