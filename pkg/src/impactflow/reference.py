"""Reference parameter estimates for six London Stock Exchange stocks
(on-book trading, May 2000 to December 2002).

h is the Hurst exponent of the transaction sign series, f1 and f2 the
parameters of the one-transaction impact function f(v) = f1 * v**f2, and
alpha and phi the exponents derived from h (see estimators.derive_exponents).
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class StockParams:
    transactions: int
    h: float
    f1: float
    f2: float
    alpha: float
    phi: float


STOCKS = {
    "AZN": StockParams(transactions=569_321, h=0.68, f1=9.4e-5, f2=0.12, alpha=1.64, phi=0.18),
    "BSY": StockParams(transactions=359_479, h=0.68, f1=1.9e-4, f2=0.12, alpha=1.64, phi=0.18),
    "LLOY": StockParams(transactions=599_739, h=0.69, f1=9.6e-5, f2=0.14, alpha=1.62, phi=0.19),
    "PRU": StockParams(transactions=392_020, h=0.70, f1=1.9e-4, f2=0.11, alpha=1.60, phi=0.20),
    "RTO": StockParams(transactions=213_474, h=0.73, f1=1.6e-4, f2=0.16, alpha=1.54, phi=0.23),
    "VOD": StockParams(transactions=1_047_833, h=0.67, f1=2.7e-5, f2=0.25, alpha=1.66, phi=0.17),
}
