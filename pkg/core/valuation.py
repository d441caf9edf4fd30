"""
Investment-trust NAV arithmetic for buy-backs.

Buying shares below NAV per share accretes value to the remaining holders;
buying above it dilutes them.
"""

from dataclasses import dataclass

from core.utils.errors import ConfigurationError, DomainError
from core.utils.logger import warning


@dataclass(frozen=True)
class TrustState:
    asset_value: float
    shares_out: float
    price: float

    def __post_init__(self):
        for name in ("asset_value", "shares_out", "price"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(name, "must be > 0")


@dataclass(frozen=True)
class BuybackOutcome:
    shares_bought: float
    pct_of_outstanding: float
    new_nav_per_share: float


def nav_per_share(state):
    return state.asset_value / state.shares_out


def discount(state):
    """1 - price / NAV; negative values are a premium."""
    return 1.0 - state.price / nav_per_share(state)


def premium(state):
    return -discount(state)


def buyback_outcome(state, spend, exec_price, cash_available=None):
    """
    Spend ``spend`` on own shares at ``exec_price``.

    Args:
        state (TrustState): trust before the buy-back
        spend (float): cash spent
        exec_price (float): average execution price
        cash_available (float, optional): cash the trust holds; overspending is
            flagged in the log, not refused

    Returns:
        BuybackOutcome
    """
    if not exec_price > 0:
        raise DomainError("execution price must be positive")
    if spend < 0:
        raise DomainError("spend must be non-negative")
    if cash_available is not None and spend > cash_available:
        warning(f"buy-back spend {spend:,.2f} exceeds available cash {cash_available:,.2f}")
    bought = spend / exec_price
    if bought >= state.shares_out:
        raise DomainError("buy-back would retire every outstanding share")
    return BuybackOutcome(
        shares_bought=bought,
        pct_of_outstanding=bought / state.shares_out,
        new_nav_per_share=(state.asset_value - spend) / (state.shares_out - bought),
    )


def gate_ceiling(state, max_premium=0.0):
    """Share-price ceiling for a valuation-gated programme: NAV * (1 + max_premium)."""
    if max_premium <= -1.0:
        raise DomainError("max_premium must be > -100%")
    return nav_per_share(state) * (1.0 + max_premium)


def hypo_worked_example(asset_value=100e6, shares_out=10e6, spend=10e6, prices=(7.0, 11.0)):
    """
    Rows of the hypothetical trust example: one row per execution price.

    Share counts use the pre-dividend NAV framing (assets 100m, 10m shares).
    """
    rows = []
    for price in prices:
        state = TrustState(asset_value=asset_value, shares_out=shares_out, price=price)
        outcome = buyback_outcome(state, spend, price)
        rows.append({
            "price": price,
            "nav_per_share": nav_per_share(state),
            "discount": discount(state),
            "shares_bought": outcome.shares_bought,
            "pct_of_outstanding": outcome.pct_of_outstanding,
            "new_nav_per_share": outcome.new_nav_per_share,
            "accretive": outcome.new_nav_per_share > nav_per_share(state),
        })
    return rows
