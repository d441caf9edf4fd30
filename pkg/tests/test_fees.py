import doctest

import pytest
from hypothesis import given
from hypothesis import strategies as st

from core import fees
from core.fees import (
    UK_STAMP,
    FeeKind,
    FeeTerms,
    TaxTerms,
    agency_multiple,
    compute_fee_bps,
    cost_breakdown,
    retained_outperformance_bps,
)
from core.utils.errors import ConfigurationError, DomainError

GUARANTEE_40 = FeeTerms(FeeKind.VWAP_GUARANTEE, guarantee_bps=40)
MINUS_30_70 = FeeTerms(FeeKind.VWAP_MINUS, guarantee_bps=30, share_pct=0.7)


def test_guarantee_broker_keeps_everything_above_guarantee():
    assert compute_fee_bps(100, GUARANTEE_40) == pytest.approx(60.0)


def test_minus_broker_keeps_share_above_guarantee():
    assert compute_fee_bps(100, MINUS_30_70) == pytest.approx(49.0)


def test_fee_is_zero_when_guarantee_met_exactly():
    assert compute_fee_bps(40, GUARANTEE_40) == 0.0
    assert compute_fee_bps(30, MINUS_30_70) == 0.0


def test_shortfall_is_owed_unless_clamped():
    assert compute_fee_bps(10, GUARANTEE_40) == pytest.approx(-30.0)
    clamped = FeeTerms(FeeKind.VWAP_GUARANTEE, guarantee_bps=40, allow_negative_fee=False)
    assert compute_fee_bps(10, clamped) == 0.0


def test_flat_agency_ignores_performance():
    terms = FeeTerms(FeeKind.FLAT_AGENCY, agency_bps=3)
    assert compute_fee_bps(-50, terms) == compute_fee_bps(500, terms) == 3.0


def test_doc_examples():
    assert doctest.testmod(fees).failed == 0


@given(out=st.floats(-500, 500), g=st.floats(0, 200), share=st.floats(0, 1))
def test_minus_never_costs_more_than_guarantee(out, g, share):
    minus = FeeTerms(FeeKind.VWAP_MINUS, guarantee_bps=g, share_pct=share)
    guarantee = FeeTerms(FeeKind.VWAP_GUARANTEE, guarantee_bps=g)
    assert compute_fee_bps(out, minus) <= compute_fee_bps(out, guarantee) + 1e-9


@given(a=st.floats(-500, 500), b=st.floats(-500, 500), g=st.floats(0, 200), share=st.floats(0, 1))
def test_fee_is_monotone_in_outperformance(a, b, g, share):
    low, high = sorted((a, b))
    for terms in (FeeTerms(FeeKind.VWAP_MINUS, guarantee_bps=g, share_pct=share),
                  FeeTerms(FeeKind.VWAP_GUARANTEE, guarantee_bps=g)):
        assert compute_fee_bps(low, terms) <= compute_fee_bps(high, terms) + 1e-9


@given(out=st.floats(30, 500))
def test_retained_outperformance_identity(out):
    retained = retained_outperformance_bps(out, MINUS_30_70)
    assert retained == pytest.approx((out - 30) * 0.3 + 30, abs=1e-9)


def test_cost_breakdown_with_stamp_duty():
    costs = cost_breakdown(184e6, 100, MINUS_30_70, UK_STAMP)
    assert costs.stamp == pytest.approx(0.92e6)
    assert costs.fee == pytest.approx(184e6 * 49 / 10_000)
    assert costs.total_cost == pytest.approx(184e6 + 0.92e6 + costs.fee)
    assert costs.fee_bps_of_gross == pytest.approx(49.0)
    assert not costs.fees_paid_outside_capital


def test_cost_breakdown_rejects_empty_programme():
    with pytest.raises(DomainError):
        cost_breakdown(0.0, 10, GUARANTEE_40, TaxTerms())


def test_agency_multiple():
    assert agency_multiple(300, 10) == pytest.approx(30.0)
    with pytest.raises(DomainError):
        agency_multiple(300, 0)


def test_terms_validation():
    with pytest.raises(ConfigurationError) as info:
        FeeTerms(FeeKind.VWAP_MINUS, share_pct=1.5)
    assert info.value.field == "share_pct"
    with pytest.raises(ConfigurationError):
        TaxTerms(stamp_bps=-1)
