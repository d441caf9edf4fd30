"""
Forensics on daily buy-back disclosure tapes.

A tape is a CSV of the company's daily filings (one row per trading day with
purchases). From it the audit rebuilds the average purchase price, the bogus
and institutional benchmarks, the outperformance, the implied broker fee and
the "what if one more day" sensitivities a broker faces late in a programme.

Tape schema (version 1.0)::

    # tape-schema: 1.0                      (optional first line)
    date,shares,avg_price,value,market_vwap,market_volume
    2023-01-03,125000,20.01,,20.05,4100000

``date`` and ``shares`` are required, plus at least one of ``avg_price`` /
``value``; the market columns are optional. Amounts are parsed as decimal
strings.
"""

import io
import math
from dataclasses import dataclass, field, asdict
from datetime import date
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from packaging.version import InvalidVersion, Version

from core.benchmarks import bogus_benchmark, institutional_vwap
from core.config.config_manager import get_config_manager
from core.fees import BPS
from core.utils.errors import DomainError, ValidationError
from core.utils.logger import debug, warning

# Fallback when config.json has no tape_schema_version
TAPE_SCHEMA_VERSION = "1.0"
TAPE_COLUMNS = ["date", "shares", "avg_price", "value", "market_vwap", "market_volume"]
SCHEMA_PREFIX = "# tape-schema:"
MONEY_TOLERANCE = 0.005


@dataclass(frozen=True)
class DisclosureRecord:
    trade_date: date
    shares: float
    avg_price: Optional[float] = None
    value: Optional[float] = None
    daily_market_vwap: Optional[float] = None
    daily_market_volume: Optional[float] = None

    @property
    def gross(self):
        return self.value if self.value is not None else self.shares * self.avg_price

    @property
    def price(self):
        return self.avg_price if self.avg_price is not None else self.value / self.shares


@dataclass(frozen=True)
class ImpliedFee:
    fee: float
    fee_pct: float
    flagged: bool = False


@dataclass(frozen=True)
class AuditSnapshot:
    pct_value_executed: float
    pct_time_expired: float
    elapsed_days: int
    total_allowed_days: int
    avg_price: float
    benchmark: float
    outperformance: float
    last_price: float

    def __post_init__(self):
        if not 0.0 <= self.pct_value_executed <= 1.0:
            raise DomainError("pct_value_executed must be in [0, 1]")
        if self.elapsed_days > self.total_allowed_days:
            raise DomainError("elapsed_days exceeds total_allowed_days")


@dataclass(frozen=True)
class CompletionProfile:
    points: tuple
    completion_pct_time: Optional[float]


@dataclass
class AuditReport:
    n_records: int
    first_date: str
    last_date: str
    gross_value: float
    shares: float
    avg_price: float
    benchmark: Optional[float] = None
    institutional_vwap: Optional[float] = None
    outperformance: Optional[float] = None
    implied_fee: Optional[ImpliedFee] = None
    implied_fee_range: Optional[tuple] = None
    fees_paid_outside_capital: bool = False
    completion: Optional[CompletionProfile] = None
    snapshot: Optional[AuditSnapshot] = None
    sensitivities: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self):
        data = asdict(self)
        for key in ("gross_value",):
            data[key] = round(data[key], 2)
        if self.implied_fee is not None:
            data["implied_fee"]["fee"] = round(self.implied_fee.fee, 2)
        if self.completion is not None:
            data["completion"]["points"] = [list(p) for p in self.completion.points]
        data["money_tolerance"] = MONEY_TOLERANCE
        return data

    def to_text(self):
        lines = [
            f"Records            : {self.n_records} ({self.first_date} .. {self.last_date})",
            f"Gross value        : {self.gross_value:,.2f}",
            f"Shares             : {self.shares:,.0f}",
            f"Average price (A)  : {self.avg_price:.4f}",
        ]
        if self.benchmark is not None:
            lines.append(f"Bogus benchmark (B): {self.benchmark:.4f}")
        if self.institutional_vwap is not None:
            lines.append(f"Institutional VWAP : {self.institutional_vwap:.4f}")
        if self.outperformance is not None:
            lines.append(f"Outperformance (O) : {self.outperformance:.2%}")
        if self.implied_fee is not None:
            flag = "  [FLAGGED: negative]" if self.implied_fee.flagged else ""
            lines.append(f"Implied fee        : {self.implied_fee.fee:,.2f} "
                         f"({self.implied_fee.fee_pct:.2%}){flag}")
        if self.implied_fee_range is not None:
            lo, hi = self.implied_fee_range
            lines.append(f"Implied fee range  : {lo:,.2f} .. {hi:,.2f}")
        if self.completion is not None and self.completion.completion_pct_time is not None:
            lines.append(f"Completed at       : {self.completion.completion_pct_time:.1%} of allowed time")
        for name, item in self.sensitivities.items():
            side = "broker-favourable" if item["broker_favorable"] else "against broker"
            lines.append(f"{name:<19}: {item['value']:+.4%} ({side})")
        lines.extend(f"Note: {n}" for n in self.notes)
        return "\n".join(lines)


def tape_schema_version():
    """Tape schema version this build writes and accepts (major-compatible), from config.json."""
    return str(get_config_manager().get("tape_schema_version", TAPE_SCHEMA_VERSION))


def _check_schema(line, line_no):
    raw = line[len(SCHEMA_PREFIX):].strip()
    expected = Version(tape_schema_version())
    try:
        found = Version(raw)
    except InvalidVersion as e:
        raise ValidationError(f"unreadable tape schema version '{raw}'", line_no) from e
    if found.major != expected.major:
        raise ValidationError(f"tape schema {found} is not compatible with {expected}", line_no)


def _decimal(raw, column, line_no, required=True):
    raw = raw.strip()
    if raw == "":
        if required:
            raise ValidationError(f"missing {column}", line_no)
        return None
    try:
        number = Decimal(raw)
    except InvalidOperation as e:
        raise ValidationError(f"{column} '{raw}' is not a number", line_no) from e
    if not number.is_finite() or number <= 0:
        raise ValidationError(f"{column} must be positive, got {raw}", line_no)
    return float(number)


def parse_tape(source):
    """
    Parse and validate a disclosure tape.

    Args:
        source: path to a CSV file, or a file-like object

    Returns:
        list[DisclosureRecord]
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not any(line.strip() for line in lines):
        raise ValidationError("empty tape")

    offset = 0
    if lines[0].startswith(SCHEMA_PREFIX):
        _check_schema(lines[0], 1)
        offset = 1
    elif lines[0].startswith("#"):
        raise ValidationError("unrecognised comment line before the header", 1)

    body = "\n".join(lines[offset:])
    if not body.strip():
        raise ValidationError("empty tape")
    frame = pd.read_csv(io.StringIO(body), dtype=str, keep_default_na=False,
                        skip_blank_lines=True)
    columns = [c.strip() for c in frame.columns]
    frame.columns = columns
    missing = [c for c in ("date", "shares") if c not in columns]
    if missing:
        raise ValidationError(f"missing required column(s): {', '.join(missing)}", offset + 1)
    if "avg_price" not in columns and "value" not in columns:
        raise ValidationError("one of avg_price / value columns is required", offset + 1)
    if frame.empty:
        raise ValidationError("empty tape")

    records = []
    previous = None
    for i, row in enumerate(frame.to_dict("records")):
        line_no = offset + 2 + i
        try:
            trade_date = date.fromisoformat(row["date"].strip())
        except ValueError as e:
            raise ValidationError(f"bad date '{row['date']}'", line_no) from e
        if previous is not None and trade_date <= previous:
            raise ValidationError(f"date {trade_date} is not after {previous}", line_no)
        previous = trade_date

        shares = _decimal(row["shares"], "shares", line_no)
        avg_price = _decimal(row.get("avg_price", ""), "avg_price", line_no, required=False)
        value = _decimal(row.get("value", ""), "value", line_no, required=False)
        if avg_price is None and value is None:
            raise ValidationError("row needs avg_price or value", line_no)
        records.append(DisclosureRecord(
            trade_date=trade_date,
            shares=shares,
            avg_price=avg_price,
            value=value,
            daily_market_vwap=_decimal(row.get("market_vwap", ""), "market_vwap", line_no, False),
            daily_market_volume=_decimal(row.get("market_volume", ""), "market_volume", line_no, False),
        ))
    debug(f"Parsed {len(records)} tape records")
    return records


def write_tape(records, destination):
    """Write records in the versioned tape format."""
    frame = pd.DataFrame(
        [{
            "date": r.trade_date.isoformat(),
            "shares": r.shares,
            "avg_price": r.avg_price,
            "value": r.value,
            "market_vwap": r.daily_market_vwap,
            "market_volume": r.daily_market_volume,
        } for r in records],
        columns=TAPE_COLUMNS,
    )
    text = f"{SCHEMA_PREFIX} {tape_schema_version()}\n" + frame.to_csv(index=False)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text, encoding="utf-8")


def records_from_blotter(blotter, path=None, start_date="2024-01-02"):
    """Turn a strategy blotter into disclosure records dated on business days."""
    dates = pd.bdate_range(start=start_date, periods=blotter.window_days)
    records = []
    for f in blotter.fills:
        if f.shares <= 0:
            continue
        day = path.days[f.day_index] if path is not None else None
        records.append(DisclosureRecord(
            trade_date=dates[f.day_index].date(),
            shares=f.shares,
            avg_price=f.fill_price,
            value=f.value,
            daily_market_vwap=day.vwap if day else None,
            daily_market_volume=day.volume if day else None,
        ))
    return records


def _elapsed_days(records):
    """Trading day number (1-based, business days) of every record."""
    start = np.datetime64(records[0].trade_date, "D")
    ends = np.array([np.datetime64(r.trade_date, "D") for r in records])
    return np.busday_count(start, ends) + 1


def tape_totals(records):
    """(gross value, shares, average price) of a tape."""
    if not records:
        raise DomainError("tape is empty")
    gross = math.fsum(r.gross for r in records)
    shares = math.fsum(r.shares for r in records)
    return gross, shares, gross / shares


def implied_fee(total_returned, gross_value, stamp_bps):
    """
    Fee implied by the reported total returned, after stamp duty.

    A negative result is returned as-is and flagged.
    """
    if not gross_value > 0:
        raise DomainError("gross value must be positive")
    if total_returned < gross_value:
        raise DomainError("total returned is below the gross purchase value")
    fee = total_returned - gross_value * (1.0 + stamp_bps / BPS)
    flagged = fee < -MONEY_TOLERANCE
    if flagged:
        warning(f"negative implied fee {fee:,.2f}: reported totals are inconsistent")
    return ImpliedFee(fee=fee, fee_pct=fee / gross_value, flagged=flagged)


def implied_fee_range(gross_value, stamp_bps, total_returned=None, reported_costs=()):
    """
    Range of fees implied by every reported figure.

    ``reported_costs`` are all-in costs (fee plus stamp) quoted elsewhere in the
    filings; each is an independent estimate of the same fee.
    """
    stamp = gross_value * stamp_bps / BPS
    candidates = [cost - stamp for cost in reported_costs]
    if total_returned is not None:
        candidates.append(implied_fee(total_returned, gross_value, stamp_bps).fee)
    if not candidates:
        return None
    return min(candidates), max(candidates)


def snapshot_from_published(value_pct, time_pct, outperformance, price_to_benchmark,
                            total_allowed_days, benchmark=1.0):
    """
    AuditSnapshot from the four published aggregates, benchmark normalised to 1.

    Elapsed days are ``round(time_pct * total_allowed_days)``.
    """
    return AuditSnapshot(
        pct_value_executed=value_pct,
        pct_time_expired=time_pct,
        elapsed_days=int(round(time_pct * total_allowed_days)),
        total_allowed_days=total_allowed_days,
        avg_price=benchmark * (1.0 - outperformance),
        benchmark=benchmark,
        outperformance=outperformance,
        last_price=benchmark * (1.0 + price_to_benchmark),
    )


def snapshot_from_tape(records, total_allowed_days, at_value_fraction=0.9, target_value=None):
    """Snapshot at the first day the executed value reaches ``at_value_fraction``."""
    gross, _, _ = tape_totals(records)
    target = target_value or gross
    elapsed = _elapsed_days(records)
    cumulative = np.cumsum([r.gross for r in records]) / target
    hits = np.nonzero(cumulative >= at_value_fraction - 1e-12)[0]
    index = int(hits[0]) if hits.size else len(records) - 1
    upto = records[: index + 1]

    prices = [r.daily_market_vwap for r in upto]
    if any(p is None for p in prices):
        warning("tape lacks market VWAPs; using purchase prices as the daily VWAP proxy")
        prices = [r.daily_market_vwap or r.price for r in upto]
    part_gross, part_shares, avg_price = tape_totals(upto)
    benchmark = bogus_benchmark(prices)
    return AuditSnapshot(
        pct_value_executed=min(part_gross / target, 1.0),
        pct_time_expired=int(elapsed[index]) / total_allowed_days,
        elapsed_days=int(elapsed[index]),
        total_allowed_days=total_allowed_days,
        avg_price=avg_price,
        benchmark=benchmark,
        outperformance=(benchmark - avg_price) / benchmark,
        last_price=prices[-1],
    )


def benchmark_day_sensitivity(snapshot):
    """
    Benchmark move from appending one more day at the last price.

    Signed (B - p) / ((d + 1) * B): positive when the last price is below the
    benchmark.
    """
    d = snapshot.elapsed_days
    if d < 1:
        raise DomainError("need at least one elapsed day")
    b, p = snapshot.benchmark, snapshot.last_price
    return (b - p) / ((d + 1) * b)


def _avg_after(snapshot, delta_value_pct):
    f, a, p = snapshot.pct_value_executed, snapshot.avg_price, snapshot.last_price
    if not f > 0:
        raise DomainError("no value executed yet")
    return (f + delta_value_pct) / (f / a + delta_value_pct / p)


def avg_price_sensitivity(snapshot, delta_value_pct=0.01):
    """Relative fall of the average price after buying ``delta_value_pct`` more at p."""
    a = snapshot.avg_price
    return (a - _avg_after(snapshot, delta_value_pct)) / a


def performance_sensitivity(snapshot, delta_value_pct=0.01):
    """Relative change of outperformance after buying ``delta_value_pct`` more at p."""
    o = snapshot.outperformance
    if o == 0:
        raise DomainError("sensitivity is undefined at zero outperformance")
    new_o = 1.0 - _avg_after(snapshot, delta_value_pct) / snapshot.benchmark
    return (new_o - o) / o


def sensitivity_table(snapshot, delta_value_pct=0.01):
    """
    The three late-programme sensitivities with a direction flag.

    ``broker_favorable`` says whether the move raises the broker's outperformance:
    a higher benchmark, or a lower average price.
    """
    day = benchmark_day_sensitivity(snapshot)
    avg = avg_price_sensitivity(snapshot, delta_value_pct)
    table = {
        "benchmark_day": {"value": day, "broker_favorable": day < 0},
        "avg_price": {"value": avg, "broker_favorable": avg > 0},
    }
    if snapshot.outperformance != 0:
        perf = performance_sensitivity(snapshot, delta_value_pct)
        table["performance"] = {"value": perf, "broker_favorable": perf > 0}
    return table


def completion_profile(records, total_allowed_days):
    """Cumulative value fraction against allowed-time fraction, one point per record."""
    if not records:
        raise DomainError("tape is empty")
    gross, _, _ = tape_totals(records)
    elapsed = _elapsed_days(records)
    cumulative = np.cumsum([r.gross for r in records]) / gross
    points = tuple(
        (float(d) / total_allowed_days, float(c)) for d, c in zip(elapsed, cumulative)
    )
    done = [t for t, v in points if v >= 1.0 - 1e-12]
    return CompletionProfile(points=points, completion_pct_time=done[0] if done else None)


def completion_frame(profile):
    return pd.DataFrame(profile.points, columns=["pct_time", "pct_value"])


def build_audit_report(records, total_allowed_days, total_returned=None, stamp_bps=0.0,
                       reported_costs=(), at_value_fraction=0.9,
                       fees_paid_outside_capital=False):
    """Everything the audit can say about one tape."""
    gross, shares, avg_price = tape_totals(records)
    report = AuditReport(
        n_records=len(records),
        first_date=records[0].trade_date.isoformat(),
        last_date=records[-1].trade_date.isoformat(),
        gross_value=gross,
        shares=shares,
        avg_price=avg_price,
        fees_paid_outside_capital=fees_paid_outside_capital,
    )

    if all(r.daily_market_vwap is not None for r in records):
        report.benchmark = bogus_benchmark([r.daily_market_vwap for r in records])
        report.outperformance = (report.benchmark - avg_price) / report.benchmark
        if all(r.daily_market_volume is not None for r in records):
            report.institutional_vwap = institutional_vwap(
                (r.daily_market_vwap, r.daily_market_volume) for r in records)
    else:
        report.notes.append("market VWAP column incomplete; benchmark not computed")

    if total_returned is not None:
        report.implied_fee = implied_fee(total_returned, gross, stamp_bps)
        report.implied_fee_range = implied_fee_range(gross, stamp_bps, total_returned,
                                                     reported_costs)
        lo, hi = report.implied_fee_range
        if hi - lo > MONEY_TOLERANCE:
            report.notes.append(
                f"reported figures imply fees from {lo:,.2f} to {hi:,.2f} "
                f"({lo / gross:.2%} .. {hi / gross:.2%} of gross)")
        if fees_paid_outside_capital:
            report.notes.append("fee paid by the company outside the buy-back allocation")

    report.completion = completion_profile(records, total_allowed_days)
    snapshot = snapshot_from_tape(records, total_allowed_days, at_value_fraction)
    report.snapshot = snapshot
    if snapshot.elapsed_days >= 1:
        report.sensitivities = sensitivity_table(snapshot)
    return report
