"""Load profiles, bookings, aggregation, biasing and slot recommendation.

Everything in this module is a plain immutable value. Power is integer
watts throughout. Tariff multipliers are quantised to milli-units
(1.000 -> 1000) so that biased values are exact integers and tests can
compare with ``==`` instead of tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence


@dataclass(frozen=True)
class TimeGrid:
    """A fixed future horizon split into equal buckets.

    ``origin`` is the absolute timestamp (seconds) of bucket 0; the grid
    covers [origin, origin + horizon_s).
    """

    horizon_s: int = 900
    bucket_s: int = 30
    origin: int = 0

    def __post_init__(self):
        if self.bucket_s <= 0 or self.horizon_s <= 0:
            raise ValueError("horizon_s and bucket_s must be positive")
        if self.horizon_s % self.bucket_s != 0:
            raise ValueError(
                f"horizon_s ({self.horizon_s}) not divisible by bucket_s ({self.bucket_s})"
            )
        if self.horizon_s // self.bucket_s < 2:
            raise ValueError("grid needs at least 2 buckets")

    @property
    def bucket_count(self) -> int:
        return self.horizon_s // self.bucket_s

    def bucket_of(self, offset_s: int) -> int:
        """Bucket index holding ``offset_s``; the horizon end maps to the last bucket."""
        if offset_s < 0 or offset_s > self.horizon_s:
            raise ValueError(f"offset {offset_s} outside [0, {self.horizon_s}]")
        return min(offset_s // self.bucket_s, self.bucket_count - 1)

    def aligned(self, seconds: int) -> bool:
        return seconds % self.bucket_s == 0

    def at_origin(self, new_origin: int) -> "TimeGrid":
        return TimeGrid(self.horizon_s, self.bucket_s, new_origin)

    def spans_match(self, other: "TimeGrid") -> bool:
        """Same bucket geometry, origin ignored."""
        return self.horizon_s == other.horizon_s and self.bucket_s == other.bucket_s


@dataclass(frozen=True)
class LoadProfile:
    """Predicted per-bucket power draw (watts) over one grid window."""

    grid: TimeGrid
    watts: tuple[int, ...]

    def __post_init__(self):
        if len(self.watts) != self.grid.bucket_count:
            raise ValueError(
                f"expected {self.grid.bucket_count} buckets, got {len(self.watts)}"
            )
        for w in self.watts:
            if w < 0:
                raise ValueError(f"negative watts {w}")

    @property
    def peak_w(self) -> int:
        return max(self.watts)

    @property
    def mean_w(self) -> float:
        return sum(self.watts) / len(self.watts)


@dataclass(frozen=True)
class Booking:
    """A reserved power draw: ``power_w`` for ``duration_s`` starting at
    ``start_offset_s`` from the grid origin."""

    booking_id: str
    appliance_id: str
    start_offset_s: int
    duration_s: int
    power_w: int

    def __post_init__(self):
        if self.power_w <= 0:
            raise ValueError("power_w must be > 0")
        if self.duration_s <= 0:
            raise ValueError("duration_s must be > 0")
        if self.start_offset_s < 0:
            raise ValueError("start_offset_s must be >= 0")

    def check_against(self, grid: TimeGrid) -> None:
        """Raise ValueError unless the booking is aligned and inside the horizon."""
        if not grid.aligned(self.start_offset_s) or not grid.aligned(self.duration_s):
            raise ValueError(
                f"booking {self.booking_id} not aligned to {grid.bucket_s}s buckets"
            )
        if self.start_offset_s + self.duration_s > grid.horizon_s:
            raise ValueError(
                f"booking {self.booking_id} ends at "
                f"{self.start_offset_s + self.duration_s}s, beyond {grid.horizon_s}s horizon"
            )


@dataclass(frozen=True)
class Tariff:
    """Per-bucket price multipliers in milli-units (1000 == neutral 1.0)."""

    milli: tuple[int, ...]

    def __post_init__(self):
        for m in self.milli:
            if m < 0:
                raise ValueError("tariff multipliers must be >= 0")

    @classmethod
    def neutral(cls, bucket_count: int) -> "Tariff":
        return cls((1000,) * bucket_count)

    @classmethod
    def from_multipliers(cls, multipliers: Iterable[float]) -> "Tariff":
        """Quantise decimal multipliers to 3 fractional digits."""
        return cls(tuple(round(m * 1000) for m in multipliers))

    @property
    def multipliers(self) -> tuple[float, ...]:
        return tuple(m / 1000 for m in self.milli)

    def __len__(self) -> int:
        return len(self.milli)


@dataclass(frozen=True)
class BiasedProfile:
    """Pool aggregate after tariff weighting, with the raw aggregate kept.

    ``biased_milli[i] == raw.watts[i] * tariff_milli[i]`` — milli bias-units,
    i.e. 1000 * (watts x multiplier). ``cap_w`` is advisory only.
    """

    grid: TimeGrid
    biased_milli: tuple[int, ...]
    raw: LoadProfile
    cap_w: Optional[int] = None

    def __post_init__(self):
        if len(self.biased_milli) != self.grid.bucket_count:
            raise ValueError("biased length does not match grid")
        if self.raw.grid != self.grid:
            raise ValueError("raw profile grid does not match")
        for b in self.biased_milli:
            if b < 0:
                raise ValueError("negative biased value")
        if self.cap_w is not None and self.cap_w <= 0:
            raise ValueError("cap_w must be > 0 when present")

    @property
    def biased(self) -> tuple[float, ...]:
        """Biased values in bias-units (watts x multiplier)."""
        return tuple(b / 1000 for b in self.biased_milli)


@dataclass(frozen=True)
class FrictionSample:
    """What the kettle dial feels at one angle."""

    angle_deg: float
    offset_s: int
    friction: float
    over_cap: bool

    def __post_init__(self):
        if not 0.0 <= self.friction <= 1.0:
            raise ValueError("friction outside [0, 1]")


def empty_profile(grid: TimeGrid) -> LoadProfile:
    """All-zero profile on ``grid``."""
    return LoadProfile(grid, (0,) * grid.bucket_count)


def apply_booking(profile: LoadProfile, booking: Booking, sign: int = 1) -> LoadProfile:
    """Add (sign=+1) or remove (sign=-1) a booking's draw from a profile.

    Removal is only valid for a booking previously applied; a removal that
    would drive any bucket negative signals bookkeeping corruption and
    raises.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    booking.check_against(profile.grid)
    grid = profile.grid
    first = booking.start_offset_s // grid.bucket_s
    last = (booking.start_offset_s + booking.duration_s) // grid.bucket_s  # exclusive
    watts = list(profile.watts)
    for i in range(first, last):
        watts[i] += sign * booking.power_w
        if watts[i] < 0:
            raise ValueError(
                f"removing booking {booking.booking_id} drives bucket {i} negative"
            )
    return LoadProfile(grid, tuple(watts))


def aggregate(profiles: Sequence[LoadProfile], grid: TimeGrid) -> LoadProfile:
    """Per-bucket sum of profiles sharing ``grid``; empty input sums to zero."""
    total = [0] * grid.bucket_count
    for p in profiles:
        if p.grid != grid:
            raise ValueError(f"profile grid {p.grid} does not match {grid}")
        for i, w in enumerate(p.watts):
            total[i] += w
    return LoadProfile(grid, tuple(total))


def bias(agg: LoadProfile, tariff: Tariff, cap_w: Optional[int] = None) -> BiasedProfile:
    """Weight an aggregate by the tariff and annotate the power cap.

    The cap is carried through unmodified: nothing is clipped, downstream
    consumers only flag buckets at or over it.
    """
    if len(tariff) != agg.grid.bucket_count:
        raise ValueError(
            f"tariff has {len(tariff)} entries, grid has {agg.grid.bucket_count} buckets"
        )
    biased = tuple(w * m for w, m in zip(agg.watts, tariff.milli))
    return BiasedProfile(grid=agg.grid, biased_milli=biased, raw=agg, cap_w=cap_w)


def angle_to_offset(angle_deg: float, grid: TimeGrid) -> int:
    """Map a dial angle to a bucket-aligned time offset.

    Linear map 0..360 degrees -> 0..horizon seconds, rounded to the nearest
    bucket boundary (half rounds up). Out-of-range angles clamp.
    """
    angle = min(max(angle_deg, 0.0), 360.0)
    buckets = angle / 360.0 * grid.bucket_count
    k = int(buckets + 0.5)
    return k * grid.bucket_s


def offset_to_angle(offset_s: int, grid: TimeGrid) -> float:
    """Inverse of :func:`angle_to_offset` for aligned offsets."""
    if offset_s < 0 or offset_s > grid.horizon_s:
        raise ValueError(f"offset {offset_s} outside [0, {grid.horizon_s}]")
    return offset_s / grid.horizon_s * 360.0


def friction_at(bp: BiasedProfile, angle_deg: float) -> FrictionSample:
    """Sample the dial resistance felt at ``angle_deg``.

    Friction is the biased load at the mapped bucket, normalised by the
    window maximum (0 when the window is empty), so the feel is relative
    and unit-free. ``over_cap`` flags buckets whose raw load is at or over
    the contract cap.
    """
    angle = min(max(angle_deg, 0.0), 360.0)
    offset = angle_to_offset(angle, bp.grid)
    bucket = bp.grid.bucket_of(offset)
    top = max(bp.biased_milli)
    friction = bp.biased_milli[bucket] / top if top > 0 else 0.0
    over = bp.cap_w is not None and bp.raw.watts[bucket] >= bp.cap_w
    return FrictionSample(angle_deg=angle, offset_s=offset, friction=friction, over_cap=over)


def recommend_slot(
    bp: BiasedProfile,
    duration_s: int,
    power_w: int,
    earliest_offset_s: int = 0,
) -> int:
    """Pick the start offset that burdens the pool least.

    Scans every bucket-aligned start >= ``earliest_offset_s`` and minimises
    the peak of (raw + this booking) over the buckets the booking would
    cover. Equal raw peaks are broken by the lower biased (price-weighted)
    peak in the window, and remaining ties go to the earliest offset, since
    sooner delivery is always preferred.
    """
    grid = bp.grid
    if not grid.aligned(duration_s) or not grid.aligned(earliest_offset_s):
        raise ValueError("duration and earliest offset must be bucket-aligned")
    if duration_s <= 0 or power_w <= 0:
        raise ValueError("duration_s and power_w must be > 0")
    if earliest_offset_s < 0 or earliest_offset_s + duration_s > grid.horizon_s:
        raise ValueError(
            f"no feasible placement: {duration_s}s from {earliest_offset_s}s "
            f"exceeds {grid.horizon_s}s horizon"
        )
    raw = bp.raw.watts
    k = duration_s // grid.bucket_s
    best_key = None
    best_offset = earliest_offset_s
    for first in range(earliest_offset_s // grid.bucket_s, grid.bucket_count - k + 1):
        key = (
            power_w + max(raw[first:first + k]),
            max(bp.biased_milli[first:first + k]),
        )
        if best_key is None or key < best_key:
            best_key = key
            best_offset = first * grid.bucket_s
    return best_offset


def advance(profile: LoadProfile, new_origin: int) -> LoadProfile:
    """Slide the window forward to ``new_origin``.

    Buckets shift left; vacated trailing buckets are zero, dropped leading
    buckets are discarded. The shift must be non-negative and bucket-aligned.
    """
    grid = profile.grid
    delta = new_origin - grid.origin
    if delta < 0:
        raise ValueError("cannot advance backwards")
    if not grid.aligned(delta):
        raise ValueError(f"origin shift {delta}s not aligned to {grid.bucket_s}s buckets")
    shift = delta // grid.bucket_s
    if shift == 0:
        return LoadProfile(grid.at_origin(new_origin), profile.watts)
    if shift >= grid.bucket_count:
        return empty_profile(grid.at_origin(new_origin))
    watts = profile.watts[shift:] + (0,) * shift
    return LoadProfile(grid.at_origin(new_origin), watts)


def profile_from_intervals(
    grid: TimeGrid, intervals: Iterable[tuple[int, int, int]]
) -> LoadProfile:
    """Build a profile from absolute-time draws, clipping to the window.

    ``intervals`` are (start_abs_s, duration_s, power_w) with bucket-aligned
    starts and durations; parts outside [origin, origin + horizon) are
    dropped. This is the recompute-from-scratch path services use as their
    source of truth.
    """
    watts = [0] * grid.bucket_count
    window_end = grid.origin + grid.horizon_s
    for start_abs, duration_s, power_w in intervals:
        lo = max(start_abs, grid.origin)
        hi = min(start_abs + duration_s, window_end)
        if hi <= lo:
            continue
        first = (lo - grid.origin) // grid.bucket_s
        last = -(-(hi - grid.origin) // grid.bucket_s)  # ceil, exclusive
        for i in range(first, last):
            watts[i] += power_w
    return LoadProfile(grid, tuple(watts))
