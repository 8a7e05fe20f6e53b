"""Pooled appliance slot booking with a socially aware kettle front end."""

from .profiles import (
    BiasedProfile,
    Booking,
    FrictionSample,
    LoadProfile,
    Tariff,
    TimeGrid,
    advance,
    aggregate,
    angle_to_offset,
    apply_booking,
    bias,
    empty_profile,
    friction_at,
    offset_to_angle,
    recommend_slot,
)

__all__ = [
    "BiasedProfile",
    "Booking",
    "FrictionSample",
    "LoadProfile",
    "Tariff",
    "TimeGrid",
    "advance",
    "aggregate",
    "angle_to_offset",
    "apply_booking",
    "bias",
    "empty_profile",
    "friction_at",
    "offset_to_angle",
    "recommend_slot",
]

__version__ = "0.1.0"
