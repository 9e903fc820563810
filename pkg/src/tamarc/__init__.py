"""Rate regions, converse bounds, and link simulation for the
time-asynchronous Gaussian multiple-access relay channel."""

__version__ = "0.1.0"

from .errors import BudgetError, PowerViolation, ValidationError
from .model import (
    ChannelParams,
    CodewordBlock,
    DelayProfile,
    IntervalPartition,
    SourceModel,
    dft,
    dsbs,
    idft,
    transmit,
    transmit_cyclic,
    transmit_sliced,
)

__all__ = [
    "BudgetError",
    "ChannelParams",
    "CodewordBlock",
    "DelayProfile",
    "IntervalPartition",
    "PowerViolation",
    "SourceModel",
    "ValidationError",
    "dft",
    "dsbs",
    "idft",
    "transmit",
    "transmit_cyclic",
    "transmit_sliced",
]
