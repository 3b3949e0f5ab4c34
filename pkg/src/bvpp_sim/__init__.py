"""Building virtual power plant simulation toolkit.

Two pipelines share one set of primitives:

* market participation: buildings schedule their own appliances against a
  retail TOU tariff and a feed-in tariff, the operator pools the surplus,
  dispatches a feeder battery and bids the result into a day-ahead market;
* knowledge sharing: households are clustered on daily energy and cost,
  inefficient ones are flagged and receive timing plans borrowed from
  similar, efficient peers.
"""

from bvpp_sim.errors import (
    BvppError,
    BvppWarning,
    ConfigError,
    DegenerateInput,
    DegenerateRegression,
    GridMismatch,
    InfeasibleSpec,
    InfeasibleWindow,
    NegativeProfitWarning,
    NoEligiblePeers,
    UnknownAppliance,
)
from bvpp_sim.grid import LoadProfile, NetLoadProfile, TimeGrid

__version__ = "0.1.0"

__all__ = [
    "BvppError",
    "BvppWarning",
    "ConfigError",
    "DegenerateInput",
    "DegenerateRegression",
    "GridMismatch",
    "InfeasibleSpec",
    "InfeasibleWindow",
    "LoadProfile",
    "NegativeProfitWarning",
    "NetLoadProfile",
    "NoEligiblePeers",
    "TimeGrid",
    "UnknownAppliance",
    "__version__",
]
