class BvppError(Exception):
    pass


class GridMismatch(BvppError, ValueError):
    pass


class UnknownAppliance(BvppError, KeyError):
    def __str__(self):
        return f"unknown appliance name {self.args[0]!r}; set 'category' explicitly"


class InfeasibleWindow(BvppError, ValueError):
    pass


class InfeasibleSpec(BvppError, ValueError):
    pass


class DegenerateInput(BvppError, ValueError):
    pass


class DegenerateRegression(BvppError, ValueError):
    pass


class ConfigError(BvppError, ValueError):
    """Invalid scenario configuration.

    ``field`` is a dotted path into the config document, e.g.
    ``fleet.households[3].appliances[0].duration``.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class BvppWarning(UserWarning):
    pass


class NegativeProfitWarning(BvppWarning):
    pass


class NoEligiblePeers(BvppWarning):
    pass
