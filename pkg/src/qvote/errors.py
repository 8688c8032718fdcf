"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised when inputs violate a protocol or state-space contract.

    The CLI maps this to exit code 2; everything else that goes wrong in a
    run is reported through result values, not exceptions.
    """
