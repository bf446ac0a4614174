"""
Exception types shared across becsim.

Decode failures are not exceptions: protocols report them as values. These types
cover the cases where a run cannot start or produced something impossible.
"""


class ConfigurationError(ValueError):
    """Parameters, preconditions or config files that a run cannot start from."""


class RegimeError(ConfigurationError):
    """A region or corner formula was evaluated outside its stated regime."""


class DecodeMismatchError(AssertionError):
    """A protocol reported success but decoded bits differ from the transmitted ones."""
