"""Shared exception types."""


class ContractError(ValueError):
    """An operation was called with arguments that violate its contract."""


class ConfigError(ValueError):
    """A configuration object or spec string is invalid."""


class TransportError(RuntimeError):
    """A chat endpoint could not be reached or returned an HTTP error."""


class ProtocolError(RuntimeError):
    """A chat endpoint answered with a body we cannot interpret."""
