"""Toolkit for studying conversational inertia in multi-turn agents.

Provides the conversation data model, round-level context policies
(long / window / clip / summary), deterministic text-game environments,
a scripted-or-endpoint episode runner, preference-pair dataset
construction, attention-ratio analytics, and a prefill cost simulator.
"""

__version__ = "0.1.0"

from inertia.errors import ConfigError, ContractError, ProtocolError, TransportError

__all__ = [
    "__version__",
    "ConfigError",
    "ContractError",
    "ProtocolError",
    "TransportError",
]
