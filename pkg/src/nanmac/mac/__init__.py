"""MAC protocol state machines and the network that hosts them."""
from .network import Network, SimResult, simulate

__all__ = ["Network", "SimResult", "simulate"]
