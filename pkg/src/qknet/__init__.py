"""Decentralized quantum kernel learning over simulated noisy nodes."""

from . import config, data, dnet, engine, learn, qkernel, qsim, runner

__all__ = [
    "config", "data", "dnet", "engine", "learn", "qkernel", "qsim", "runner",
]
__version__ = "0.1.0"
