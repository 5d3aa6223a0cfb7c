"""Text-game reinforcement learning on the SaladWorld levels."""

__version__ = "0.1.0"
