"""Learned candidate sampling and solver warm starts for swarmplan."""

from .errors import TrainerError

__all__ = ["TrainerError"]
