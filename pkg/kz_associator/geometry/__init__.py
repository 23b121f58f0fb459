"""Paths, logarithmic connections and parallel transport."""

from .connections import FormalConnection, kz_connection, pull_back_to_path
from .paths import PiecewisePath
from .transport import Propagator, propagate

__all__ = ['FormalConnection', 'kz_connection', 'pull_back_to_path', 'PiecewisePath', 'Propagator', 'propagate']
