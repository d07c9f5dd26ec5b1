"""Multi-speed semilinear wave systems outside the unit ball."""

from __future__ import annotations

__version__ = "0.1.0"
