"""Process-wide runtime knobs."""

from __future__ import annotations

import os

from .errors import ConfigError

THREADS_ENV = "AFFINE_DYNKIN_THREADS"


def worker_count() -> int:
    """Number of workers for internal sweeps, capped by AFFINE_DYNKIN_THREADS."""
    n = os.cpu_count() or 1
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
        if cap < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1, got {cap}")
        n = min(n, cap)
    return n
