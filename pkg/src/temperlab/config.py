"""Session-wide tolerances and worker settings."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Settings:
    det_tol: float = 1e-9
    trace_tol: float = 1e-9
    dedup_grid: float = 1e-9
    dedup_audit: float = 1e-7
    element_cap: int = 5_000_000
    ray_subset_cap: int = 10_000_000


_settings = Settings()


def get_settings() -> Settings:
    return _settings


def configure(**changes) -> Settings:
    """Replace fields of the active settings; returns the new value."""
    global _settings
    _settings = replace(_settings, **changes)
    return _settings


def worker_count() -> int:
    """Worker cap from ``TEMPERLAB_THREADS`` (default 1)."""
    raw = os.environ.get("TEMPERLAB_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
