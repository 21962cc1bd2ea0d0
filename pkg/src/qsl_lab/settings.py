"""Process-wide physical constants."""

from __future__ import annotations

import contextlib
from typing import Iterator

_HBAR = 1.0


def hbar() -> float:
    return _HBAR


def set_hbar(value: float) -> None:
    global _HBAR
    value = float(value)
    if not value > 0:
        raise ValueError(f"hbar must be positive, got {value}")
    _HBAR = value


@contextlib.contextmanager
def hbar_scope(value: float) -> Iterator[float]:
    """Temporarily override the reduced Planck constant."""
    previous = _HBAR
    set_hbar(value)
    try:
        yield _HBAR
    finally:
        set_hbar(previous)


def resolve_hbar(value: float | None) -> float:
    return _HBAR if value is None else float(value)
