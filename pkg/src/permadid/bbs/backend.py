"""Kernel selection for the curve arithmetic.

The compiled ``permadid._native`` extension is used when it imports;
otherwise the py_ecc implementation in ``_pure`` takes over. Set
``PERMADID_BACKEND=pure`` (or ``native``) to force one.
"""

from __future__ import annotations

import contextlib
import importlib
import os
from types import ModuleType

from . import _pure


def _load_native() -> ModuleType | None:
    try:
        return importlib.import_module("permadid._native")
    except ImportError:
        return None


_native = _load_native()


def available() -> list[str]:
    names = ["pure"]
    if _native is not None:
        names.insert(0, "native")
    return names


def get(name: str) -> ModuleType:
    if name == "pure":
        return _pure
    if name == "native":
        if _native is None:
            raise ImportError("permadid._native is not built; install with cargo available")
        return _native
    raise ValueError(f"unknown backend {name!r}")


def _initial() -> ModuleType:
    forced = os.environ.get("PERMADID_BACKEND")
    if forced:
        return get(forced)
    return _native if _native is not None else _pure


_current = _initial()


def kernels() -> ModuleType:
    return _current


def name() -> str:
    return "native" if _current is _native and _native is not None else "pure"


@contextlib.contextmanager
def use(backend: str):
    """Temporarily route all curve operations through ``backend``."""
    global _current
    prev = _current
    _current = get(backend)
    try:
        yield _current
    finally:
        _current = prev
