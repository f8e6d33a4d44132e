"""Kernel backend selection.

Set ``ALERTSIM_DISABLE_NUMBA=1`` to force the pure-numpy kernels. The numba
kernels are used whenever numba imports and the flag is unset.
"""

import os
from contextlib import contextmanager

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    HAVE_NUMBA = False

BACKENDS = ("numba", "numpy")


def _default() -> str:
    flag = os.environ.get("ALERTSIM_DISABLE_NUMBA", "").strip().lower()
    if flag in ("1", "true", "yes", "on") or not HAVE_NUMBA:
        return "numpy"
    return "numba"


_current = _default()


def get_backend() -> str:
    return _current


def set_backend(name: str) -> None:
    global _current
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _current = name


@contextmanager
def use_backend(name: str):
    prev = _current
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)
