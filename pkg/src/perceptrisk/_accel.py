"""Numba toggle.

Hot kernels are written in numba-compatible Python and decorated with
:func:`njit` from this module.  Set ``PERCEPTRISK_DISABLE_NUMBA=1`` (or
uninstall numba) to run the pure-numpy fallback paths instead.
"""
import os

_DISABLE = os.environ.get("PERCEPTRISK_DISABLE_NUMBA", "0").strip().lower() in (
    "1",
    "true",
    "yes",
)

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _DISABLE

numba_default = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "error_model": "numpy",
}


def njit(func):
    """Compile ``func`` with numba when enabled, otherwise return it unchanged.

    The undecorated function stays reachable as ``func.py_func`` in both
    cases so tests can compare the compiled and interpreted versions.
    """
    if USE_NUMBA:
        return numba.njit(**numba_default)(func)
    func.py_func = func
    return func


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
