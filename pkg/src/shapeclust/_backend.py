"""Kernel backend selection.

Hot numeric kernels ship in two flavors: numba @njit loops and pure-numpy
vectorized fallbacks. SHAPECLUST_BACKEND picks one:

    auto  (default) - numba if importable, else numpy
    numba           - require numba, error if missing
    numpy           - force the pure-numpy path

SHAPECLUST_THREADS caps the numba thread pool (parallel kernels only).
"""

from __future__ import annotations

import os


class BackendError(RuntimeError):
    pass


def _resolve() -> bool:
    choice = os.environ.get("SHAPECLUST_BACKEND", "auto").strip().lower() or "auto"
    if choice not in ("auto", "numba", "numpy"):
        raise BackendError(
            f"SHAPECLUST_BACKEND={choice!r} not understood (use auto, numba, or numpy)"
        )
    if choice == "numpy":
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise BackendError("SHAPECLUST_BACKEND=numba but numba is not installed")
        return False
    return True


NUMBA_ENABLED = _resolve()


def _apply_thread_cap() -> None:
    raw = os.environ.get("SHAPECLUST_THREADS", "").strip()
    if not raw or not NUMBA_ENABLED:
        return
    try:
        n = int(raw)
    except ValueError:
        raise BackendError(f"SHAPECLUST_THREADS={raw!r} is not an integer")
    if n < 1:
        raise BackendError("SHAPECLUST_THREADS must be >= 1")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


_apply_thread_cap()


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
