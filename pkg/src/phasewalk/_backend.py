"""Selects the walker kernel at import: compiled extension if built, else
the pure-Python twin.  Both are importable by name for benchmarks and
equivalence tests.
"""

from __future__ import annotations

from . import _walk_py

try:
    from . import _walk_fast

    _DEFAULT = _walk_fast
    BACKEND = "compiled"
except ImportError:  # extension not built; fall back
    _walk_fast = None
    _DEFAULT = _walk_py
    BACKEND = "python"

run_trial = _DEFAULT.run_trial


def available_backends() -> dict:
    """Name -> kernel module for every importable backend."""
    out = {"python": _walk_py}
    if _walk_fast is not None:
        out["compiled"] = _walk_fast
    return out


def get_backend(name: str):
    """Kernel module by name ('compiled', 'python', or 'auto')."""
    if name == "auto":
        return _DEFAULT
    try:
        return available_backends()[name]
    except KeyError:
        raise ValueError(
            f"backend {name!r} not available; choose from "
            f"{sorted(available_backends())} or 'auto'"
        ) from None
