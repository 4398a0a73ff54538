"""Search kernel backend selection.

The compiled extension is preferred when it imported cleanly; otherwise
the pure-Python twin takes over.  Both expose the same evaluate_batch
contract and produce bit-identical results; ``causalcf.bench_backends``
measures the difference in speed.
"""

from __future__ import annotations

import os

from causalcf import _kernel_py

if os.environ.get("CAUSALCF_DISABLE_COMPILED"):
    # Escape hatch for exercising the fallback on machines where the
    # extension built fine.
    _kernel_c = None
else:
    try:
        from causalcf import _kernel_c  # type: ignore[attr-defined]
    except ImportError:
        _kernel_c = None

DEFAULT_BACKEND = "compiled" if _kernel_c is not None else "python"


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _kernel_c is not None else ("python",)


def get_backend(name: str = "auto"):
    """Resolve a backend name (auto/compiled/python) to its kernel module."""
    if name == "auto":
        name = DEFAULT_BACKEND
    if name == "python":
        return _kernel_py
    if name == "compiled":
        if _kernel_c is None:
            raise ValueError("compiled kernel is not available in this installation")
        return _kernel_c
    raise ValueError(f"unknown backend {name!r} (expected auto, compiled or python)")
