"""Backend selection for the hot kernels.

The compiled Cython extension is used when it was built and the
MPFEC_PURE_PYTHON environment variable is unset; otherwise the callers
fall back to their numpy implementations.  Both backends produce
bit-identical Monte Carlo counts and agree on the analytic values to
floating-point accuracy.
"""

import os

try:
    from . import _core
except ImportError:
    _core = None

HAVE_COMPILED = _core is not None


def active_name() -> str:
    return "compiled" if resolve(None) is not None else "python"


def resolve(backend: str | None):
    """Map a backend request to the compiled module or None (python).

    backend: None (auto), "compiled" or "python".
    """
    if backend is None:
        if os.environ.get("MPFEC_PURE_PYTHON"):
            return None
        return _core
    if backend == "python":
        return None
    if backend == "compiled":
        if _core is None:
            raise RuntimeError("the compiled kernels are not available")
        return _core
    raise ValueError(f"unknown backend {backend!r}")
