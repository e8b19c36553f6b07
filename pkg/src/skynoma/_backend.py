"""Kernel backend selection.

Imports the compiled extension when present, otherwise the pure-Python
twin.  ``SKYNOMA_PURE_PYTHON=1`` in the environment forces the fallback,
which is useful for benchmarking and debugging.
"""

import os

if os.environ.get("SKYNOMA_PURE_PYTHON") == "1":
    from . import _purepy as kernels

    COMPILED = False
else:
    try:
        from . import _core as kernels  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        from . import _purepy as kernels

        COMPILED = False


def backend_name():
    """Name of the active kernel backend: 'compiled' or 'pure-python'."""
    return "compiled" if COMPILED else "pure-python"
