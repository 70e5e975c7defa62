"""Pick the compiled recursion when it is importable, else the numpy one.

Set SPIKEDKPZ_BACKEND=python to force the fallback.
"""

import os

BACKEND_ENV = "SPIKEDKPZ_BACKEND"

if os.environ.get(BACKEND_ENV, "").lower() == "python":
    from ._fallback import log_partition

    BACKEND = "python"
else:
    try:
        from ._core import log_partition

        BACKEND = "cython"
    except ImportError:
        from ._fallback import log_partition

        BACKEND = "python"

__all__ = ["log_partition", "BACKEND"]
