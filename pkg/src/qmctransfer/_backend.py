"""Backend selection for the walk kernels.

The compiled extension is preferred when importable; set the environment
variable ``QMCTRANSFER_PURE=1`` to force the pure-Python fallback (used by
the backend-equivalence tests and the kernel benchmark).
"""

from __future__ import annotations

import os

from . import _walk_py

if os.environ.get("QMCTRANSFER_PURE") == "1":
    _impl = _walk_py
    BACKEND = "python"
else:
    try:
        from . import _walk_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _walk_py
        BACKEND = "python"

walk_pairs_uniform = _impl.walk_pairs_uniform
walk_stream_csr = _impl.walk_stream_csr
