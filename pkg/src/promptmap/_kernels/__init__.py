"""Kernel selection: compiled extension when available, pure Python otherwise.

Set ``PROMPTMAP_PURE_KERNELS=1`` to force the pure implementations (used by
the benchmark and the parity tests).
"""

from __future__ import annotations

import os

from . import pure

if os.environ.get("PROMPTMAP_PURE_KERNELS", "") not in ("", "0"):
    _impl = pure
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pure

BACKEND: str = _impl.BACKEND

lcs_match_pairs = _impl.lcs_match_pairs
gray_codes = _impl.gray_codes
block_raster = _impl.block_raster
