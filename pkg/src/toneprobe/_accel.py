"""Numba availability and backend selection.

Set ``TONEPROBE_NUMBA=0`` to force the pure-numpy kernel implementations;
anything else (or an absent variable) uses numba's @njit kernels when numba
imports cleanly. ``benchmarks/bench_kernels.py`` compares the two paths.
"""

from __future__ import annotations

import os

_flag = os.environ.get("TONEPROBE_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _flag not in ("0", "false", "no", "off")

if NUMBA_REQUESTED:
    try:
        from numba import njit  # noqa: F401

        NUMBA_AVAILABLE = True
    except ImportError:  # pragma: no cover - exercised via env flag instead
        NUMBA_AVAILABLE = False
else:
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_REQUESTED and NUMBA_AVAILABLE
