"""Kernel dispatch: compiled extension when built, pure Python otherwise.

The hot loops (pairwise set intersection for Jaccard scoring, 3x3
convolution and CLAHE interpolation for image export) exist twice: a Cython
extension (apigram._kernels) and a pure-Python twin (apigram._kernels_py).
Both compute floating-point results in the same order, so every downstream
artifact is byte-identical whichever backend is active.

Set APIGRAM_KERNELS=python to force the fallback, =cython to require the
extension (ImportError if missing); anything else means auto.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

_choice = os.environ.get("APIGRAM_KERNELS", "auto").lower()
if _choice == "python":
    _impl = _kernels_py
elif _choice == "cython":
    from . import _kernels as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

intersect_count = _impl.intersect_count
jaccard_matrix = _impl.jaccard_matrix
convolve3x3_clamp = _impl.convolve3x3_clamp
clahe_bilinear = _impl.clahe_bilinear


def backend_name() -> str:
    """Name of the active backend: "cython" or "python"."""
    return _impl.BACKEND


def pack_sets(id_sets: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Pack sorted id arrays CSR-style into (data, indptr) for jaccard_matrix."""
    indptr = np.zeros(len(id_sets) + 1, dtype=np.int64)
    for i, ids in enumerate(id_sets):
        indptr[i + 1] = indptr[i] + len(ids)
    if id_sets:
        data = np.concatenate([np.asarray(s, dtype=np.int64) for s in id_sets]) \
            if indptr[-1] else np.zeros(0, dtype=np.int64)
    else:
        data = np.zeros(0, dtype=np.int64)
    return data, indptr
