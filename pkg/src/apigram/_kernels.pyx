# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel implementations.

Operation-for-operation twin of apigram._kernels_py; floating-point work is
performed in the same order so both backends produce bit-identical results.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

BACKEND = "cython"


def intersect_count(cnp.int64_t[::1] a, cnp.int64_t[::1] b):
    """Size of the intersection of two strictly increasing int64 arrays."""
    cdef Py_ssize_t i = 0, j = 0, count = 0
    cdef Py_ssize_t la = a.shape[0], lb = b.shape[0]
    while i < la and j < lb:
        if a[i] == b[j]:
            count += 1
            i += 1
            j += 1
        elif a[i] < b[j]:
            i += 1
        else:
            j += 1
    return count


def jaccard_matrix(cnp.int64_t[::1] a_data, cnp.int64_t[::1] a_indptr,
                   cnp.int64_t[::1] b_data, cnp.int64_t[::1] b_indptr):
    """Pairwise Jaccard of two packed collections of sorted id sets.

    Sets are packed CSR-style: row r of collection A is
    a_data[a_indptr[r]:a_indptr[r+1]].  Empty-vs-empty pairs score 0.
    """
    cdef Py_ssize_t n_a = a_indptr.shape[0] - 1
    cdef Py_ssize_t n_b = b_indptr.shape[0] - 1
    out_arr = np.zeros((n_a, n_b), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t r, c, a0, a1, b0, b1, i, j, inter, union_
    for r in range(n_a):
        a0 = a_indptr[r]
        a1 = a_indptr[r + 1]
        for c in range(n_b):
            b0 = b_indptr[c]
            b1 = b_indptr[c + 1]
            i = a0
            j = b0
            inter = 0
            while i < a1 and j < b1:
                if a_data[i] == b_data[j]:
                    inter += 1
                    i += 1
                    j += 1
                elif a_data[i] < b_data[j]:
                    i += 1
                else:
                    j += 1
            union_ = (a1 - a0) + (b1 - b0) - inter
            if union_ > 0:
                out[r, c] = <double>inter / <double>union_
    return out_arr


def convolve3x3_clamp(double[:, ::1] img, double[:, ::1] kernel):
    """3x3 correlation with clamp-to-edge (replicated border) handling."""
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t y, x, dy, dx, sy, sx
    cdef double acc
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy in range(3):
                sy = y + dy - 1
                if sy < 0:
                    sy = 0
                elif sy >= h:
                    sy = h - 1
                for dx in range(3):
                    sx = x + dx - 1
                    if sx < 0:
                        sx = 0
                    elif sx >= w:
                        sx = w - 1
                    acc += img[sy, sx] * kernel[dy, dx]
            out[y, x] = acc
    return out_arr


def clahe_bilinear(cnp.uint8_t[:, ::1] img, cnp.uint8_t[:, :, ::1] luts,
                   int tile_h, int tile_w):
    """Apply per-tile mappings with bilinear interpolation between tiles.

    ``luts`` has shape (tiles_y, tiles_x, 256); each pixel's output blends
    the mappings of the four nearest tile centers, clamped at the borders.
    """
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef Py_ssize_t ty = luts.shape[0], tx = luts.shape[1]
    out_arr = np.empty((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t y, x, iy0, ix0, y0, y1, x0, x1, v
    cdef double gy, gx, wy, wx, top, bot, val
    for y in range(h):
        gy = (y + 0.5) / tile_h - 0.5
        iy0 = <Py_ssize_t>floor(gy)
        wy = gy - iy0
        y0 = min(max(iy0, 0), ty - 1)
        y1 = min(max(iy0 + 1, 0), ty - 1)
        for x in range(w):
            gx = (x + 0.5) / tile_w - 0.5
            ix0 = <Py_ssize_t>floor(gx)
            wx = gx - ix0
            x0 = min(max(ix0, 0), tx - 1)
            x1 = min(max(ix0 + 1, 0), tx - 1)
            v = img[y, x]
            top = (1.0 - wx) * luts[y0, x0, v] + wx * luts[y0, x1, v]
            bot = (1.0 - wx) * luts[y1, x0, v] + wx * luts[y1, x1, v]
            val = (1.0 - wy) * top + wy * bot
            out[y, x] = <cnp.uint8_t>(val + 0.5)
    return out_arr
