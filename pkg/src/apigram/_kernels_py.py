"""Pure-Python kernel implementations.

These mirror apigram._kernels (the compiled extension) operation for
operation, with floating-point work performed in the same order so both
backends produce bit-identical results.  Selected automatically when the
extension is not built; see apigram.kernels.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def intersect_count(a: np.ndarray, b: np.ndarray) -> int:
    """Size of the intersection of two strictly increasing int64 arrays."""
    i = j = count = 0
    la, lb = len(a), len(b)
    av = a.tolist()
    bv = b.tolist()
    while i < la and j < lb:
        x, y = av[i], bv[j]
        if x == y:
            count += 1
            i += 1
            j += 1
        elif x < y:
            i += 1
        else:
            j += 1
    return count


def jaccard_matrix(a_data: np.ndarray, a_indptr: np.ndarray,
                   b_data: np.ndarray, b_indptr: np.ndarray) -> np.ndarray:
    """Pairwise Jaccard of two packed collections of sorted id sets.

    Sets are packed CSR-style: row r of collection A is
    a_data[a_indptr[r]:a_indptr[r+1]].  Empty-vs-empty pairs score 0.
    """
    n_a = len(a_indptr) - 1
    n_b = len(b_indptr) - 1
    out = np.zeros((n_a, n_b), dtype=np.float64)
    ad = a_data.tolist()
    bd = b_data.tolist()
    ap = a_indptr.tolist()
    bp = b_indptr.tolist()
    for r in range(n_a):
        a0, a1 = ap[r], ap[r + 1]
        for c in range(n_b):
            b0, b1 = bp[c], bp[c + 1]
            i, j, inter = a0, b0, 0
            while i < a1 and j < b1:
                x, y = ad[i], bd[j]
                if x == y:
                    inter += 1
                    i += 1
                    j += 1
                elif x < y:
                    i += 1
                else:
                    j += 1
            union = (a1 - a0) + (b1 - b0) - inter
            if union > 0:
                out[r, c] = inter / union
    return out


def convolve3x3_clamp(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """3x3 correlation with clamp-to-edge (replicated border) handling."""
    h, w = img.shape
    src = img.tolist()
    k = kernel.tolist()
    out = np.empty((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy in range(3):
                sy = y + dy - 1
                if sy < 0:
                    sy = 0
                elif sy >= h:
                    sy = h - 1
                row = src[sy]
                krow = k[dy]
                for dx in range(3):
                    sx = x + dx - 1
                    if sx < 0:
                        sx = 0
                    elif sx >= w:
                        sx = w - 1
                    acc += row[sx] * krow[dx]
            out[y, x] = acc
    return out


def clahe_bilinear(img: np.ndarray, luts: np.ndarray,
                   tile_h: int, tile_w: int) -> np.ndarray:
    """Apply per-tile mappings with bilinear interpolation between tiles.

    ``luts`` has shape (tiles_y, tiles_x, 256); each pixel's output blends
    the mappings of the four nearest tile centers, clamped at the borders.
    """
    h, w = img.shape
    ty, tx = luts.shape[0], luts.shape[1]
    src = img.tolist()
    lt = luts.tolist()
    out = np.empty((h, w), dtype=np.uint8)
    for y in range(h):
        gy = (y + 0.5) / tile_h - 0.5
        iy0 = int(np.floor(gy))
        wy = gy - iy0
        y0 = min(max(iy0, 0), ty - 1)
        y1 = min(max(iy0 + 1, 0), ty - 1)
        for x in range(w):
            gx = (x + 0.5) / tile_w - 0.5
            ix0 = int(np.floor(gx))
            wx = gx - ix0
            x0 = min(max(ix0, 0), tx - 1)
            x1 = min(max(ix0 + 1, 0), tx - 1)
            v = src[y][x]
            top = (1.0 - wx) * lt[y0][x0][v] + wx * lt[y0][x1][v]
            bot = (1.0 - wx) * lt[y1][x0][v] + wx * lt[y1][x1][v]
            val = (1.0 - wy) * top + wy * bot
            out[y, x] = int(val + 0.5)
    return out
