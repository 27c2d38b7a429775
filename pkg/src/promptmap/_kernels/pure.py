"""Pure-Python kernels: token LCS, mixed-radix Gray enumeration, block raster.

These are the reference implementations. The compiled twin in ``_core.pyx``
must produce bit-identical results; the parity suite enforces that.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1

BACKEND = "pure"


def lcs_match_pairs(a: list[int], b: list[int]) -> list[tuple[int, int]]:
    """Index pairs of one maximum common subsequence of ``a`` and ``b``.

    Pairs are ascending in both coordinates. Ties in the DP backtrack are
    broken toward deletion, which keeps every edit gap contiguous once the
    caller has stripped the common prefix and suffix.
    """
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return []
    width = m + 1
    dp = [0] * ((n + 1) * width)
    for i in range(1, n + 1):
        ai = a[i - 1]
        base = i * width
        prev = base - width
        for j in range(1, m + 1):
            if ai == b[j - 1]:
                dp[base + j] = dp[prev + j - 1] + 1
            else:
                x = dp[prev + j]
                y = dp[base + j - 1]
                dp[base + j] = x if x >= y else y
    pairs: list[tuple[int, int]] = []
    i, j = n, m
    while i > 0 and j > 0:
        if a[i - 1] == b[j - 1]:
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif dp[(i - 1) * width + j] >= dp[i * width + j - 1]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return pairs


def gray_codes(radices: list[int]) -> list[tuple[int, ...]]:
    """Reflected mixed-radix Gray sequence visiting every digit tuple once.

    Consecutive tuples differ in exactly one digit, and that digit changes
    by +-1. The first tuple is all zeros; digit order matches ``radices``.
    """
    k = len(radices)
    if k == 0:
        return [()]
    total = 1
    for r in radices:
        if r < 1:
            raise ValueError("radix must be >= 1")
        total *= r
    # suffix[j] = product of radices[j:]
    suffix = [1] * (k + 1)
    for j in range(k - 1, -1, -1):
        suffix[j] = radices[j] * suffix[j + 1]
    out: list[tuple[int, ...]] = []
    for n in range(total):
        digits = []
        for j in range(k):
            d = (n // suffix[j + 1]) % radices[j]
            if (n // suffix[j]) % 2:
                d = radices[j] - 1 - d
            digits.append(d)
        out.append(tuple(digits))
    return out


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return state, z


def block_raster(width: int, height: int, seed64: int, block: int = 8) -> bytes:
    """RGB8 raster of ``block``-square color tiles from a splitmix stream.

    Tiles are colored in row-major tile order; each tile consumes one
    stream draw whose low three bytes become (r, g, b). Edge tiles are
    clipped to the image bounds.
    """
    if width < 1 or height < 1:
        raise ValueError("width and height must be positive")
    state = seed64 & _MASK64
    blocks_w = (width + block - 1) // block
    rows: list[bytes] = []
    y = 0
    while y < height:
        run_h = min(block, height - y)
        strips: list[bytes] = []
        for bx in range(blocks_w):
            state, z = _splitmix64(state)
            color = bytes((z & 0xFF, (z >> 8) & 0xFF, (z >> 16) & 0xFF))
            run_w = min(block, width - bx * block)
            strips.append(color * run_w)
        row = b"".join(strips)
        rows.append(row * run_h)
        y += run_h
    return b"".join(rows)
