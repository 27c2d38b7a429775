# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Semantics are defined by ``pure.py``; the parity
test suite asserts bit-identical output between the two."""

from libc.stdint cimport uint64_t, int32_t
from libc.stdlib cimport malloc, free

BACKEND = "compiled"


def lcs_match_pairs(a, b):
    cdef Py_ssize_t n = len(a), m = len(b)
    if n == 0 or m == 0:
        return []
    cdef Py_ssize_t width = m + 1
    cdef int32_t *av = <int32_t *> malloc(n * sizeof(int32_t))
    cdef int32_t *bv = <int32_t *> malloc(m * sizeof(int32_t))
    cdef int32_t *dp = <int32_t *> malloc((n + 1) * width * sizeof(int32_t))
    if av == NULL or bv == NULL or dp == NULL:
        free(av); free(bv); free(dp)
        raise MemoryError()
    cdef Py_ssize_t i, j, base, prev
    cdef int32_t ai, x, y
    try:
        for i in range(n):
            av[i] = a[i]
        for j in range(m):
            bv[j] = b[j]
        for j in range(width):
            dp[j] = 0
        for i in range(1, n + 1):
            ai = av[i - 1]
            base = i * width
            prev = base - width
            dp[base] = 0
            for j in range(1, m + 1):
                if ai == bv[j - 1]:
                    dp[base + j] = dp[prev + j - 1] + 1
                else:
                    x = dp[prev + j]
                    y = dp[base + j - 1]
                    dp[base + j] = x if x >= y else y
        pairs = []
        i = n
        j = m
        while i > 0 and j > 0:
            if av[i - 1] == bv[j - 1]:
                pairs.append((i - 1, j - 1))
                i -= 1
                j -= 1
            elif dp[(i - 1) * width + j] >= dp[i * width + j - 1]:
                i -= 1
            else:
                j -= 1
        pairs.reverse()
        return pairs
    finally:
        free(av)
        free(bv)
        free(dp)


def gray_codes(radices):
    cdef Py_ssize_t k = len(radices)
    if k == 0:
        return [()]
    cdef uint64_t total = 1
    cdef Py_ssize_t j
    cdef uint64_t r
    for j in range(k):
        if radices[j] < 1:
            raise ValueError("radix must be >= 1")
        r = radices[j]
        if total > (<uint64_t> 1 << 32) // r:
            # too large for the C fast path; match the pure fallback
            from promptmap._kernels import pure
            return pure.gray_codes(radices)
        total *= r
    cdef uint64_t *rad = <uint64_t *> malloc(k * sizeof(uint64_t))
    cdef uint64_t *suffix = <uint64_t *> malloc((k + 1) * sizeof(uint64_t))
    cdef uint64_t *digits = <uint64_t *> malloc(k * sizeof(uint64_t))
    if rad == NULL or suffix == NULL or digits == NULL:
        free(rad); free(suffix); free(digits)
        raise MemoryError()
    cdef uint64_t n, d
    try:
        for j in range(k):
            rad[j] = radices[j]
        suffix[k] = 1
        for j in range(k - 1, -1, -1):
            suffix[j] = rad[j] * suffix[j + 1]
        out = []
        for n in range(total):
            for j in range(k):
                d = (n // suffix[j + 1]) % rad[j]
                if (n // suffix[j]) % 2 == 1:
                    d = rad[j] - 1 - d
                digits[j] = d
            out.append(tuple([<object> int(digits[j]) for j in range(k)]))
        return out
    finally:
        free(rad)
        free(suffix)
        free(digits)


cdef inline uint64_t _mix(uint64_t *state, uint64_t *out) nogil:
    state[0] = state[0] + <uint64_t> 0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t> 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t> 0x94D049BB133111EB
    out[0] = z ^ (z >> 31)
    return 0


def block_raster(int width, int height, seed64, int block=8):
    if width < 1 or height < 1:
        raise ValueError("width and height must be positive")
    cdef uint64_t state = <uint64_t> (seed64 & ((<uint64_t> 0) - 1))
    cdef Py_ssize_t blocks_w = (width + block - 1) // block
    cdef bytearray buf = bytearray(width * height * 3)
    cdef unsigned char *out = buf
    cdef Py_ssize_t y = 0, bx, run_w, run_h, px, row_start, line, x0
    cdef uint64_t z
    cdef unsigned char cr, cg, cb
    while y < height:
        run_h = block if height - y > block else height - y
        row_start = y * width * 3
        for bx in range(blocks_w):
            _mix(&state, &z)
            cr = <unsigned char> (z & 0xFF)
            cg = <unsigned char> ((z >> 8) & 0xFF)
            cb = <unsigned char> ((z >> 16) & 0xFF)
            x0 = bx * block
            run_w = block if width - x0 > block else width - x0
            for px in range(run_w):
                out[row_start + (x0 + px) * 3] = cr
                out[row_start + (x0 + px) * 3 + 1] = cg
                out[row_start + (x0 + px) * 3 + 2] = cb
        for line in range(1, run_h):
            buf[row_start + line * width * 3:row_start + (line + 1) * width * 3] = \
                buf[row_start:row_start + width * 3]
        y += run_h
    return bytes(buf)
