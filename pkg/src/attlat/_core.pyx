# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled bitset kernel: image / closure / eventual-image fixpoints.

Graphs arrive in CSR form (indptr, indices); vertex sets are uint64 word
arrays, bit v of word v>>6 marking vertex v.  Semantics match
``attlat._core_py`` exactly; tests assert agreement.
"""

import numpy as np

from libc.stdint cimport int32_t, uint64_t

cdef extern from *:
    int __builtin_ctzll(unsigned long long x) nogil


cdef inline void _image_words(const int32_t[::1] indptr, const int32_t[::1] indices,
                              const uint64_t[::1] src, uint64_t[::1] dst,
                              Py_ssize_t nwords) noexcept nogil:
    cdef Py_ssize_t wi, v
    cdef uint64_t w
    cdef int32_t j, w_end
    cdef Py_ssize_t t
    for wi in range(nwords):
        dst[wi] = 0
    for wi in range(nwords):
        w = src[wi]
        while w != 0:
            v = (wi << 6) + __builtin_ctzll(w)
            w &= w - 1
            for j in range(indptr[v], indptr[v + 1]):
                t = indices[j]
                dst[t >> 6] |= (<uint64_t>1) << (t & 63)


def image(indptr, indices, src, Py_ssize_t n):
    """Union of out-neighborhoods of the vertices set in ``src``."""
    cdef Py_ssize_t nwords = (n + 63) >> 6
    dst = np.zeros(nwords, dtype=np.uint64)
    cdef const int32_t[::1] ip = indptr
    cdef const int32_t[::1] ix = indices
    cdef const uint64_t[::1] s = src
    cdef uint64_t[::1] d = dst
    with nogil:
        _image_words(ip, ix, s, d, nwords)
    return dst


def closure(indptr, indices, src, Py_ssize_t n):
    """Forward-reachable closure of ``src`` including the seed."""
    cdef Py_ssize_t nwords = (n + 63) >> 6
    seen = np.array(src, dtype=np.uint64, copy=True)
    frontier = np.array(src, dtype=np.uint64, copy=True)
    scratch = np.zeros(nwords, dtype=np.uint64)
    cdef const int32_t[::1] ip = indptr
    cdef const int32_t[::1] ix = indices
    cdef uint64_t[::1] se = seen
    cdef uint64_t[::1] fr = frontier
    cdef uint64_t[::1] sc = scratch
    cdef Py_ssize_t wi
    cdef uint64_t new_word
    cdef bint any_new = True
    with nogil:
        while any_new:
            _image_words(ip, ix, fr, sc, nwords)
            any_new = False
            for wi in range(nwords):
                new_word = sc[wi] & ~se[wi]
                se[wi] |= new_word
                fr[wi] = new_word
                if new_word != 0:
                    any_new = True
    return seen


def omega(indptr, indices, src, Py_ssize_t n):
    """Eventual image: iterate the map on the forward closure to its fixed
    point.  Returns (fixed point words, iterations)."""
    cdef Py_ssize_t nwords = (n + 63) >> 6
    cur = closure(indptr, indices, src, n)
    nxt = np.zeros(nwords, dtype=np.uint64)
    cdef const int32_t[::1] ip = indptr
    cdef const int32_t[::1] ix = indices
    cdef uint64_t[::1] a = cur
    cdef uint64_t[::1] b = nxt
    cdef Py_ssize_t wi, steps = 0
    cdef bint same
    with nogil:
        while True:
            _image_words(ip, ix, a, b, nwords)
            steps += 1
            same = True
            for wi in range(nwords):
                if a[wi] != b[wi]:
                    same = False
                    break
            if same:
                break
            for wi in range(nwords):
                a[wi] = b[wi]
    return cur, steps
