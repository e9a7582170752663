# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop: truncated cosine series over batches of points."""

from libc.math cimport cos

cdef double TWO_PI = 6.283185307179586


cdef void _eval_range(const double[:, ::1] points, const double[:, ::1] freqs,
                      const double[::1] coeffs, double[::1] out,
                      Py_ssize_t start, Py_ssize_t stop) noexcept nogil:
    cdef Py_ssize_t p, j, d
    cdef Py_ssize_t n_terms = freqs.shape[0]
    cdef Py_ssize_t m = freqs.shape[1]
    cdef double acc, dot
    for p in range(start, stop):
        acc = 0.0
        for j in range(n_terms):
            dot = 0.0
            for d in range(m):
                dot += freqs[j, d] * points[p, d]
            acc += coeffs[j] * cos(TWO_PI * dot)
        out[p] = acc


def eval_range(const double[:, ::1] points, const double[:, ::1] freqs,
               const double[::1] coeffs, double[::1] out,
               Py_ssize_t start, Py_ssize_t stop):
    """Accumulate sum_j coeffs[j] * cos(2*pi*freqs[j].x_p) into out[start:stop]."""
    if stop > points.shape[0] or start < 0:
        raise IndexError("range outside the point batch")
    with nogil:
        _eval_range(points, freqs, coeffs, out, start, stop)
