# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled coordinate-descent kernel (Gram / covariance updates)."""

from libc.math cimport fabs


cdef inline double _soft(double z, double lam) nogil:
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


cdef double _sweep(const double[:, ::1] G, double[::1] beta, double[::1] grad,
                   double lam, const unsigned char[::1] mask, bint active_only) noexcept nogil:
    cdef Py_ssize_t p = beta.shape[0]
    cdef Py_ssize_t j, k
    cdef double gjj, old, new, d, max_d = 0.0
    for j in range(p):
        if not mask[j]:
            continue
        old = beta[j]
        if active_only and old == 0.0:
            continue
        gjj = G[j, j]
        new = _soft(grad[j] + gjj * old, lam) / gjj
        d = new - old
        if d != 0.0:
            beta[j] = new
            for k in range(p):
                grad[k] -= d * G[j, k]
            if fabs(d) > max_d:
                max_d = fabs(d)
    return max_d


def cd_gram(const double[:, ::1] G, double[::1] beta, double[::1] grad,
            double lam, double tol, long max_sweeps):
    """Minimise ``0.5 b'Gb - c'b + lam |b|_1`` in place.

    ``grad`` must equal ``c - G @ beta`` on entry and is kept in sync.
    Columns with ``G[j, j] == 0`` are left at zero. Returns
    ``(sweeps, converged)``.
    """
    cdef Py_ssize_t p = beta.shape[0]
    cdef Py_ssize_t j
    cdef long sweeps = 0
    cdef double max_d
    cdef bint converged = False
    mask_arr = bytearray(p)
    cdef unsigned char[::1] mask = mask_arr
    for j in range(p):
        mask[j] = G[j, j] > 0.0
    with nogil:
        while sweeps < max_sweeps:
            max_d = _sweep(G, beta, grad, lam, mask, False)
            sweeps += 1
            if max_d < tol:
                converged = True
                break
            while sweeps < max_sweeps:
                max_d = _sweep(G, beta, grad, lam, mask, True)
                sweeps += 1
                if max_d < tol:
                    break
    return sweeps, converged
