# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.  Signatures mirror :mod:`binspike._fallback`."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

NAME = "cython"


cdef inline Py_ssize_t _bracket(const double[::1] t, double c) noexcept nogil:
    # bracketing search: invariant t[l] <= c < t[u] except at the ends
    cdef Py_ssize_t l = 0, u = t.shape[0] - 1, m
    while u - l > 1:
        m = l + (u - l) // 2
        if t[m] > c:
            u = m
        else:
            l = m
    return l


def nn_search(const double[::1] thetas, const double[::1] queries):
    """Sorted position of the nearest codebook value; ties go to the lower one."""
    cdef Py_ssize_t n = queries.shape[0], i, l, u
    cdef Py_ssize_t last = thetas.shape[0] - 1
    cdef cnp.ndarray[cnp.intp_t, ndim=1] out = np.empty(n, dtype=np.intp)
    cdef cnp.intp_t[::1] ov = out
    cdef double c, dl, du
    with nogil:
        for i in range(n):
            c = queries[i]
            if last == 0:
                ov[i] = 0
                continue
            l = _bracket(thetas, c)
            u = l + 1 if l < last else l
            dl = (c - thetas[l]) * (c - thetas[l])
            du = (c - thetas[u]) * (c - thetas[u])
            ov[i] = u if du < dl else l
    return out


def exact_search(const double[::1] thetas, const double[::1] queries, double tol):
    """Sorted position of a value within ``tol`` of each query, ``-1`` if none."""
    cdef Py_ssize_t n = queries.shape[0], i, l, u
    cdef Py_ssize_t last = thetas.shape[0] - 1
    cdef cnp.ndarray[cnp.intp_t, ndim=1] out = np.empty(n, dtype=np.intp)
    cdef cnp.intp_t[::1] ov = out
    cdef double c, dl, du
    with nogil:
        for i in range(n):
            c = queries[i]
            l = _bracket(thetas, c) if last > 0 else 0
            u = l + 1 if l < last else l
            dl = fabs(c - thetas[l])
            du = fabs(c - thetas[u])
            if du < dl:
                l = u
                dl = du
            ov[i] = l if dl <= tol else -1
    return out


cdef void _apply(const double[::1] x, const double[::1] h, double ad,
                 double[::1] out) noexcept nogil:
    # out = T^{-1}-style low-rate AR response of the block sums of x
    cdef Py_ssize_t m = out.shape[0], d = h.shape[0], n, i, base
    cdef double s
    out[0] = x[0]
    for n in range(1, m):
        base = (n - 1) * d + 1
        s = 0.0
        for i in range(d):
            s += h[i] * x[base + i]
        out[n] = ad * out[n - 1] + s


cdef void _adjoint(const double[::1] lam, const double[::1] h, double ad,
                   double[::1] g, double[::1] out) noexcept nogil:
    cdef Py_ssize_t m = lam.shape[0], d = h.shape[0], n, i, base
    g[m - 1] = lam[m - 1]
    for n in range(m - 2, -1, -1):
        g[n] = lam[n] + ad * g[n + 1]
    out[0] = g[0]
    for n in range(1, m):
        base = (n - 1) * d + 1
        for i in range(d):
            out[base + i] = h[i] * g[n]


def apply_forward(x, h, double ad, Py_ssize_t m):
    out = np.empty(m)
    _apply(np.ascontiguousarray(x, dtype=float), np.ascontiguousarray(h, dtype=float), ad, out)
    return out


def apply_adjoint(lam, h, double ad):
    lam = np.ascontiguousarray(lam, dtype=float)
    h = np.ascontiguousarray(h, dtype=float)
    m = lam.shape[0]
    out = np.empty((m - 1) * h.shape[0] + 1)
    g = np.empty(m)
    _adjoint(lam, h, ad, g, out)
    return out


def pdhg_box_l1(const double[::1] y, const double[::1] h, double ad, double amp,
                double eps, double tau, double sig, long max_iter, double tol,
                x0=None, lam0=None):
    """Primal-dual iterations for min 1'x s.t. ||K x - y|| <= eps, 0 <= x <= amp.

    Returns ``(x, lam, iterations, last_change)``.
    """
    cdef Py_ssize_t m = y.shape[0], d = h.shape[0]
    cdef Py_ssize_t length = (m - 1) * d + 1, j, n
    cdef double[::1] x = np.zeros(length) if x0 is None else np.array(x0, dtype=float)
    cdef double[::1] lam = np.zeros(m) if lam0 is None else np.array(lam0, dtype=float)
    cdef double[::1] xbar = np.empty(length)
    cdef double[::1] kt = np.empty(length)
    cdef double[::1] kx = np.empty(m)
    cdef double[::1] g = np.empty(m)
    cdef double[::1] v = np.empty(m)
    cdef double xn, dx, ch, nu, scale
    cdef long it = 0
    with nogil:
        while it < max_iter:
            it += 1
            _adjoint(lam, h, ad, g, kt)
            ch = 0.0
            for j in range(length):
                xn = x[j] - tau * (1.0 + kt[j])
                if xn < 0.0:
                    xn = 0.0
                elif xn > amp:
                    xn = amp
                dx = fabs(xn - x[j])
                if dx > ch:
                    ch = dx
                xbar[j] = 2.0 * xn - x[j]
                x[j] = xn
            _apply(xbar, h, ad, kx)
            nu = 0.0
            for n in range(m):
                v[n] = lam[n] + sig * kx[n]
                nu += (v[n] / sig - y[n]) * (v[n] / sig - y[n])
            nu = sqrt(nu)
            scale = 1.0 if nu <= eps else eps / nu
            for n in range(m):
                xn = v[n] - sig * (y[n] + scale * (v[n] / sig - y[n]))
                dx = fabs(xn - lam[n])
                if dx > ch:
                    ch = dx
                lam[n] = xn
            if it > 10 and ch < tol:
                break
    return np.asarray(x), np.asarray(lam), it, ch


def fista_nn_lasso(const double[::1] z, double ad, double lam, double step,
                   long max_iter, double tol):
    """Accelerated projected proximal gradient for
    min 0.5||z - T s||^2 + lam*sum(s), s >= 0, T the AR(ad) response.

    Returns ``(s, iterations, last_change)``.
    """
    cdef Py_ssize_t m = z.shape[0], n
    cdef double[::1] s = np.zeros(m)
    cdef double[::1] sp = np.zeros(m)
    cdef double[::1] q = np.zeros(m)
    cdef double[::1] r = np.empty(m)
    cdef double[::1] g = np.empty(m)
    cdef double t = 1.0, tn, beta, val, ch, scale
    cdef long it = 0
    with nogil:
        while it < max_iter:
            it += 1
            # r = T q - z
            r[0] = q[0]
            for n in range(1, m):
                r[n] = ad * r[n - 1] + q[n]
            for n in range(m):
                r[n] -= z[n]
            # g = T' r
            g[m - 1] = r[m - 1]
            for n in range(m - 2, -1, -1):
                g[n] = r[n] + ad * g[n + 1]
            ch = 0.0
            scale = 0.0
            for n in range(m):
                val = q[n] - step * (g[n] + lam)
                if val < 0.0:
                    val = 0.0
                sp[n] = s[n]
                s[n] = val
                if fabs(val - sp[n]) > ch:
                    ch = fabs(val - sp[n])
                if fabs(val) > scale:
                    scale = fabs(val)
            tn = (1.0 + sqrt(1.0 + 4.0 * t * t)) / 2.0
            beta = (t - 1.0) / tn
            t = tn
            for n in range(m):
                q[n] = s[n] + beta * (s[n] - sp[n])
            if it > 1 and ch <= tol * (1.0 + scale):
                break
    return np.asarray(s), it, ch
