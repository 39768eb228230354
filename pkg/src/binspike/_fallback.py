"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np
from scipy.signal import lfilter

NAME = "python"


def _bracket(thetas, queries):
    # the bracketing loop runs on all queries at once; finished lanes stay put
    lo = np.zeros(queries.shape, dtype=np.intp)
    hi = np.full(queries.shape, thetas.size - 1, dtype=np.intp)
    active = hi - lo > 1
    while active.any():
        mid = lo + (hi - lo) // 2
        above = thetas[mid] > queries
        hi = np.where(active & above, mid, hi)
        lo = np.where(active & ~above, mid, lo)
        active = hi - lo > 1
    return lo


def nn_search(thetas, queries):
    thetas = np.asarray(thetas, dtype=float)
    queries = np.asarray(queries, dtype=float)
    last = thetas.size - 1
    if last == 0:
        return np.zeros(queries.shape, dtype=np.intp)
    lo = _bracket(thetas, queries)
    up = np.minimum(lo + 1, last)
    dl = (queries - thetas[lo]) ** 2
    du = (queries - thetas[up]) ** 2
    return np.where(du < dl, up, lo)


def exact_search(thetas, queries, tol):
    thetas = np.asarray(thetas, dtype=float)
    queries = np.asarray(queries, dtype=float)
    last = thetas.size - 1
    lo = _bracket(thetas, queries) if last > 0 else np.zeros(queries.shape, dtype=np.intp)
    up = np.minimum(lo + 1, last)
    dl = np.abs(queries - thetas[lo])
    du = np.abs(queries - thetas[up])
    best = np.where(du < dl, up, lo)
    dist = np.minimum(dl, du)
    return np.where(dist <= tol, best, -1)


def apply_forward(x, h, ad, m):
    x = np.asarray(x, dtype=float)
    s = np.empty(m)
    s[0] = x[0]
    s[1:] = x[1:].reshape(m - 1, h.size) @ h
    return lfilter([1.0], [1.0, -ad], s)


def apply_adjoint(lam, h, ad):
    lam = np.asarray(lam, dtype=float)
    g = lfilter([1.0], [1.0, -ad], lam[::-1])[::-1]
    return np.concatenate((g[:1], np.outer(g[1:], h).ravel()))


def pdhg_box_l1(y, h, ad, amp, eps, tau, sig, max_iter, tol, x0=None, lam0=None):
    y = np.asarray(y, dtype=float)
    h = np.asarray(h, dtype=float)
    m = y.size
    length = (m - 1) * h.size + 1
    x = np.zeros(length) if x0 is None else np.array(x0, dtype=float)
    lam = np.zeros(m) if lam0 is None else np.array(lam0, dtype=float)
    it = 0
    ch = np.inf
    while it < max_iter:
        it += 1
        xn = np.clip(x - tau * (1.0 + apply_adjoint(lam, h, ad)), 0.0, amp)
        v = lam + sig * apply_forward(2.0 * xn - x, h, ad, m)
        u = v / sig - y
        nu = np.sqrt(u @ u)
        scale = 1.0 if nu <= eps else eps / nu
        lamn = v - sig * (y + scale * u)
        ch = max(np.max(np.abs(xn - x)), np.max(np.abs(lamn - lam)))
        x, lam = xn, lamn
        if it > 10 and ch < tol:
            break
    return x, lam, it, ch


def fista_nn_lasso(z, ad, lam, step, max_iter, tol):
    z = np.asarray(z, dtype=float)
    s = np.zeros(z.size)
    q = s.copy()
    t = 1.0
    it = 0
    ch = np.inf
    while it < max_iter:
        it += 1
        r = lfilter([1.0], [1.0, -ad], q) - z
        g = lfilter([1.0], [1.0, -ad], r[::-1])[::-1]
        sp = s
        s = np.maximum(q - step * (g + lam), 0.0)
        ch = np.max(np.abs(s - sp))
        tn = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        q = s + ((t - 1.0) / tn) * (s - sp)
        t = tn
        if it > 1 and ch <= tol * (1.0 + np.max(np.abs(s))):
            break
    return s, it, ch
