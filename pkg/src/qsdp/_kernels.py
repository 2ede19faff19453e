"""Inner-loop kernels with a numba path and a pure-numpy fallback.

The backend is picked once at import time:

* ``QSDP_NUMBA=0`` forces the numpy implementations;
* otherwise numba is used when it can be imported.

Both implementations are always importable as ``NUMPY`` and ``NUMBA``
(the latter is ``None`` without numba) so tests and the benchmark can
compare them directly.  ``QSDP_THREADS`` caps numba and BLAS threads.
"""

import os
from types import SimpleNamespace

import numpy as np

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None
else:
    if "NUMBA_THREADING_LAYER" not in os.environ:
        nb.config.THREADING_LAYER = "workqueue"


# ---------------------------------------------------------------------------
# numpy implementations


def _weighted_sum_np(alpha, q_re, q_im):
    m, d, _ = q_re.shape
    w_re = (alpha @ q_re.reshape(m, d * d)).reshape(d, d)
    w_im = (alpha @ q_im.reshape(m, d * d)).reshape(d, d)
    return w_re, w_im


def _contract_np(q_re, q_im, g_re, g_im):
    m = q_re.shape[0]
    return q_re.reshape(m, -1) @ g_re.ravel() + q_im.reshape(m, -1) @ g_im.ravel()


def _two_loop_np(s, y, g):
    k = s.shape[0]
    q = g.copy()
    if k == 0:
        return -q
    rho = 1.0 / np.einsum("ij,ij->i", s, y)
    a = np.empty(k)
    for i in range(k - 1, -1, -1):
        a[i] = rho[i] * (s[i] @ q)
        q -= a[i] * y[i]
    gamma = (s[-1] @ y[-1]) / (y[-1] @ y[-1])
    r = gamma * q
    for i in range(k):
        b = rho[i] * (y[i] @ r)
        r += (a[i] - b) * s[i]
    return -r


def _hermite_functions_np(x, n):
    out = np.empty((x.shape[0], n))
    out[:, 0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n > 1:
        out[:, 1] = np.sqrt(2.0) * x * out[:, 0]
    for l in range(1, n - 1):
        out[:, l + 1] = (np.sqrt(2.0 / (l + 1)) * x * out[:, l]
                         - np.sqrt(l / (l + 1.0)) * out[:, l - 1])
    return out


NUMPY = SimpleNamespace(
    name="numpy",
    weighted_sum=_weighted_sum_np,
    contract=_contract_np,
    two_loop=_two_loop_np,
    hermite_functions=_hermite_functions_np,
)


# ---------------------------------------------------------------------------
# numba implementations

if nb is not None:

    @nb.njit(cache=True)
    def _weighted_sum_nb(alpha, q_re, q_im):
        m, d, _ = q_re.shape
        w_re = np.zeros((d, d))
        w_im = np.zeros((d, d))
        for j in range(m):
            a = alpha[j]
            if a == 0.0:
                continue
            for k in range(d):
                for l in range(d):
                    w_re[k, l] += a * q_re[j, k, l]
                    w_im[k, l] += a * q_im[j, k, l]
        return w_re, w_im

    @nb.njit(cache=True, parallel=True)
    def _contract_nb(q_re, q_im, g_re, g_im):
        # one output per observable; the inner sum is serial so results
        # do not depend on the thread count
        m, d, _ = q_re.shape
        out = np.empty(m)
        for j in nb.prange(m):
            acc = 0.0
            for k in range(d):
                for l in range(d):
                    acc += q_re[j, k, l] * g_re[k, l] + q_im[j, k, l] * g_im[k, l]
            out[j] = acc
        return out

    @nb.njit(cache=True)
    def _two_loop_nb(s, y, g):
        k, n = s.shape
        q = g.copy()
        if k == 0:
            return -q
        rho = np.empty(k)
        for i in range(k):
            rho[i] = 1.0 / np.dot(s[i], y[i])
        a = np.empty(k)
        for i in range(k - 1, -1, -1):
            a[i] = rho[i] * np.dot(s[i], q)
            for t in range(n):
                q[t] -= a[i] * y[i, t]
        gamma = np.dot(s[k - 1], y[k - 1]) / np.dot(y[k - 1], y[k - 1])
        r = gamma * q
        for i in range(k):
            b = rho[i] * np.dot(y[i], r)
            for t in range(n):
                r[t] += (a[i] - b) * s[i, t]
        return -r

    @nb.njit(cache=True)
    def _hermite_functions_nb(x, n):
        npts = x.shape[0]
        out = np.empty((npts, n))
        c0 = np.pi ** -0.25
        s2 = np.sqrt(2.0)
        for p in range(npts):
            xp = x[p]
            h_prev = c0 * np.exp(-0.5 * xp * xp)
            out[p, 0] = h_prev
            if n == 1:
                continue
            h_cur = s2 * xp * h_prev
            out[p, 1] = h_cur
            for l in range(1, n - 1):
                h_next = np.sqrt(2.0 / (l + 1)) * xp * h_cur - np.sqrt(l / (l + 1.0)) * h_prev
                out[p, l + 1] = h_next
                h_prev = h_cur
                h_cur = h_next
        return out

    NUMBA = SimpleNamespace(
        name="numba",
        weighted_sum=_weighted_sum_nb,
        contract=_contract_nb,
        two_loop=_two_loop_nb,
        hermite_functions=_hermite_functions_nb,
    )
else:  # pragma: no cover
    NUMBA = None


def _select():
    flag = os.environ.get("QSDP_NUMBA", "1").strip().lower()
    if NUMBA is not None and flag not in ("0", "false", "no", "off"):
        return NUMBA
    return NUMPY


def _apply_thread_cap():
    cap = os.environ.get("QSDP_THREADS")
    if not cap:
        return
    n = max(1, int(cap))
    if nb is not None:
        nb.set_num_threads(min(n, nb.config.NUMBA_NUM_THREADS))
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return
    threadpool_limits(limits=n)


_apply_thread_cap()
ACTIVE = _select()

weighted_sum = ACTIVE.weighted_sum
contract = ACTIVE.contract
two_loop = ACTIVE.two_loop
hermite_functions = ACTIVE.hermite_functions


def backend():
    """Name of the kernel set selected at import time."""
    return ACTIVE.name
