"""Pure numpy implementations of the hot kernels.

Same contract as the compiled ``_ckernels`` module; selected by
:mod:`smcodec._backend` when the extension is unavailable.
"""

import numpy as np

from .keyed import word, words

BACKEND = "python"

TWO64 = 1 << 64

# CDF 9/7 lifting factorisation.
ALPHA = -1.586134342059924
BETA = -0.052980118572961
GAMMA = 0.882911075530934
DELTA = 0.443506852043971
KAPPA = 1.149604398860241


def fisher_yates(seed, n):
    """Durstenfeld shuffle of ``0..n-1``: for i = n-1..1 swap a[i], a[j], j ~ U[0, i]."""
    buf = words(seed, 0, max(n - 1, 0)).tolist()
    perm = list(range(n))
    c = 0
    for i in range(n - 1, 0, -1):
        k = i + 1
        thr = TWO64 % k
        while True:
            r = buf[c] if c < len(buf) else word(seed, c)
            c += 1
            if r >= thr:
                break
        j = r % k
        perm[i], perm[j] = perm[j], perm[i]
    return np.array(perm, dtype=np.int64)


def partial_fisher_yates(seed, n, m):
    """First ``m`` slots of a forward shuffle: for i = 0..m-1 swap a[i], a[j], j ~ U[i, n-1]."""
    buf = words(seed, 0, m).tolist()
    perm = list(range(n))
    c = 0
    for i in range(m):
        k = n - i
        thr = TWO64 % k
        while True:
            r = buf[c] if c < len(buf) else word(seed, c)
            c += 1
            if r >= thr:
                break
        j = i + r % k
        perm[i], perm[j] = perm[j], perm[i]
    return np.array(perm[:m], dtype=np.int64)


def fwht_blocks(a):
    """Unnormalised in-place Walsh-Hadamard transform of each row of ``a``."""
    nb, B = a.shape
    h = 1
    while h < B:
        v = a.reshape(nb, B // (2 * h), 2, h)
        x = v[:, :, 0, :].copy()
        v[:, :, 0, :] += v[:, :, 1, :]
        v[:, :, 1, :] *= -1.0
        v[:, :, 1, :] += x
        h *= 2
    return a


# Lifting steps on (rows, n) arrays of even samples s and odd samples d.
# Boundaries follow whole-sample symmetric extension: s[n] = s[n-1], d[-1] = d[0].

def _predict(s, d, c):
    d[:, :-1] += c * (s[:, :-1] + s[:, 1:])
    d[:, -1] += 2.0 * c * s[:, -1]


def _update(s, d, c):
    s[:, 1:] += c * (d[:, :-1] + d[:, 1:])
    s[:, 0] += 2.0 * c * d[:, 0]


def _predict_t(s, d, c):
    t = c * d
    s += t
    s[:, 1:] += t[:, :-1]
    s[:, -1] += t[:, -1]


def _update_t(s, d, c):
    t = c * s
    d += t
    d[:, :-1] += t[:, 1:]
    d[:, 0] += t[:, 0]


def lift_analysis_rows(a):
    """One analysis level along each row: returns ``[low | high]``."""
    s = a[:, 0::2].copy()
    d = a[:, 1::2].copy()
    _predict(s, d, ALPHA)
    _update(s, d, BETA)
    _predict(s, d, GAMMA)
    _update(s, d, DELTA)
    s *= KAPPA
    d *= 1.0 / KAPPA
    return np.hstack((s, d))


def lift_synthesis_rows(c):
    """Exact inverse of :func:`lift_analysis_rows`."""
    n = c.shape[1] // 2
    s = c[:, :n] * (1.0 / KAPPA)
    d = c[:, n:] * KAPPA
    _update(s, d, -DELTA)
    _predict(s, d, -GAMMA)
    _update(s, d, -BETA)
    _predict(s, d, -ALPHA)
    out = np.empty_like(c)
    out[:, 0::2] = s
    out[:, 1::2] = d
    return out


def lift_synthesis_adjoint_rows(a):
    """Transpose of :func:`lift_synthesis_rows` (not its inverse: the basis is biorthogonal)."""
    s = a[:, 0::2].copy()
    d = a[:, 1::2].copy()
    _predict_t(s, d, -ALPHA)
    _update_t(s, d, -BETA)
    _predict_t(s, d, -GAMMA)
    _update_t(s, d, -DELTA)
    s *= 1.0 / KAPPA
    d *= KAPPA
    return np.hstack((s, d))
