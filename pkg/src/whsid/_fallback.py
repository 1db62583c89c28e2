"""NumPy/SciPy implementations of the compiled kernels, used when the extension is absent."""

import numpy as np
from scipy import signal


def df2t_filter(b, a, x, zi):
    """Transposed direct-form II recursion with ``a[0] == 1``; ``zi`` updated in place."""
    if len(b) == 1:
        return b[0] * np.asarray(x, dtype=np.float64)
    y, zf = signal.lfilter(b, a, x, zi=zi)
    zi[:] = zf
    return y


def period_variance(y):
    """Unbiased variance across axis 1 of an (M, P, N) block, shape (M, N)."""
    # shifting by the first period keeps identical periods at exactly zero
    return np.var(y - y[:, :1], axis=1, ddof=1)
