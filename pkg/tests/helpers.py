import mpmath


def rel_err(a, b):
    """|a - b| / |b| as an mpf; b must be nonzero."""
    a = mpmath.mpc(a)
    b = mpmath.mpc(b)
    return abs(a - b) / abs(b)
