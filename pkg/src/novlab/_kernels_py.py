"""Pure-Python kernels. The compiled module ``_ckernels`` mirrors this API."""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def reduce_word(letters):
    """Freely reduce a sequence of signed letters.

    >>> reduce_word((1, 2, -2, -1, 3))
    (3,)
    """
    out = []
    for a in letters:
        if out and out[-1] == -a:
            out.pop()
        else:
            out.append(a)
    return tuple(out)


def reduce_concat(w1, w2):
    """Concatenate two reduced words; cancellation can only happen at the seam.

    >>> reduce_concat((1, 2), (-2, 3))
    (1, 3)
    """
    n1 = len(w1)
    n2 = len(w2)
    k = 0
    while k < n1 and k < n2 and w1[n1 - 1 - k] == -w2[k]:
        k += 1
    return w1[: n1 - k] + w2[k:]


def mul_terms(a_items, b_items, valuation, cutoff):
    """Product of two term lists, keeping only words with valuation > cutoff.

    Items are ``(source, target, word, coeff)``. ``valuation`` maps a reduced
    word to its real value. Returns a dict keyed by ``(source, target, word)``.
    """
    by_source = {}
    for item in b_items:
        by_source.setdefault(item[0], []).append(item)
    out = {}
    for sa, ta, wa, ca in a_items:
        partners = by_source.get(ta)
        if not partners:
            continue
        for _, tb, wb, cb in partners:
            w = reduce_concat(wa, wb)
            if not valuation(w) > cutoff:
                continue
            key = (sa, tb, w)
            c = out.get(key, 0) + ca * cb
            if c:
                out[key] = c
            else:
                del out[key]
    return out


def descend_batch(xm, xp, delta_star, eps):
    """Flow points of the top boundary down to the bottom boundary.

    ``xm`` is (N, i), ``xp`` is (N, n - i). Rows with ``|xm| < eps`` come back
    as NaN.
    """
    xm = np.asarray(xm, dtype=float)
    xp = np.asarray(xp, dtype=float)
    a2 = np.einsum("ij,ij->i", xm, xm)
    b2 = np.einsum("ij,ij->i", xp, xp)
    bad = a2 < eps * eps
    a2s = np.where(bad, 1.0, a2)
    z = (delta_star + np.sqrt(delta_star * delta_star + 4.0 * a2s * b2)) / (2.0 * a2s)
    sz = np.sqrt(z)
    out_m = xm * sz[:, None]
    out_p = xp / sz[:, None]
    out_m[bad] = np.nan
    out_p[bad] = np.nan
    return out_m, out_p


def ascend_batch(xm, xp, delta_star, eps):
    """Inverse of :func:`descend_batch`; rows with ``|xp| < eps`` become NaN."""
    out_p, out_m = descend_batch(xp, xm, delta_star, eps)
    return out_m, out_p
