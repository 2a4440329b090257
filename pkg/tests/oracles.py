"""Independent reference implementations used to freeze expected values.

They share no code with the library: words are reduced by repeated scanning,
valuations are exact rationals and products are expanded term by term.
"""

from __future__ import annotations

from fractions import Fraction


def reduce_by_scanning(word):
    """Cancel adjacent inverse pairs until none remain (quadratic, obviously correct)."""
    w = list(word)
    changed = True
    while changed:
        changed = False
        for j in range(len(w) - 1):
            if w[j] == -w[j + 1]:
                del w[j : j + 2]
                changed = True
                break
    return tuple(w)


def exact_value(word, uvals):
    """Exact rational valuation; ``uvals[j]`` is the value of generator ``j + 1``."""
    total = Fraction(0)
    for a in word:
        u = Fraction(uvals[abs(a) - 1])
        total += u if a > 0 else -u
    return total


def expand_product(a, b, uvals, L):
    """Product of term dicts ``{(s, t, word): coeff}`` truncated at ``-L``."""
    cut = -Fraction(L)
    out = {}
    for (sa, ta, wa), ca in a.items():
        for (sb, tb, wb), cb in b.items():
            if ta != sb:
                continue
            w = reduce_by_scanning(wa + wb)
            if not exact_value(w, uvals) > cut:
                continue
            key = (sa, tb, w)
            out[key] = out.get(key, 0) + ca * cb
    return {k: c for k, c in out.items() if c}


def truncate_terms(a, uvals, L):
    cut = -Fraction(L)
    return {k: c for k, c in a.items() if c and exact_value(k[2], uvals) > cut}


def power_series_terms(src, word, coeffs, uvals, L):
    """``sum_j coeffs(j) * word^j`` at ``src`` keeping powers above ``-L``."""
    out = {}
    j = 0
    step = exact_value(word, uvals)
    assert step < 0
    while j * step > -Fraction(L):
        c = coeffs(j)
        if c:
            out[(src, src, tuple(word) * j)] = c
        j += 1
    return out


def descend_by_flow_time(xm, xp, delta_star):
    """Descent computed by solving for the exit time and applying the flow.

    With ``a = |xm|`` and ``b = |xp|`` the bottom is reached when
    ``a^2 e^{4t} - b^2 e^{-4t} = delta_star``; ``z = e^{4t}`` solves a quadratic.
    """
    import math

    a2 = sum(v * v for v in xm)
    b2 = sum(v * v for v in xp)
    z = (delta_star + math.sqrt(delta_star**2 + 4 * a2 * b2)) / (2 * a2)
    t = math.log(z) / 4
    return [v * math.exp(2 * t) for v in xm], [v * math.exp(-2 * t) for v in xp]
