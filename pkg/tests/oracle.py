"""Element-wise reference implementations.

Weights are materialized one index at a time straight from the written
definitions of each construction; sets are plain Python sets.  Nothing here
imports the segment machinery of the package.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations


def bd1(n):
    e = [0]
    k = 1
    while len(e) < n:
        e += [1] * k + [-k]
        k += 1
    return e[:n]


def p41_1(n):
    e = []
    k = 0
    while len(e) < n:
        e += [0] * 10**k + [1] * (k + 1) + [-(k + 1)]
        k += 1
    return e[:n]


def p41_2(n):
    def size(a, b):
        return 10 ** (2**b) - 10 ** (2**a)

    e = []
    k = 0
    prev = None
    while len(e) < n:
        m = size(2 * k + 1, 2 * k + 2)
        nk = size(2 * k + 2, 2 * k + 3)
        if prev is None:
            e += [0] * min(m, n)
        else:
            e += [-prev] + [0] * min(m - 1, n)
        e += [1] * min(nk, n)
        prev = nk
        k += 1
    return e[:n]


def p41_3(n):
    e = [0, 1, -1]
    k = 0
    while len(e) < n:
        m = 10 ** (2**k)
        e += [0] * (k + 2) + [1] * min(m, n) + [-m]
        k += 1
    return e[:n]


def ruler_block(n):
    """Doubling blocks: ``R(1) = a(1)``, ``R(n) = R(n-1) a(n) R(n-1)`` with ``a(k)`` = k twos then ``2**-k``."""
    if n == 1:
        return [1, -1]
    inner = ruler_block(n - 1)
    return inner + [1] * n + [-n] + inner


def p44(n):
    k = 1
    while len(ruler_block(k)) < n:
        k += 1
    return ruler_block(k)[:n]


def reset_weights(B, n):
    """Weight 2 off ``B`` and ``2**-(b_k - b_{k-1} - 1)`` at each ``b_k``."""
    Bs = sorted(B)
    e = [1] * n
    prev = 0
    for b in Bs:
        if b > n:
            break
        e[b - 1] = -(b - prev - 1)
        prev = b
    return e


def ip_base(limit):
    powers = [4**k for k in range(1, 40) if 4**k <= limit]
    out = set()
    for r in range(1, len(powers) + 1):
        for c in combinations(powers, r):
            s = sum(c)
            if s <= limit:
                out.add(s)
    return out


def delta_base(limit):
    b = [2]
    i = 1
    while b[-1] <= limit:
        b.append(b[-1] + i + 2)
        i += 1
    return set(b)


def rhc_members(limit):
    S = set()
    for j in range(1, 12):
        if 10**j - j >= limit + j:
            break
        l = 1
        while l * 10**j - j < limit + 2:
            S.update(range(l * 10**j - j + 1, l * 10**j + j))
            l += 1
    return S


def p52(n):
    return reset_weights(ip_base(n + 1), n)


def p54(n):
    return reset_weights(delta_base(n + 1), n)


def p58(n):
    S = rhc_members(n + 2)
    e = []
    total = 0
    for k in range(1, n + 1):
        if k in S:
            x = 1
        elif k - 1 in S:
            x = -total
        else:
            x = 0
        e.append(x)
        total += x
    return e


EXPONENTS = {
    "bd1_nonmixing": bd1,
    "p41_1": p41_1,
    "p41_2": p41_2,
    "p41_3": p41_3,
    "p44_ruler": p44,
    "p52_ip": p52,
    "p54_delta": p54,
    "p58_rhc": p58,
}


def weights(e):
    """``[w_1, ..., w_n]`` as exact rationals from exponents."""
    return [Fraction(2) ** x for x in e]


def forward_set(w, t, j, horizon, index=None):
    """``{n <= horizon : prod_{i=j+1}^{j+n} w_i > 2**t}`` by running products.

    ``w`` maps an index to its weight (a list is read with ``w[i-1]``).
    """
    get = index or (lambda i: w[i - 1])
    M = Fraction(2) ** t
    out = set()
    prod = Fraction(1)
    for n in range(1, horizon + 1):
        prod *= get(j + n)
        if prod > M:
            out.add(n)
    return out


def backward_set(get, t, j, horizon, lowest=None):
    """``{n <= horizon : 1 / prod_{i=j-n+1}^{j} w_i > 2**t}``; stops when ``j - n + 1 < lowest``."""
    M = Fraction(2) ** t
    out = set()
    prod = Fraction(1)
    for n in range(1, horizon + 1):
        i = j - n + 1
        if lowest is not None and i < lowest:
            break
        prod *= get(i)
        if 1 / prod > M:
            out.add(n)
    return out


def prefix_products(e):
    """``E(k)`` for ``k = 0..n``."""
    out = [0]
    for x in e:
        out.append(out[-1] + x)
    return out
