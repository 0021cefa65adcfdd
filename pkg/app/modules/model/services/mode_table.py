# app/modules/model/services/mode_table.py
"""
Exact Fourier modes of trigonometric monomials.

a_{k,m}^{[l]} is the coefficient of exp(i l theta) in cos^k(theta) sin^m(theta),
a Gaussian rational returned as a pair (real part, imaginary part).
"""

from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Tuple

import mpmath as mp

GaussianRational = Tuple[Fraction, Fraction]


@lru_cache(maxsize=None)
def trig_mode(k: int, m: int, l: int) -> GaussianRational:
    if k < 0 or m < 0:
        raise ValueError("exponents must be nonnegative")
    # cos^k sin^m = 2^-(k+m) (-i)^m sum C(k,a) C(m,b) (-1)^(m-b) exp(i(2a-k+2b-m) theta)
    total = Fraction(0)
    for a in range(k + 1):
        twice_b = l + k + m - 2 * a
        if twice_b % 2 or not 0 <= twice_b // 2 <= m:
            continue
        b = twice_b // 2
        sign = -1 if (m - b) % 2 else 1
        total += sign * comb(k, a) * comb(m, b)
    total /= 2 ** (k + m)
    quarter = m % 4
    if quarter == 0:
        return (total, Fraction(0))
    if quarter == 1:
        return (Fraction(0), -total)
    if quarter == 2:
        return (-total, Fraction(0))
    return (Fraction(0), total)


def trig_mode_mp(k: int, m: int, l: int) -> mp.mpc:
    re, im = trig_mode(k, m, l)
    return mp.mpc(mp.mpf(re.numerator) / re.denominator, mp.mpf(im.numerator) / im.denominator)
