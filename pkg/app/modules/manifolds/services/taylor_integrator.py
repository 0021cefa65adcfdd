# app/modules/manifolds/services/taylor_integrator.py
"""
Variable-order Taylor series integration of polynomial vector fields.
File location: app/modules/manifolds/services/taylor_integrator.py

Jets are generated by automatic differentiation of the monomials: the
Taylor coefficients of x^i, y^j, z^k are built by Cauchy products of the
coefficients already known, so order N costs O(N^2) per monomial. The
first three state components are (x, y, z); extra components (for
instance the running integral of the divergence) are driven by (x, y, z)
only.
"""

from typing import Callable, Dict, List, Optional, Tuple

import mpmath as mp

from app.modules.model.services.polynomial_field import Exponent, PolynomialField


def _cauchy(a: List, b: List, k: int):
    """k-th coefficient of the product of two series"""
    return mp.fdot(a[: k + 1], b[k::-1])


class TaylorJet:
    """Taylor coefficients of the solution through a point, for a fixed field"""

    def __init__(self, field: PolynomialField):
        self.field = field
        self.monomials: List[Exponent] = field.monomials()
        self.pairs = sorted({(i, j) for i, j, _ in self.monomials})
        self.max_exponents = [max([e[axis] for e in self.monomials], default=0) for axis in range(3)]

    def coefficients(self, state: List, order: int) -> List[List]:
        """series[c][j] for j = 0..order"""
        series = [[value] for value in state]
        one = [mp.mpf(1)] + [mp.mpf(0)] * order
        powers: List[List[List]] = []
        for axis in range(3):
            row = [one, series[axis]]
            row.extend([] for _ in range(2, self.max_exponents[axis] + 1))
            powers.append(row)
        pair_series: Dict[Tuple[int, int], List] = {pair: [] for pair in self.pairs}
        monomial_series: Dict[Exponent, List] = {e: [] for e in self.monomials}

        for k in range(order):
            for axis in range(3):
                row = powers[axis]
                for e in range(2, self.max_exponents[axis] + 1):
                    row[e].append(_cauchy(row[e - 1], series[axis], k))
            px, py, pz = powers
            for (i, j), values in pair_series.items():
                values.append(_cauchy(px[i], py[j], k))
            for (i, j, l), values in monomial_series.items():
                values.append(_cauchy(pair_series[(i, j)], pz[l], k))
            for c, component in enumerate(self.field.components):
                total = mp.fsum(coef * monomial_series[e][k] for e, coef in component.items())
                series[c].append(total / (k + 1))
        return series


def order_for(tol) -> int:
    """Order balancing step count against jet cost, about -log(tol) / 2"""
    return max(8, int(mp.ceil(-mp.log(tol) / 2)) + 1)


def step_size(series: List[List], tol, scale, factor) -> Optional[object]:
    """Largest h with the last two terms of the jet below tol * scale"""
    order = len(series[0]) - 1
    candidates = []
    for j in (order - 1, order):
        size = max(abs(component[j]) for component in series)
        if size != 0:
            candidates.append(mp.power(tol * scale / size, mp.mpf(1) / j))
    if not candidates:
        return None
    return factor * min(candidates)


def horner(coefficients: List, s):
    acc = coefficients[-1]
    for coef in reversed(coefficients[:-1]):
        acc = acc * s + coef
    return acc


def derivative_coefficients(coefficients: List) -> List:
    return [j * coefficients[j] for j in range(1, len(coefficients))] or [mp.mpf(0)]


def evaluate_jet(series: List[List], s) -> List:
    return [horner(component, s) for component in series]


def refine_root(coefficients: List, level, h, tol) -> Tuple[object, object]:
    """Root of p(s) = level on [0, h] by a bracketing solve polished with Newton on the step polynomial"""
    g: Callable = lambda s: horner(coefficients, s) - level
    dg = derivative_coefficients(coefficients)
    try:
        s = mp.findroot(g, (mp.mpf(0), h), solver="anderson", tol=tol**2, verify=False)
    except (ValueError, ZeroDivisionError):
        s = h / 2
    s = min(max(mp.re(s), mp.mpf(0)), h)
    for _ in range(4):
        slope = horner(dg, s)
        if slope == 0:
            break
        s = min(max(s - g(s) / slope, mp.mpf(0)), h)
    return s, abs(g(s))
