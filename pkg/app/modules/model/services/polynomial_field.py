# app/modules/model/services/polynomial_field.py
"""
Sparse polynomial vector fields in (x, y, z) with mpmath coefficients.
File location: app/modules/model/services/polynomial_field.py

The scaled Hopf-zero field is polynomial once the Taylor tables are
truncated, so evaluation, Jacobians, Hessians, divergence and Taylor jets
all work on the same monomial dictionaries.
"""

from typing import Dict, List, Sequence, Tuple

import mpmath as mp

from app.modules.model.schemas.model import Component, ModelSpec, Params, PerturbationSeries

Exponent = Tuple[int, int, int]
Polynomial = Dict[Exponent, object]

_AXES = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def _add(poly: Polynomial, exponent: Exponent, coef) -> None:
    if coef == 0:
        return
    poly[exponent] = poly.get(exponent, 0) + coef


class PolynomialField:
    def __init__(self, components: Sequence[Polynomial]):
        self.components: List[Polynomial] = [
            {e: c for e, c in comp.items() if c != 0} for comp in components
        ]
        degrees = [max(e[axis] for comp in self.components for e in comp) if any(self.components) else 0
                   for axis in range(3)]
        self.max_exponents = tuple(degrees)

    @property
    def dimension(self) -> int:
        return len(self.components)

    def monomials(self) -> List[Exponent]:
        return sorted({e for comp in self.components for e in comp})

    def _powers(self, point) -> List[List[object]]:
        powers = []
        for axis, value in enumerate(point):
            row = [mp.mpf(1)]
            for _ in range(self.max_exponents[axis]):
                row.append(row[-1] * value)
            powers.append(row)
        return powers

    def evaluate(self, point) -> List[object]:
        px, py, pz = self._powers(point)
        out = []
        for comp in self.components:
            acc = mp.mpf(0)
            for (i, j, k), coef in comp.items():
                acc += coef * px[i] * py[j] * pz[k]
            out.append(acc)
        return out

    def derivative(self, axis: int) -> "PolynomialField":
        comps = []
        for comp in self.components:
            dpoly: Polynomial = {}
            for e, coef in comp.items():
                if e[axis] == 0:
                    continue
                lowered = list(e)
                lowered[axis] -= 1
                _add(dpoly, tuple(lowered), coef * e[axis])
            comps.append(dpoly)
        return PolynomialField(comps)

    def jacobian(self, point) -> mp.matrix:
        partials = [self.derivative(axis).evaluate(point) for axis in range(3)]
        J = mp.matrix(self.dimension, 3)
        for row in range(self.dimension):
            for col in range(3):
                J[row, col] = partials[col][row]
        return J

    def hessian(self, component: int, point) -> mp.matrix:
        scalar = PolynomialField([self.components[component]])
        H = mp.matrix(3, 3)
        for a in range(3):
            da = scalar.derivative(a)
            for b in range(a, 3):
                H[a, b] = H[b, a] = da.derivative(b).evaluate(point)[0]
        return H

    def divergence(self) -> "PolynomialField":
        div: Polynomial = {}
        for axis in range(3):
            for e, coef in self.derivative(axis).components[axis].items():
                _add(div, e, coef)
        return PolynomialField([div])

    def scaled(self, factor) -> "PolynomialField":
        return PolynomialField([{e: factor * c for e, c in comp.items()} for comp in self.components])

    def plus(self, other: "PolynomialField") -> "PolynomialField":
        comps = [dict(comp) for comp in self.components]
        for target, comp in zip(comps, other.components):
            for e, coef in comp.items():
                _add(target, e, coef)
        return PolynomialField(comps)

    def extended(self, extra: "PolynomialField") -> "PolynomialField":
        return PolynomialField(self.components + extra.components)

    def max_abs_coefficient(self):
        return max((abs(c) for comp in self.components for c in comp.values()), default=mp.mpf(0))


def unperturbed_field(spec: ModelSpec, params: Params) -> PolynomialField:
    """x' = x(s - dz) + (w + cz)y, y' = -(w + cz)x + y(s - dz), z' = -1 + b(x^2+y^2) + z^2"""
    sigma = mp.mpf(str(params.sigma))
    d = mp.mpf(str(spec.d))
    c = mp.mpf(str(spec.c))
    b = mp.mpf(str(spec.b))
    omega = params.alpha(spec) / mp.mpf(str(params.delta))
    fx = {(1, 0, 0): sigma, (1, 0, 1): -d, (0, 1, 0): omega, (0, 1, 1): c}
    fy = {(1, 0, 0): -omega, (1, 0, 1): -c, (0, 1, 0): sigma, (0, 1, 1): -d}
    fz = {(0, 0, 0): mp.mpf(-1), (2, 0, 0): b, (0, 2, 0): b, (0, 0, 2): mp.mpf(1)}
    return PolynomialField([fx, fy, fz])


def perturbation_field(series: PerturbationSeries, params: Params) -> PolynomialField:
    """(f, g, h) in scaled variables: sum_q delta^q sum f_qkmn x^k y^m z^n, without the delta^p weight"""
    delta = mp.mpf(str(params.delta))
    comps: List[Polynomial] = []
    for component in (Component.F, Component.G, Component.H):
        poly: Polynomial = {}
        for term in series.component_terms(component):
            _add(poly, (term.k, term.m, term.n), mp.mpf(str(term.value)) * delta**term.q)
        comps.append(poly)
    return PolynomialField(comps)


def full_field(spec: ModelSpec, series: PerturbationSeries, params: Params) -> PolynomialField:
    weight = mp.power(mp.mpf(str(params.delta)), mp.mpf(str(spec.p)))
    return unperturbed_field(spec, params).plus(perturbation_field(series, params).scaled(weight))
