# app/modules/special/services/quadrature.py
"""
Tanh-sinh quadrature along horizontal lines of the complex plane.
File location: app/modules/special/services/quadrature.py

Integrands here decay like exp(-decay * d |t|) and oscillate like
exp(-i omega t). For omega != 0 the line is pushed towards the nearest
singularity of 1/cosh(d s), at distance eps/d, which turns the oscillation
into the exponential factor exp(-|omega| (pi/2 - eps)/d).
"""

import logging
from typing import Callable, List, NamedTuple, Optional

import mpmath as mp

from app.core.exceptions import AccuracyException

logger = logging.getLogger(__name__)

MAX_SEGMENTS = 600


class LinePlan(NamedTuple):
    shift: object  # Im s on the path
    eps: object
    points: List[object]


def plan_line(
    omega,
    d,
    decay,
    tol,
    rho=None,
    log_dynamic=0,
    shift_path: bool = True,
) -> LinePlan:
    """Choose the path Im s = -sign(omega)(pi/2 - eps)/d and the subdivision of its real extent"""
    omega, d, decay = mp.mpf(omega), mp.mpf(d), mp.mpf(decay)
    if decay <= 0:
        raise ValueError("integrand must decay at infinity")
    quarter = mp.pi / 4
    if shift_path and omega != 0:
        rho = mp.mpf(rho) if rho is not None else 8 * d
        eps = min(rho / abs(omega), quarter)
        shift = -mp.sign(omega) * (mp.pi / 2 - eps) / d
    else:
        eps = quarter
        shift = mp.mpf(0)
    extent = (mp.log(1 / mp.mpf(tol)) + log_dynamic + 5) / (decay * d)

    fine = eps / d if shift != 0 else 1 / d
    coarse = 2 / d
    if omega != 0:
        coarse = min(coarse, 6 * mp.pi / abs(omega))
    coarse = max(coarse, 2 * extent / MAX_SEGMENTS)

    right = [mp.mpf(0)]
    step = fine
    while right[-1] + step < min(extent, 2 / d) and step < coarse:
        right.append(right[-1] + step)
        step *= 2
    while right[-1] < extent:
        right.append(min(right[-1] + coarse, extent))
    points = [-t for t in reversed(right[1:])] + right
    return LinePlan(shift=shift, eps=eps, points=points)


def quad_line(
    integrand: Callable[[object], object],
    plan: LinePlan,
    tol,
    label: str = "integral",
    abs_floor=0,
):
    """Integral of integrand(t + i shift) dt over the planned segments, returns (value, error)"""
    shift = plan.shift

    if shift == 0:
        f = integrand
    else:
        def f(t):
            return integrand(mp.mpc(t, shift))

    tol = mp.mpf(tol)
    value, error = mp.quad(f, plan.points, error=True)
    scale = max(abs(value), mp.mpf(abs_floor))
    if error > tol * scale:
        value, error = mp.quad(f, plan.points, error=True, maxdegree=12)
        scale = max(abs(value), mp.mpf(abs_floor))
    logger.debug(f"{label}: |value| {mp.nstr(abs(value), 6)}, error {mp.nstr(error, 3)}")
    if error > tol * scale:
        achieved = error / scale if scale else error
        raise AccuracyException(f"{label} missed relative tolerance {mp.nstr(tol, 3)}", achieved=mp.nstr(achieved, 3))
    return value, error


def segment_points(a, b, spacing) -> List[object]:
    """Breakpoints a, a + spacing, ..., b"""
    a, b = mp.mpf(a), mp.mpf(b)
    count = max(1, min(MAX_SEGMENTS, int(mp.ceil(abs(b - a) / spacing))))
    return [a + (b - a) * j / count for j in range(count + 1)]


def real_extent(decay, d, tol, log_dynamic=0):
    return (mp.log(1 / mp.mpf(tol)) + log_dynamic + 5) / (mp.mpf(decay) * mp.mpf(d))
