# app/modules/special/services/integral_service.py
"""
Service layer for the oscillatory integrals I_{n,Q}^{l,C}.
File location: app/modules/special/services/integral_service.py

Three independent routes: tanh-sinh quadrature on a shifted contour, the
Beta closed form lifted to n > 0 by the integration-by-parts recurrence,
and the leading term of the large-omega expansion.
"""

import logging
from decimal import Decimal
from typing import Iterable, List, Optional, Tuple

import mpmath as mp

from app.core.exceptions import DivisionException, DomainException, LabException
from app.core.precision import ScalarConfig, to_mpf, working_precision
from app.modules.special.schemas.integral import IIntegralKey, IntegralRoute, IntegralRow, IntegralValue
from app.modules.special.services.gamma_service import gamma_checked
from app.modules.special.services.quadrature import plan_line, quad_line

logger = logging.getLogger(__name__)


# Kernels at the active precision. Omega = omega |l|, Cl = C |l|.

def integrand(n: int, Q, Cl, Omega, d):
    beta = mp.mpc(Q + 1, Cl)

    def f(s):
        ds = d * s
        return mp.expj(-Omega * s) * mp.sinh(ds) ** n * mp.power(mp.cosh(ds), -beta)

    return f


def closed_beta_value(Q, Cl, Omega, d):
    """2^(beta-1)/d Gamma(a) Gamma(beta-a) / Gamma(beta), beta = Q+1+iCl, a = (beta + i Omega/d)/2"""
    if Q <= -1:
        raise DomainException(f"Beta closed form needs Q > -1, got {Q}")
    beta = mp.mpc(Q + 1, Cl)
    a = (beta + mp.mpc(0, Omega / d)) / 2
    return mp.power(2, beta - 1) / d * gamma_checked(a) * gamma_checked(beta - a) / gamma_checked(beta)


def recurrence_step(n: int, Q, Cl, Omega, d, previous, before_previous=None):
    """I_{n,Q} from I_{n-1,Q-1} and I_{n-2,Q-2}"""
    if n < 1:
        raise DomainException("recurrence needs n >= 1")
    denominator = mp.mpc(Q, Cl)
    if denominator == 0:
        raise DivisionException(f"Q + i C|l| vanishes at Q = {Q}")
    value = mp.mpc(0, -Omega) / (d * denominator) * previous
    if n >= 2:
        value += (n - 1) / denominator * before_previous
    return value


def closed_value(n: int, Q, Cl, Omega, d):
    """Beta base case I_{0,Q-n} carried up to I_{n,Q} by the recurrence"""
    if Omega == 0 and n % 2:
        return mp.mpc(0)
    chain = [closed_beta_value(Q - n, Cl, Omega, d)]
    for j in range(1, n + 1):
        before = chain[-2] if j >= 2 else None
        chain.append(recurrence_step(j, Q - n + j, Cl, Omega, d, chain[-1], before))
    return chain[-1]


def asymptotic_value(n: int, Q, Cl, Omega, d):
    """(2 pi/d)(Omega/d)^(Q+iCl) (-i)^n exp(-pi Omega/(2d)) / Gamma(Q+1+iCl)"""
    if Omega <= 0:
        raise DomainException("asymptotic expansion needs omega > 0")
    exponent = mp.mpc(Q, Cl)
    return (
        2 * mp.pi / d
        * mp.power(Omega / d, exponent)
        * mp.power(mp.mpc(0, -1), n)
        * mp.exp(-mp.pi * Omega / (2 * d))
        / gamma_checked(exponent + 1)
    )


def quadrature_value(n: int, Q, Cl, Omega, d, tol, rho=None) -> Tuple[object, object]:
    if Omega == 0 and Cl == 0 and n % 2:
        return mp.mpc(0), mp.mpf(0)
    decay = Q + 1 - n
    eps_guess = min(mp.mpf(rho) / abs(Omega), mp.pi / 4) if (rho and Omega) else mp.pi / 4
    log_dynamic = (Q + 1) * mp.log(2) + abs(Cl) * mp.pi / 2 + abs(Omega) * eps_guess / d
    plan = plan_line(Omega, d, decay, tol, rho=rho, log_dynamic=log_dynamic)
    value, error = quad_line(integrand(n, Q, Cl, Omega, d), plan, tol, label=f"I[{n},{mp.nstr(Q, 5)}]")
    return mp.mpc(value), error


class IntegralService:
    def __init__(self, cfg: Optional[ScalarConfig] = None):
        self.cfg = cfg or ScalarConfig.from_settings()

    def _unpack(self, key: IIntegralKey):
        L = abs(key.l)
        return key.n, to_mpf(key.Q), to_mpf(key.C) * L, to_mpf(key.omega) * L, to_mpf(key.d)

    def contour_rho(self, Q, d):
        if self.cfg.contour_shift_rho is not None:
            return to_mpf(self.cfg.contour_shift_rho)
        return max(mp.mpf(8), mp.mpf(Q)) * d

    def I_quadrature(self, key: IIntegralKey) -> IntegralValue:
        """Tanh-sinh quadrature, shifted contour for l != 0 and the real line for l = 0"""
        with working_precision(self.cfg):
            n, Q, Cl, Omega, d = self._unpack(key)
            value, error = quadrature_value(n, Q, Cl, Omega, d, self.cfg.tolerance(), self.contour_rho(Q, d))
            return IntegralValue(value=value, error=error, route=IntegralRoute.QUADRATURE)

    def I_closed_beta(self, Q, C, omega, d):
        """The l = 1, n = 0 integral in closed form"""
        with working_precision(self.cfg):
            return closed_beta_value(to_mpf(Q), to_mpf(C), to_mpf(omega), to_mpf(d))

    def I_recurrence(self, key: IIntegralKey, base: Tuple[object, Optional[object]]):
        with working_precision(self.cfg):
            n, Q, Cl, Omega, d = self._unpack(key)
            if key.n < 1:
                raise DomainException("recurrence needs n >= 1")
            previous, before_previous = base
            if n >= 2 and before_previous is None:
                raise DomainException("n >= 2 needs both base values")
            return recurrence_step(n, Q, Cl, Omega, d, previous, before_previous)

    def I_beta_recurrence(self, key: IIntegralKey) -> IntegralValue:
        with working_precision(self.cfg):
            value = closed_value(*self._unpack(key))
            return IntegralValue(value=value, error=abs(value) * self.cfg.eps() * 2**16, route=IntegralRoute.BETA)

    def I_asymptotic(self, n: int, Q, C, omega, d):
        with working_precision(self.cfg):
            return asymptotic_value(n, to_mpf(Q), to_mpf(C), to_mpf(omega), to_mpf(d))

    def I_bound_check(self, key: IIntegralKey, value, K=10, M=1) -> bool:
        """|I| <= K M^Q omega^Q exp(-(3|l|/4) pi omega / (2d)) for |l| >= 2"""
        if abs(key.l) < 2:
            raise DomainException("the decay bound applies to |l| >= 2")
        with working_precision(self.cfg):
            if value == 0:
                return True
            Q, omega, d = to_mpf(key.Q), abs(to_mpf(key.omega)), to_mpf(key.d)
            bound = (
                to_mpf(K) * mp.power(to_mpf(M) * omega, Q)
                * mp.exp(-mp.mpf(3 * abs(key.l)) / 4 * mp.pi * omega / (2 * d))
            )
            return abs(value) <= bound

    def triangulate(self, key: IIntegralKey) -> IntegralRow:
        """All three routes for one lattice point, errors recorded rather than raised"""
        row = IntegralRow(key=key)
        try:
            quad = self.I_quadrature(key)
            beta = self.I_beta_recurrence(key)
            row.quadrature, row.quadrature_error, row.beta = quad.value, quad.error, beta.value
            with working_precision(self.cfg):
                row.gap_quadrature_beta = _relative_gap(quad.value, beta.value)
                if key.l != 0 and key.omega > 0:
                    n, Q, Cl, Omega, d = self._unpack(key)
                    row.asymptotic = asymptotic_value(n, Q, Cl, Omega, d)
                    row.gap_beta_asymptotic = _relative_gap(row.asymptotic, beta.value)
        except LabException as exc:
            logger.error(f"integral row {key.model_dump()} aborted: {exc}")
            row.error = str(exc)
        return row

    def lattice(
        self, ns: Iterable[int], Qs: Iterable[Decimal], Cs: Iterable[Decimal], omegas: Iterable[Decimal], d: Decimal, l: int = 1
    ) -> List[IIntegralKey]:
        keys = []
        for n in ns:
            for Q in Qs:
                if Q + 1 <= n:
                    continue
                for C in Cs:
                    for omega in omegas:
                        keys.append(IIntegralKey(n=n, Q=Q, l=l, C=C, omega=omega, d=d))
        return keys


def _relative_gap(a, b):
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else mp.mpf(0)
