# app/modules/special/services/gamma_service.py
from typing import Optional

import mpmath as mp

from app.core.exceptions import PoleException
from app.core.precision import ScalarConfig, working_precision


def gamma_checked(z):
    """Gamma at the active precision, rejecting the poles 0, -1, -2, ..."""
    if mp.im(z) == 0 and mp.re(z) <= 0 and mp.isint(mp.re(z)):
        raise PoleException(int(mp.re(z)))
    return mp.gamma(z)


class GammaService:
    def __init__(self, cfg: Optional[ScalarConfig] = None):
        self.cfg = cfg or ScalarConfig.from_settings()

    def gamma(self, z):
        with working_precision(self.cfg):
            return gamma_checked(mp.mpmathify(z))

    def stirling_leading(self, z):
        """sqrt(2 pi) z^(z - 1/2) exp(-z)"""
        with working_precision(self.cfg):
            z = mp.mpmathify(z)
            return mp.sqrt(2 * mp.pi) * mp.power(z, z - mp.mpf(1) / 2) * mp.exp(-z)

    def abs_gamma_imaginary(self, y):
        """|Gamma(i y)| = sqrt(pi / (y sinh(pi y)))"""
        with working_precision(self.cfg):
            y = mp.mpmathify(y)
            return mp.sqrt(mp.pi / (y * mp.sinh(mp.pi * y)))

    def gamma_shift_ratio(self, z, A):
        """Gamma(z + A) / (Gamma(z) z^A), which tends to 1 as |z| grows"""
        with working_precision(self.cfg):
            z, A = mp.mpmathify(z), mp.mpmathify(A)
            return gamma_checked(z + A) / (gamma_checked(z) * mp.power(z, A))
