# app/modules/manifolds/services/seeding_service.py
"""
Seeds for the two-dimensional invariant manifolds of the saddle-foci.
File location: app/modules/manifolds/services/seeding_service.py

Near S the manifold is the graph eta = xi^T H xi / 2 over the eigenplane
of the complex pair, xi in the real basis (vr, vi) and eta along the
real eigenvector. H solves H A + A^T H - lambda H = N, with A the plane
block of the Jacobian, lambda the real eigenvalue and N the second
derivative of the eta component of the field.
"""

import logging
from typing import List, Optional

import mpmath as mp

from app.core.exceptions import DomainException
from app.core.precision import ScalarConfig, to_mpf, working_precision
from app.modules.manifolds.schemas.manifold import SeedFrame, Side
from app.modules.model.schemas.model import ModelSpec, Params, PerturbationSeries, StateCartesian
from app.modules.model.services.field_service import FieldService
from app.modules.model.services.polynomial_field import full_field

logger = logging.getLogger(__name__)


def _column(M, col: int) -> List:
    return [M[row, col] for row in range(M.rows)]


def _norm(v: List):
    return mp.sqrt(mp.fsum(abs(c) ** 2 for c in v))


def _dot(a: List, b: List):
    return mp.fsum(x * y for x, y in zip(a, b))


def _bilinear(M, a: List, b: List):
    return mp.fsum(a[i] * M[i, j] * b[j] for i in range(3) for j in range(3))


class SeedingService:
    def __init__(self, cfg: Optional[ScalarConfig] = None):
        self.cfg = cfg or ScalarConfig.from_settings()
        self.field_service = FieldService(self.cfg)

    def seed_frame(self, spec: ModelSpec, series: PerturbationSeries, params: Params, side: Side) -> SeedFrame:
        critical = self.field_service.critical_points(spec, series, params)
        equilibrium = critical.S_minus if side == Side.UNSTABLE else critical.S_plus
        with working_precision(self.cfg):
            normal_value, pair_value = equilibrium.eigenvalues[0], equilibrium.eigenvalues[1]
            noise = mp.mpf(2) ** (-(self.cfg.precision_bits // 2)) * (1 + abs(pair_value))
            if abs(mp.im(pair_value)) <= noise or abs(mp.im(normal_value)) > noise:
                raise DomainException(f"degenerate eigenstructure at {side.value}: {equilibrium.eigenvalues}")
            growth = mp.re(pair_value)
            if (side == Side.UNSTABLE and growth <= 0) or (side == Side.STABLE and growth >= 0):
                raise DomainException(f"complex pair with real part {mp.nstr(growth, 5)} has no {side.value} plane")

            # phase so that Re v and Im v are orthogonal
            v = _column(equilibrium.eigenvectors, 1)
            v = [c * mp.expj(-mp.arg(mp.fsum(c**2 for c in v)) / 2) for c in v]
            vr, vi = [mp.re(c) for c in v], [mp.im(c) for c in v]
            if vr[0] * vi[1] - vr[1] * vi[0] < 0:
                vi = [-c for c in vi]
            size = _norm(vr)
            vr, vi = [c / size for c in vr], [c / size for c in vi]

            e = _column(equilibrium.eigenvectors, 0)
            pivot = max(e, key=abs)
            e = [mp.re(c * mp.conj(pivot) / abs(pivot)) for c in e]
            size = _norm(e)
            e = [c / size for c in e]

            T = mp.matrix(3, 3)
            for row in range(3):
                T[row, 0], T[row, 1], T[row, 2] = vr[row], vi[row], e[row]
            T_inv = mp.inverse(T)
            local = T_inv * equilibrium.jacobian * T
            A = [[mp.re(local[i, j]) for j in range(2)] for i in range(2)]
            lam = mp.re(normal_value)

            point = equilibrium.state.as_list()
            field = full_field(spec, series, params)
            w = [T_inv[2, c] for c in range(3)]
            hessians = [field.hessian(c, point) for c in range(3)]
            basis = (vr, vi)
            N = [[mp.fsum(w[c] * _bilinear(hessians[c], basis[a], basis[b]) for c in range(3)) for b in range(2)]
                 for a in range(2)]
            H = self._graph_hessian(A, lam, N)
            logger.debug(f"seed frame {side.value}: pair {mp.nstr(pair_value, 8)}, real {mp.nstr(lam, 8)}")
            return SeedFrame(
                side=side,
                point=point,
                plane=[vr, vi],
                normal=e,
                graph_hessian=H,
                complex_eigenvalue=pair_value,
                normal_eigenvalue=lam,
            )

    @staticmethod
    def _graph_hessian(A, lam, N):
        """Symmetric H with H A + A^T H - lam H = N, unknowns (h11, h12, h22)"""
        def residual_map(u):
            H = [[u[0], u[1]], [u[1], u[2]]]
            out = [[mp.fsum(H[a][c] * A[c][b] + A[c][a] * H[c][b] for c in range(2)) - lam * H[a][b]
                    for b in range(2)] for a in range(2)]
            return [out[0][0], out[0][1], out[1][1]]

        M = mp.matrix(3, 3)
        for col in range(3):
            unit = [mp.mpf(0)] * 3
            unit[col] = mp.mpf(1)
            image = residual_map(unit)
            for row in range(3):
                M[row, col] = image[row]
        u = mp.lu_solve(M, mp.matrix([N[0][0], (N[0][1] + N[1][0]) / 2, N[1][1]]))
        return mp.matrix([[u[0], u[1]], [u[1], u[2]]])

    def seed_point(self, frame: SeedFrame, phi, rho, correction: bool = True) -> List:
        """Point at distance rho from S on the quadratic graph, at angle phi in the eigenplane"""
        with working_precision(self.cfg):
            phi, rho = to_mpf(phi), to_mpf(rho)
            vr, vi = frame.plane
            direction = [mp.cos(phi) * a + mp.sin(phi) * b for a, b in zip(vr, vi)]
            length = _norm(direction)
            xi = [mp.cos(phi) / length, mp.sin(phi) / length]
            H = frame.graph_hessian
            scale = rho
            for _ in range(4 if correction else 1):
                x = [scale * c for c in xi]
                eta = (H[0, 0] * x[0] ** 2 + 2 * H[0, 1] * x[0] * x[1] + H[1, 1] * x[1] ** 2) / 2 if correction else 0
                offset = [x[0] * a + x[1] * b + eta * n for a, b, n in zip(vr, vi, frame.normal)]
                scale *= rho / _norm(offset)
            return [s + o for s, o in zip(frame.point, offset)]

    def seed_manifold(
        self,
        spec: ModelSpec,
        series: PerturbationSeries,
        params: Params,
        side: Side,
        rho,
        n_angles: int,
        correction: bool = True,
    ) -> List[StateCartesian]:
        if n_angles < 1:
            raise DomainException("n_angles must be positive")
        frame = self.seed_frame(spec, series, params, side)
        seeds = []
        for j in range(n_angles):
            with working_precision(self.cfg):
                phi = 2 * mp.pi * j / n_angles
            x, y, z = self.seed_point(frame, phi, rho, correction)
            seeds.append(StateCartesian(x=x, y=y, z=z))
        return seeds
