# app/modules/melnikov/schemas/fourier.py
from typing import Any, Dict, List, Sequence

import mpmath as mp
from pydantic import BaseModel, ConfigDict, Field


class FourierSeries(BaseModel):
    """Finite set of complex modes in theta, mode l multiplies exp(i l theta)"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    modes: Dict[int, Any] = Field(default_factory=dict)
    L: int = 0
    tail_bound: Any = 0

    @classmethod
    def from_modes(cls, modes: Dict[int, Any], tail_bound=None) -> "FourierSeries":
        L = max((abs(l) for l in modes), default=0)
        if tail_bound is None:
            tail_bound = max((abs(modes[l]) for l in modes if abs(l) == L), default=mp.mpf(0))
        return cls(modes=dict(modes), L=L, tail_bound=tail_bound)

    @classmethod
    def from_samples(cls, values: Sequence[Any], L: int) -> "FourierSeries":
        """Discrete Fourier transform of samples at theta_j = 2 pi j / N"""
        N = len(values)
        if N < 2 * L + 1:
            raise ValueError(f"{N} samples cannot resolve {2 * L + 1} modes")
        modes = {}
        for l in range(-L, L + 1):
            acc = mp.mpc(0)
            for j, value in enumerate(values):
                acc += value * mp.expjpi(-mp.mpf(2 * l * j) / N)
            modes[l] = acc / N
        # modes above L alias onto the kept ones; the first dropped mode bounds the tail
        return cls.from_modes(modes)

    def mode(self, l: int):
        return self.modes.get(l, mp.mpc(0))

    def evaluate(self, theta) -> Any:
        total = mp.mpc(0)
        for l, value in self.modes.items():
            total += value * mp.expj(l * theta)
        return total

    def evaluate_real(self, theta):
        return mp.re(self.evaluate(theta))

    def reality_gap(self):
        """Largest |mode(-l) - conj(mode(l))|"""
        gaps = [abs(self.mode(-l) - mp.conj(self.mode(l))) for l in self.modes]
        return max(gaps, default=mp.mpf(0))

    def scaled(self, factor) -> "FourierSeries":
        return FourierSeries(
            modes={l: factor * v for l, v in self.modes.items()},
            L=self.L,
            tail_bound=abs(factor) * self.tail_bound,
        )

    def max_abs(self):
        return max((abs(v) for v in self.modes.values()), default=mp.mpf(0))

    def indices(self) -> List[int]:
        return sorted(self.modes)
