"""Splittable counter-based random streams.

Each stream is a Philox4x64-10 generator keyed by (seed, stream id), so
any (seed, path index) pair addresses its own reproducible sequence with
no coordination between workers. Word output is validated against
numpy's Philox implementation in the test suite.
"""

from __future__ import annotations

import numpy as np

from ruinkit import _kernels

_U64_MOD = 2**64


class RandomStream:
    """Single-owner random stream; not safe to share across threads.

    Args:
        seed: Any integer; reduced modulo 2**64.
        stream: Stream id (for the engine: the path index), reduced
            modulo 2**64.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int, stream: int = 0) -> None:
        self._state = _kernels.stream_new(
            np.uint64(int(seed) % _U64_MOD), np.uint64(int(stream) % _U64_MOD)
        )

    @property
    def state(self) -> np.ndarray:
        """Raw uint64[11] state; kernels mutate it in place."""
        return self._state

    def raw64(self) -> int:
        """Next raw 64-bit output word."""
        return int(_kernels.next_u64(self._state))

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return float(_kernels.uniform01(self._state))

    def exponential(self, rate: float) -> float:
        """Exponential draw with the given rate (inverse CDF)."""
        return float(_kernels.exp_draw(self._state, float(rate)))

    def normal(self) -> float:
        """Standard normal draw (Box-Muller)."""
        return float(_kernels.normal_draw(self._state))

    def gamma(self, shape: float, rate: float) -> float:
        """Gamma draw with the given shape and rate."""
        return float(_kernels.gamma_draw(self._state, float(shape), float(rate)))

    def pareto(self, shape: float, scale: float) -> float:
        """Pareto (Lomax) draw with the given shape and scale (inverse CDF)."""
        return float(_kernels.pareto_draw(self._state, float(shape), float(scale)))
