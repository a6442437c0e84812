"""Exponent cluster of the critical problem in three space dimensions."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class StraussConstants:
    """Strauss exponent ``p_S`` and its companions for a given dimension.

    Only ``n = 3`` is supported, where ``p_S = 1 + sqrt(2)``.
    """

    n: int = 3

    def __post_init__(self):
        if self.n != 3:
            raise ValueError("only n = 3 is supported")

    @property
    def p_S(self) -> float:
        # positive root of (n-1) p^2 - (n+1) p - 2 = 0
        a, b, c = self.n - 1, -(self.n + 1), -2
        return (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)

    @property
    def q(self) -> float:
        return 1.0 - 1.0 / self.p_S

    @property
    def p_S_conj(self) -> float:
        return self.p_S / (self.p_S - 1.0)

    def quadratic_residual(self) -> float:
        p = self.p_S
        return (self.n - 1) * p * p - (self.n + 1) * p - 2


STRAUSS = StraussConstants()
P_S = STRAUSS.p_S
Q = STRAUSS.q
P_S_CONJ = STRAUSS.p_S_conj
