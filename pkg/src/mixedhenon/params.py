"""Problem parameters for the weighted mixed local/nonlocal Henon problem."""
from __future__ import annotations

from dataclasses import asdict, dataclass

from .errors import ConfigurationError, SupercriticalDimensionError

PARAM_KEYS = ("N", "p", "q", "s", "gamma", "alpha", "beta")


@dataclass(frozen=True)
class Params:
    """``L u + |x|^beta |u|^(p-2) u = |x|^alpha |u|^(q-2) u`` in R^N.

    ``L = gamma (-Delta)_p + (1 - gamma) (-Delta)_p^s``.  A local part
    (``gamma > 0``) forces ``s = 1``.
    """

    N: int
    p: float
    q: float
    s: float = 1.0
    gamma: float = 1.0
    alpha: float = 0.0
    beta: float = 2.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ConfigurationError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        for k in PARAM_KEYS[1:]:
            object.__setattr__(self, k, float(getattr(self, k)))
        if not self.p > 1:
            raise ConfigurationError(f"p must exceed 1, got {self.p}")
        if not self.q > 1:
            raise ConfigurationError(f"q must exceed 1, got {self.q}")
        if not 0 < self.s <= 1:
            raise ConfigurationError(f"s must lie in (0, 1], got {self.s}")
        if not 0 <= self.gamma <= 1:
            raise ConfigurationError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not self.beta > 0:
            raise ConfigurationError(f"beta must be positive, got {self.beta}")
        if self.gamma > 0 and self.s != 1:
            raise ConfigurationError("a local part (gamma > 0) requires s = 1")

    @property
    def sp(self) -> float:
        return self.s * self.p

    @property
    def tau(self) -> float:
        return (self.N - self.sp) / self.p

    @property
    def p_star(self) -> float:
        return p_star(self)

    def replace(self, **changes) -> "Params":
        d = asdict(self)
        d.update(changes)
        return Params(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Params":
        return cls(**{k: d[k] for k in PARAM_KEYS if k in d})


def p_star(params: Params) -> float:
    """Critical exponent ``p(N+alpha)/(N-sp)`` (gamma = 0) or ``p(N+alpha)/(N-p)``."""
    P = params
    denom = P.N - P.s * P.p if P.gamma == 0 else P.N - P.p
    if denom <= 0:
        raise SupercriticalDimensionError(
            f"critical exponent undefined: denominator {denom:g} <= 0 (N={P.N}, p={P.p}, s={P.s})"
        )
    return P.p * (P.N + P.alpha) / denom
