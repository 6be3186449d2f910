"""System configuration and seeded Rayleigh channel draws."""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

# channel groups, each drawn from its own spawned substream
CHANNEL_GROUPS = ("h_D", "h_E", "h_C", "h_Bn", "h_Bl", "h_BC")


def db_to_linear(p_db: float) -> float:
    if not np.isfinite(p_db):
        raise ValueError("power in dB must be finite")
    return float(10.0 ** (p_db / 10.0))


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions, noise-normalized power budgets and the rate weight.

    K BS antennas, M cooperating D2D transmitters, N D2D receivers and
    L eavesdroppers. Powers are linear multiples of the unit noise power.
    """

    K: int = 6
    M: int = 4
    N: int = 3
    L: int = 3
    P_max: float = 100.0
    P_B: float = 10000.0
    alpha: float = 0.5
    chi: float = 0.01
    noise_power: float = 1.0

    def __post_init__(self):
        for k in ("K", "M", "N"):
            if int(getattr(self, k)) < 1:
                raise ValueError(f"{k} must be >= 1")
        if self.L < 0:
            raise ValueError("L must be >= 0")
        if not (self.P_max > 0 and self.P_B > 0):
            raise ValueError("power budgets must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not self.chi > 0:
            raise ValueError("chi must be positive")
        if self.noise_power != 1.0:
            raise ValueError("noise power is normalized to 1")

    @classmethod
    def from_db(cls, p_max_db: float, p_b_db: float, **kw) -> "SystemConfig":
        return cls(P_max=db_to_linear(p_max_db), P_B=db_to_linear(p_b_db), **kw)

    def with_(self, **kw) -> "SystemConfig":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return asdict(self)


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric CN(0, 1) samples."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One fading block. Row i of each 2-D array is one node's channel."""

    h_D: np.ndarray  # (N, M)  VAA -> receiver n
    h_E: np.ndarray  # (L, M)  VAA -> eavesdropper l
    h_C: np.ndarray  # (M,)    VAA -> CUE
    h_Bn: np.ndarray  # (N, K)  BS -> receiver n
    h_Bl: np.ndarray  # (L, K)  BS -> eavesdropper l
    h_BC: np.ndarray  # (K,)    BS -> CUE
    seed: int = 0

    @property
    def K(self) -> int:
        return self.h_BC.shape[0]

    @property
    def M(self) -> int:
        return self.h_C.shape[0]

    @property
    def N(self) -> int:
        return self.h_D.shape[0]

    @property
    def L(self) -> int:
        return self.h_E.shape[0]

    # column-stacked matrices
    @property
    def G_E(self) -> np.ndarray:
        return self.h_E.T

    @property
    def G_B(self) -> np.ndarray:
        return self.h_Bl.T

    @property
    def G_EC(self) -> np.ndarray:
        return np.column_stack([self.h_E.T, self.h_C])

    @property
    def G_BN(self) -> np.ndarray:
        return self.h_Bn.T

    @property
    def G_BNE(self) -> np.ndarray:
        return np.column_stack([self.h_Bn.T, self.h_Bl.T])

    @property
    def G_BNC(self) -> np.ndarray:
        return np.column_stack([self.h_Bn.T, self.h_BC])

    def equals(self, other: "ChannelRealization") -> bool:
        return all(np.array_equal(getattr(self, g), getattr(other, g))
                   for g in CHANNEL_GROUPS) and self.seed == other.seed


def generate_channels(cfg: SystemConfig, seed: int) -> ChannelRealization:
    """Draw every channel of one block from PCG64 substreams of ``seed``.

    Each channel group gets its own child of ``SeedSequence(seed)`` in the
    fixed order of ``CHANNEL_GROUPS``, so changing L leaves the receiver
    and CUE channels untouched.
    """
    children = np.random.SeedSequence(int(seed)).spawn(len(CHANNEL_GROUPS))
    rngs = {g: np.random.Generator(np.random.PCG64(c))
            for g, c in zip(CHANNEL_GROUPS, children)}
    K, M, N, L = cfg.K, cfg.M, cfg.N, cfg.L
    return ChannelRealization(
        h_D=_cn(rngs["h_D"], (N, M)),
        h_E=_cn(rngs["h_E"], (L, M)),
        h_C=_cn(rngs["h_C"], (M,)),
        h_Bn=_cn(rngs["h_Bn"], (N, K)),
        h_Bl=_cn(rngs["h_Bl"], (L, K)),
        h_BC=_cn(rngs["h_BC"], (K,)),
        seed=int(seed),
    )
