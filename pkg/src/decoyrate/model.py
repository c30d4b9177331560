"""Domain types and elementary math shared by the whole pipeline.

Sources are identified by their preparation basis and intensity rank; the
vacuum source of the 3-intensity variants is a source with zero intensity, so
the photon-number machinery treats it like any other source.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

K_MAX = 40
SIMPLEX_TOL = 1e-12


class Basis(str, enum.Enum):
    Z = "Z"
    X = "X"

    @property
    def other(self) -> "Basis":
        return Basis.X if self is Basis.Z else Basis.Z


class SourceId(str, enum.Enum):
    """Alice's sources. Rank 1 is the weak decoy, rank 2 the signal."""

    Z1 = "Z1"
    Z2 = "Z2"
    X1 = "X1"
    X2 = "X2"
    VAC = "VAC"

    @property
    def basis(self) -> Basis | None:
        return None if self is SourceId.VAC else Basis(self.value[0])

    @property
    def rank(self) -> int:
        return 0 if self is SourceId.VAC else int(self.value[1])

    @classmethod
    def of(cls, basis: Basis, rank: int) -> "SourceId":
        return cls(f"{Basis(basis).value}{rank}")


NON_VACUUM = (SourceId.Z1, SourceId.Z2, SourceId.X1, SourceId.X2)


class Variant(str, enum.Enum):
    FOUR = "4int"
    THREE_ASYM = "3int-asym"
    THREE_SYM = "3int-sym"

    @property
    def has_vacuum(self) -> bool:
        return self is not Variant.FOUR


class ConfigError(ValueError):
    """A configuration violates one of the protocol or system invariants."""


@dataclass(frozen=True)
class ProtocolConfig:
    """Alice's source settings and Bob's basis bias for one run.

    ``mu`` and ``p`` are keyed by :class:`SourceId`; the vacuum entry is
    present only for the 3-intensity variants.
    """

    mu: Mapping[SourceId, float]
    p: Mapping[SourceId, float]
    q_x: float
    nt: float = 1e10
    variant: Variant = Variant.FOUR

    def __post_init__(self):
        object.__setattr__(self, "mu", {SourceId(k): float(v) for k, v in self.mu.items()})
        object.__setattr__(self, "p", {SourceId(k): float(v) for k, v in self.p.items()})
        object.__setattr__(self, "variant", Variant(self.variant))
        self.validate()

    @property
    def q_z(self) -> float:
        return 1.0 - self.q_x

    def q(self, basis: Basis) -> float:
        return self.q_x if Basis(basis) is Basis.X else self.q_z

    @property
    def sources(self) -> tuple[SourceId, ...]:
        return NON_VACUUM + ((SourceId.VAC,) if self.variant.has_vacuum else ())

    def validate(self) -> None:
        expected = set(self.sources)
        if set(self.mu) != expected or set(self.p) != expected:
            missing = expected.symmetric_difference(set(self.mu) | set(self.p))
            if self.variant.has_vacuum and SourceId.VAC not in self.p:
                raise ConfigError(f"{self.variant.value} requires a vacuum source (p0)")
            raise ConfigError(
                f"source set mismatch for {self.variant.value}: {sorted(s.value for s in missing)}"
            )
        for src in self.sources:
            mu, p = self.mu[src], self.p[src]
            if src is SourceId.VAC:
                if mu != 0.0:
                    raise ConfigError("vacuum source must have mu = 0")
            elif not (mu > 0 and math.isfinite(mu)):
                raise ConfigError(f"mu[{src.value}] must be > 0, got {mu}")
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"p[{src.value}] must lie in [0, 1], got {p}")
        total = sum(self.p.values())
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ConfigError(f"simplex invariant violated: source probabilities sum to {total!r}, not 1")
        if not 0.0 <= self.q_x <= 1.0:
            raise ConfigError(f"q_x must lie in [0, 1], got {self.q_x}")
        if not self.nt > 0:
            raise ConfigError(f"nt must be positive, got {self.nt}")
        for b in Basis:
            lo, hi = self.mu[SourceId.of(b, 1)], self.mu[SourceId.of(b, 2)]
            if not lo < hi:
                raise ConfigError(f"intensity ordering violated: mu[{b.value}1]={lo} >= mu[{b.value}2]={hi}")
        if self.variant.has_vacuum:
            for rank in (1, 2):
                z, x = SourceId.of(Basis.Z, rank), SourceId.of(Basis.X, rank)
                if self.mu[z] != self.mu[x] or self.p[z] != self.p[x]:
                    raise ConfigError(f"3-intensity symmetry violated: {z.value} and {x.value} differ")
            if abs(self.q_x - 0.5) > SIMPLEX_TOL:
                raise ConfigError("3-intensity variants measure with q_x = q_z = 0.5")

    @classmethod
    def build(cls, mu: Mapping, p: Mapping, q_x: float, *, nt: float = 1e10,
              variant: Variant | str = Variant.FOUR, normalize: bool = False) -> "ProtocolConfig":
        """Construct a config, optionally rescaling probabilities onto the simplex.

        ``normalize`` absorbs rounding in values tabulated to three decimals; it
        refuses sums more than 5e-3 away from one.
        """
        p = {SourceId(k): float(v) for k, v in p.items()}
        if normalize:
            total = sum(p.values())
            if abs(total - 1.0) > 5e-3:
                raise ConfigError(f"simplex invariant violated: source probabilities sum to {total!r}")
            p = {k: v / total for k, v in p.items()}
        return cls(mu=mu, p=p, q_x=float(q_x), nt=float(nt), variant=Variant(variant))

    def with_nt(self, nt: float) -> "ProtocolConfig":
        return replace(self, nt=float(nt))


AFTERPULSE_MODELS = ("off", "multiplicative")


@dataclass(frozen=True)
class SystemModel:
    """Detector and channel parameters, plus post-processing constants.

    Defaults mirror the characterized system: dark count 2.5e-7 per gate,
    1% after-pulsing, 1.5% misalignment, 0.2 dB/km fiber, f = 1.14,
    eps = 1e-10 per bound and 1e10 pulses at a 625 MHz clock.
    """

    eta_z: float = 0.10
    eta_x: float = 0.05
    dark_rate: float = 2.5e-7
    after_pulse: float = 0.01
    dead_time: float = 5e-10
    e_mis: float = 0.015
    loss_coeff: float = 0.2
    extra_bob_loss: float = 2.6
    f: float = 1.14
    eps: float = 1e-10
    clock_rate: float = 625e6
    nt: float = 1e10
    e_mis_z: float | None = None
    e_mis_x: float | None = None
    afterpulse_model: str = "multiplicative"

    def __post_init__(self):
        if self.afterpulse_model not in AFTERPULSE_MODELS:
            raise ConfigError(f"afterpulse_model must be one of {AFTERPULSE_MODELS}, got {self.afterpulse_model!r}")
        for name in ("eta_z", "eta_x", "dark_rate", "after_pulse", "e_mis"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        for name in ("e_mis_z", "e_mis_x"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.loss_coeff < 0 or self.extra_bob_loss < 0:
            raise ConfigError("losses must be non-negative")
        if self.f < 1:
            raise ConfigError(f"error-correction efficiency f must be >= 1, got {self.f}")
        if not 0 < self.eps < 1:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        if self.dead_time < 0 or self.clock_rate <= 0 or self.nt <= 0:
            raise ConfigError("dead_time must be >= 0; clock_rate and nt must be > 0")

    def eta(self, basis: Basis) -> float:
        return self.eta_x if Basis(basis) is Basis.X else self.eta_z

    def misalignment(self, basis: Basis) -> float:
        override = self.e_mis_x if Basis(basis) is Basis.X else self.e_mis_z
        return self.e_mis if override is None else override

    def balanced(self) -> "SystemModel":
        """Bob attenuates the better basis down to the worse one."""
        eta = min(self.eta_z, self.eta_x)
        return replace(self, eta_z=eta, eta_x=eta)


def poisson_coeff(mu: float, k: int) -> float:
    """Probability that a phase-randomized coherent pulse of mean ``mu`` holds ``k`` photons."""
    if isinstance(k, bool) or not isinstance(k, int):
        if isinstance(k, float) and k.is_integer():
            k = int(k)
        else:
            raise ValueError(f"photon number must be a non-negative integer, got {k!r}")
    if k < 0:
        raise ValueError(f"photon number must be non-negative, got {k}")
    if not mu >= 0:
        raise ValueError(f"mean photon number must be non-negative, got {mu}")
    if mu == 0:
        return 1.0 if k == 0 else 0.0
    if k < 20:
        return math.exp(-mu) * mu**k / math.factorial(k)
    return math.exp(k * math.log(mu) - mu - math.lgamma(k + 1))


@dataclass(frozen=True)
class PoissonCoeffs:
    """Photon-number distribution of every source, truncated at ``k_max``."""

    a: Mapping[SourceId, tuple[float, ...]] = field(default_factory=dict)
    k_max: int = K_MAX

    @classmethod
    def of(cls, cfg: ProtocolConfig, k_max: int = K_MAX) -> "PoissonCoeffs":
        return cls({s: tuple(poisson_coeff(cfg.mu[s], k) for k in range(k_max + 1)) for s in cfg.sources}, k_max)

    def __call__(self, k: int, src: SourceId) -> float:
        return self.a[SourceId(src)][k]


def binary_entropy(x: float) -> float:
    """Shannon entropy of a biased coin, in bits; zero at both endpoints."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def expected_photon_count(cfg: ProtocolConfig, k: int, src: SourceId, basis: Basis) -> float:
    """Expected number of k-photon pulses from ``src`` that Bob measures in ``basis``."""
    src = SourceId(src)
    return poisson_coeff(cfg.mu[src], k) * cfg.p[src] * cfg.q(basis) * cfg.nt
