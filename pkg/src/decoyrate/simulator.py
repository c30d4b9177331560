"""Weak-coherent-pulse channel model: expected and Poisson-sampled count tables."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .counts import CountsTable
from .model import Basis, ProtocolConfig, SystemModel


@dataclass(frozen=True)
class ChannelInstance:
    distance_km: float
    transmittance: float
    eta_eff: dict

    @classmethod
    def at(cls, sys: SystemModel, distance_km: float) -> "ChannelInstance":
        if distance_km < 0:
            raise ValueError(f"distance must be non-negative, got {distance_km}")
        t = 10.0 ** (-(sys.loss_coeff * distance_km + sys.extra_bob_loss) / 10.0)
        return cls(float(distance_km), t, {b: t * sys.eta(b) for b in Basis})


def expected_yields(sys: SystemModel, ch: ChannelInstance, mu: float, basis: Basis,
                    same_basis: bool) -> tuple[float, float]:
    """Gain and error gain of one pulse class measured in ``basis``.

    Args:
        sys: detector and channel parameters.
        ch: channel at a given distance.
        mu: mean photon number of the pulse (0 for vacuum).
        basis: measurement basis.
        same_basis: whether the pulse was prepared in ``basis``.

    Returns:
        ``(Q, EQ)``, per-pulse probabilities of a click and of an erroneous click.
    """
    basis = Basis(basis)
    d = sys.dark_rate
    y0 = 2.0 * d * (1.0 - d)
    click = -math.expm1(-ch.eta_eff[basis] * mu)
    q = 1.0 - (1.0 - y0) * (1.0 - click)
    if same_basis:
        eq = 0.5 * y0 + sys.misalignment(basis) * click
    else:
        eq = q / 2.0
    if sys.afterpulse_model == "multiplicative":
        eq = eq + sys.after_pulse * q / 2.0
        q = q * (1.0 + sys.after_pulse)
    dead = 1.0 / (1.0 + q * sys.dead_time * sys.clock_rate)
    q, eq = q * dead, eq * dead
    return q, min(eq, q)


@dataclass
class ExpectedCounts:
    mean: dict                   # (src, basis) -> expected total counts
    mean_err: dict               # (src, basis) -> expected error counts
    metadata: dict = field(default_factory=dict)

    def keys(self):
        return list(self.mean)

    def table(self) -> CountsTable:
        """The expected counts as a (fractional) count table."""
        rows = [(s, b, self.mean[s, b], self.mean_err[s, b]) for s, b in self.mean]
        return CountsTable.from_rows(rows, metadata=dict(self.metadata))


def expected_counts(sys: SystemModel, cfg: ProtocolConfig, distance_km: float) -> ExpectedCounts:
    """Expected totals and errors for every (source, measured basis) cell."""
    ch = ChannelInstance.at(sys, distance_km)
    mean, err = {}, {}
    for src in cfg.sources:
        for b in Basis:
            q, eq = expected_yields(sys, ch, cfg.mu[src], b, src.basis is b)
            n = cfg.p[src] * cfg.q(b) * cfg.nt
            mean[src, b] = q * n
            err[src, b] = eq * n
    meta = {"distance_km": float(distance_km), "variant": cfg.variant.value,
            "eta_z": sys.eta_z, "eta_x": sys.eta_x, "label": "expected"}
    return ExpectedCounts(mean, err, meta)


def sample_counts(expected: ExpectedCounts, seed: int) -> CountsTable:
    """One Poisson realization of ``expected``.

    Cell ``i`` (in table order) draws from its own generator seeded with
    ``[seed, i]``, so each cell is reproducible on its own.
    """
    order = list(expected.table())
    rows = []
    for i, (src, b, _) in enumerate(order):
        rng = np.random.default_rng([int(seed), i])
        m = expected.mean[src, b]
        total = int(rng.poisson(m)) if m > 0 else 0
        ratio = expected.mean_err[src, b] / m if m > 0 else 0.0
        error = int(rng.binomial(total, min(max(ratio, 0.0), 1.0))) if total else 0
        rows.append((src, b, total, error))
    meta = dict(expected.metadata, label=f"sampled seed={int(seed)}")
    return CountsTable.from_rows(rows, metadata=meta)
