"""Multi-start coordinate descent over protocol parameters.

Every iterate is mapped through a bounded reparameterization so it is a valid
:class:`ProtocolConfig` by construction:

* intensities: ``log`` of the signal intensity, ``logit`` of the decoy/signal ratio;
* source probabilities: softmax with a floor of ``P_MIN`` per source;
* basis bias: ``logit`` of ``q_x`` rescaled onto ``[Q_MIN, Q_MAX]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, softmax
from scipy.stats import qmc

from .decoy import DEFAULT_SETTINGS, Settings
from .keyrate import worst_case_rate
from .model import Basis, ConfigError, ProtocolConfig, SourceId, SystemModel, Variant
from .simulator import expected_counts

MU_MIN, MU_MAX = 1e-3, 1.0
P_MIN = 1e-3
RATIO_MAX = 1.0 - 1e-6
Q_MIN, Q_MAX = 0.01, 0.99
STEP0 = 0.5
SHRINK = 0.5
GROW = 2.0
STEP_TOL = 1e-4
MAX_SWEEPS = 400


@dataclass(frozen=True)
class SearchSpace:
    """Unconstrained coordinates for one protocol variant."""

    variant: Variant
    nt: float = 1e10

    @property
    def dim(self) -> int:
        # 4INT: two (log mu2, logit ratio) pairs, 3 free softmax logits, logit q_x
        # 3INT: one shared intensity pair, 2 free softmax logits (rank 1, rank 2, vacuum)
        return 8 if self.variant is Variant.FOUR else 4

    @property
    def lhs_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Box in unconstrained coordinates from which start points are drawn."""
        pair_lo, pair_hi = [math.log(0.05), -4.0], [0.0, 1.0]
        if self.variant is Variant.FOUR:
            lo = pair_lo * 2 + [-3.0] * 3 + [-3.0]
            hi = pair_hi * 2 + [3.0] * 3 + [3.0]
        else:
            lo = pair_lo + [-3.0] * 2
            hi = pair_hi + [3.0] * 2
        return np.array(lo), np.array(hi)

    @staticmethod
    def _pair(u_log: float, u_ratio: float) -> tuple[float, float]:
        mu2 = math.exp(min(max(u_log, math.log(2 * MU_MIN)), math.log(MU_MAX)))
        mu1 = max(mu2 * min(float(expit(u_ratio)), RATIO_MAX), MU_MIN)
        return mu1, mu2

    @staticmethod
    def _probs(logits, n: int) -> np.ndarray:
        w = softmax(np.append(np.asarray(logits, dtype=float), 0.0))
        return P_MIN + (1.0 - n * P_MIN) * w

    def to_config(self, u) -> ProtocolConfig:
        u = [float(v) for v in u]
        if self.variant is Variant.FOUR:
            z1, z2 = self._pair(u[0], u[1])
            x1, x2 = self._pair(u[2], u[3])
            p = self._probs(u[4:7], 4)
            q_x = Q_MIN + (Q_MAX - Q_MIN) * float(expit(u[7]))
            mu = {SourceId.Z1: z1, SourceId.Z2: z2, SourceId.X1: x1, SourceId.X2: x2}
            probs = dict(zip((SourceId.Z1, SourceId.Z2, SourceId.X1, SourceId.X2), p.tolist()))
        else:
            m1, m2 = self._pair(u[0], u[1])
            w1, w2, w0 = self._probs(u[2:4], 3).tolist()
            mu = {SourceId.Z1: m1, SourceId.X1: m1, SourceId.Z2: m2, SourceId.X2: m2, SourceId.VAC: 0.0}
            probs = {SourceId.Z1: w1 / 2, SourceId.X1: w1 / 2, SourceId.Z2: w2 / 2,
                     SourceId.X2: w2 / 2, SourceId.VAC: w0}
            q_x = 0.5
        return ProtocolConfig.build(mu, probs, q_x, nt=self.nt, variant=self.variant, normalize=True)

    def from_config(self, cfg: ProtocolConfig) -> np.ndarray:
        """Inverse of :meth:`to_config` up to the floors."""
        def pair(lo, hi):
            r = min(max(lo / hi, 1e-9), 1 - 1e-9)
            return [math.log(hi), math.log(r / (1 - r))]

        def logits(ps, n):
            w = [max((v - P_MIN) / (1.0 - n * P_MIN), 1e-12) for v in ps]
            return [math.log(v / w[-1]) for v in w[:-1]]

        mu, p = cfg.mu, cfg.p
        if self.variant is Variant.FOUR:
            q = min(max((cfg.q_x - Q_MIN) / (Q_MAX - Q_MIN), 1e-9), 1 - 1e-9)
            return np.array(pair(mu[SourceId.Z1], mu[SourceId.Z2]) + pair(mu[SourceId.X1], mu[SourceId.X2])
                            + logits([p[s] for s in (SourceId.Z1, SourceId.Z2, SourceId.X1, SourceId.X2)], 4)
                            + [math.log(q / (1 - q))])
        w1 = p[SourceId.Z1] + p[SourceId.X1]
        w2 = p[SourceId.Z2] + p[SourceId.X2]
        return np.array(pair(mu[SourceId.Z1], mu[SourceId.Z2]) + logits([w1, w2, p[SourceId.VAC]], 3))


@dataclass
class OptimResult:
    best: ProtocolConfig
    best_r: float
    trace: list = field(default_factory=list)   # (evaluation index, best search score so far)
    restarts: int = 0
    converged: bool = True
    score: float = -math.inf

    def record(self) -> dict:
        rec = {"variant": self.best.variant.value, "R_per_pulse": self.best_r, "score": self.score,
               "restarts": self.restarts, "converged": self.converged}
        for s in self.best.sources:
            if s is not SourceId.VAC:
                rec[f"mu_{s.value}"] = self.best.mu[s]
        for s in self.best.sources:
            rec[f"p_{s.value}"] = self.best.p[s]
        rec["q_x"] = self.best.q_x
        return rec


def system_for(sys: SystemModel, variant: Variant) -> SystemModel:
    """The symmetric 3-intensity variant equalizes the two detector efficiencies."""
    return sys.balanced() if Variant(variant) is Variant.THREE_SYM else sys


def _evaluate(sys: SystemModel, distance_km: float, cfg: ProtocolConfig, settings: Settings):
    """Return ``(R, search score)``.

    The score equals the signed rate when it is positive. Below zero it is the
    signed rate per detected signal pulse, a scale-free key fraction. Dividing
    by the detection rate keeps the search from drifting towards configurations
    that send almost nothing, where the signed rate approaches zero from below
    without ever producing key.
    """
    try:
        table = expected_counts(sys, cfg, distance_km).table()
        rep = worst_case_rate(table, cfg, sys, settings)
    except (ConfigError, ValueError):
        return 0.0, -math.inf
    if rep.signed > 0 or not math.isfinite(rep.signed):
        return rep.R, rep.signed
    detected = sum(table.total(SourceId.of(b, 2), b) for b in Basis) / cfg.nt
    return rep.R, rep.signed / detected if detected > 0 else -math.inf


def objective(sys: SystemModel, distance_km: float, cfg: ProtocolConfig,
              settings: Settings = DEFAULT_SETTINGS) -> float:
    """Worst-case rate from noise-free expected counts; 0 for unusable configurations.

    ``sys`` is used as given; the balanced-efficiency system for the symmetric
    variant is applied by :func:`optimize`.
    """
    return _evaluate(sys, distance_km, cfg, settings)[0]


def _descent(f, u0: np.ndarray, f0: float, counter: list, trace: list, best_box: list):
    u, fu = u0.copy(), f0
    steps = np.full(u.shape, STEP0)
    sweeps = 0
    while steps.max() >= STEP_TOL and sweeps < MAX_SWEEPS:
        sweeps += 1
        for i in range(len(u)):
            if steps[i] < STEP_TOL:
                continue
            moved = False
            for sign in (1.0, -1.0):
                cand = u.copy()
                cand[i] += sign * steps[i]
                fc = f(cand)
                counter[0] += 1
                if fc > fu:
                    u, fu, moved = cand, fc, True
                    steps[i] = min(steps[i] * GROW, STEP0 * 4)
                    if fc > best_box[0]:
                        best_box[0] = fc
                        trace.append((counter[0], fc))
                    break
            if not moved:
                steps[i] *= SHRINK
    return u, fu, steps.max() < STEP_TOL


def optimize(sys: SystemModel, distance_km: float, variant: Variant | str, seed: int, *,
             n_starts: int = 32, starts=(), settings: Settings = DEFAULT_SETTINGS,
             nt: float | None = None) -> OptimResult:
    """Maximize the worst-case rate over the protocol parameters.

    Args:
        sys: system model; replaced by its balanced form for ``3int-sym``.
        distance_km: fiber length.
        variant: protocol variant.
        seed: seeds the Latin-hypercube start points.
        n_starts: number of Latin-hypercube start points.
        starts: extra start configurations tried before the random ones
            (e.g. the optimum at a neighbouring distance).
        settings: bound-formula switches.
        nt: pulse budget, defaulting to ``sys.nt``.

    Returns:
        The best configuration found. Restarts are processed in order and a
        later restart replaces the incumbent only if it is strictly better.
    """
    variant = Variant(variant)
    sysv = system_for(sys, variant)
    space = SearchSpace(variant, nt=sys.nt if nt is None else nt)

    def f(u):
        try:
            cfg = space.to_config(u)
        except ConfigError:
            return -math.inf
        return _evaluate(sysv, distance_km, cfg, settings)[1]

    lo, hi = space.lhs_box
    points = [space.from_config(c) for c in starts]
    if n_starts:
        sample = qmc.LatinHypercube(d=space.dim, seed=np.random.default_rng(seed)).random(n_starts)
        points += list(qmc.scale(sample, lo, hi))
    counter, trace = [0], []
    best_box = [-math.inf]
    best_u, best_f, converged = None, -math.inf, True
    for u0 in points:
        f0 = f(u0)
        counter[0] += 1
        if f0 > best_box[0]:
            best_box[0] = f0
            trace.append((counter[0], f0))
        u, fu, conv = _descent(f, np.asarray(u0, dtype=float), f0, counter, trace, best_box)
        if best_u is None or fu > best_f:
            best_u, best_f, converged = u, fu, conv
    cfg = space.to_config(best_u)
    r, score = _evaluate(sysv, distance_km, cfg, settings)
    return OptimResult(best=cfg, best_r=r, trace=trace, restarts=len(points), converged=converged, score=score)


@dataclass
class SweepRow:
    distance_km: float
    variant: Variant
    result: OptimResult
    clock_rate: float

    @property
    def bps(self) -> float:
        return self.result.best_r * self.clock_rate


SWEEP_ORDER = (Variant.THREE_SYM, Variant.THREE_ASYM, Variant.FOUR)


def sweep(sys: SystemModel, distances, seed: int, *, n_starts: int = 4,
          settings: Settings = DEFAULT_SETTINGS) -> list[SweepRow]:
    """Optimize every variant at every distance, warm-starting along the sweep.

    Each optimization also starts from the previous distance's optimum of the
    same variant. The asymmetric 3-intensity search additionally starts from
    the symmetric optimum, which is a valid asymmetric configuration.
    Rows come back ordered by distance, then 4int, 3int-asym, 3int-sym.
    """
    prev: dict = {}
    rows = []
    for k, d in enumerate(distances):
        here = {}
        for v in SWEEP_ORDER:
            starts = [prev[v]] if v in prev else []
            if v is Variant.THREE_ASYM:
                starts.append(here[Variant.THREE_SYM].best)
            res = optimize(sys, d, v, seed + k, n_starts=n_starts, starts=starts, settings=settings)
            here[v] = res
            if res.best_r > 0:
                prev[v] = res.best
        rows += [SweepRow(float(d), v, here[v], sys.clock_rate) for v in reversed(SWEEP_ORDER)]
    return rows
