"""Decoy-state bounds: vacuum-yield rectangle, single-photon yields and
single-photon phase-error rates, all from observed counts.

The scalar functions here are the readable reference form. ``axis_params``
packs the same quantities for the grid kernels in :mod:`decoyrate._backend`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _layout as L
from .counts import CountsError, CountsTable
from .model import Basis, ProtocolConfig, SourceId, Variant, expected_photon_count, poisson_coeff
from .stats import ChernoffArg, ChernoffInterval, chernoff_delta, count_interval


class LogBase(str, enum.Enum):
    E = "e"
    TWO = "2"
    TEN = "10"

    @property
    def ln(self) -> float:
        return {"e": 1.0, "2": math.log(2.0), "10": math.log(10.0)}[self.value]

    @classmethod
    def coerce(cls, v) -> "LogBase":
        return v if isinstance(v, cls) else cls(str(v))


@dataclass(frozen=True)
class Settings:
    """Switches for readings the bound formulas leave open."""

    chernoff_arg: ChernoffArg = ChernoffArg.COUNTS
    theta_log_base: LogBase = LogBase.E

    def __post_init__(self):
        object.__setattr__(self, "chernoff_arg", ChernoffArg(self.chernoff_arg))
        object.__setattr__(self, "theta_log_base", LogBase.coerce(self.theta_log_base))


DEFAULT_SETTINGS = Settings()


@dataclass(frozen=True)
class VacuumRectangle:
    s0z_lower: float
    s0z_upper: float
    s0x_lower: float
    s0x_upper: float

    def bounds(self, basis: Basis) -> tuple[float, float]:
        if Basis(basis) is Basis.Z:
            return self.s0z_lower, self.s0z_upper
        return self.s0x_lower, self.s0x_upper

    @property
    def feasible(self) -> bool:
        return self.s0z_lower <= self.s0z_upper and self.s0x_lower <= self.s0x_upper


@dataclass(frozen=True)
class SinglePhotonBounds:
    """Bounds evaluated at one point of the vacuum rectangle."""

    s1_mean: dict            # basis -> <s1^{w,L}>
    s1_key: dict             # basis -> fluctuation-corrected bound for source w2
    s1_test: dict            # basis -> fluctuation-corrected bound for source w1
    e1_test: dict            # basis -> single-photon bit-error bound of source w1
    e1_phase: dict           # key basis -> phase-error bound after the sampling correction
    theta: dict              # key basis -> sampling correction
    clamp_events: int = 0


class Observations:
    """Observed yields and their Chernoff intervals for one (counts, config) pair."""

    def __init__(self, counts: CountsTable, cfg: ProtocolConfig, eps: float,
                 settings: Settings = DEFAULT_SETTINGS):
        self.counts = counts
        self.cfg = cfg
        self.eps = eps
        self.settings = settings
        self._s: dict = {}
        self._t: dict = {}

    def denom(self, src: SourceId, basis: Basis) -> float:
        return self.cfg.p[src] * self.cfg.q(basis) * self.cfg.nt

    def _interval(self, count: float, src: SourceId, basis: Basis) -> ChernoffInterval:
        d = self.denom(src, basis)
        if d <= 0:
            raise CountsError(f"no pulses can reach cell {src.value},{basis.value} (p*q*Nt = 0)")
        return count_interval(count, d, self.eps, self.settings.chernoff_arg)

    def S(self, src: SourceId, basis: Basis) -> ChernoffInterval:
        key = (SourceId(src), Basis(basis))
        if key not in self._s:
            self._s[key] = self._interval(self.counts.total(*key), *key)
        return self._s[key]

    def T(self, src: SourceId, basis: Basis) -> ChernoffInterval:
        key = (SourceId(src), Basis(basis))
        if key not in self._t:
            self._t[key] = self._interval(self.counts.error(*key), *key)
        return self._t[key]

    def a(self, k: int, src: SourceId) -> float:
        return poisson_coeff(self.cfg.mu[SourceId(src)], k)

    def n(self, k: int, src: SourceId, basis: Basis) -> float:
        return expected_photon_count(self.cfg, k, src, basis)

    @property
    def uses(self) -> int:
        """Number of distinct bound invocations, for the naive union budget."""
        return len(self._s) + len(self._t)


def _det(obs: Observations, alpha: Basis, i: int, j: int) -> float:
    lo, hi = SourceId.of(alpha, 1), SourceId.of(alpha, 2)
    return obs.a(i, lo) * obs.a(j, hi) - obs.a(i, hi) * obs.a(j, lo)


def s1_lines(obs: Observations, basis: Basis) -> list[tuple[float, float]]:
    """``(intercept, slope)`` pairs so that each preparation basis gives
    ``intercept - slope * s0`` as a single-photon yield bound in ``basis``."""
    lines = []
    for alpha in Basis:
        lo, hi = SourceId.of(alpha, 1), SourceId.of(alpha, 2)
        a12 = _det(obs, alpha, 1, 2)
        a02 = _det(obs, alpha, 0, 2)
        c = (obs.a(2, hi) * obs.S(lo, basis).lower - obs.a(2, lo) * obs.S(hi, basis).upper) / a12
        lines.append((c, a02 / a12))
    return lines


def s1_mean_lower(counts: CountsTable, cfg: ProtocolConfig, basis: Basis, s0_mean: float, *,
                  eps: float = 1e-10, settings: Settings = DEFAULT_SETTINGS,
                  obs: Observations | None = None) -> float:
    """Lower bound on the mean single-photon yield in ``basis`` at a given vacuum yield."""
    obs = obs or Observations(counts, cfg, eps, settings)
    best = max(c - sl * s0_mean for c, sl in s1_lines(obs, Basis(basis)))
    return max(best, 0.0)


def _shrink(x: float, eps: float) -> float:
    """Lower-tail factor ``1 - delta(x)``, floored at 0; zero when x == 0."""
    if x <= 0:
        return 0.0
    return max(0.0, 1.0 - chernoff_delta(x, eps))


def s1_lower(counts: CountsTable, cfg: ProtocolConfig, src: SourceId, basis: Basis,
             s1_mean: float, *, eps: float = 1e-10) -> float:
    """Fluctuation-corrected single-photon yield of one source."""
    if s1_mean <= 0:
        return 0.0
    n1 = expected_photon_count(cfg, 1, src, basis)
    return max(0.0, s1_mean * _shrink(n1 * s1_mean, eps))


def e1_upper(counts: CountsTable, cfg: ProtocolConfig, s0_mean: float, s1_test: float, *,
             basis: Basis = Basis.X, eps: float = 1e-10, settings: Settings = DEFAULT_SETTINGS,
             obs: Observations | None = None) -> float:
    """Bit-error bound of single-photon pulses from the weak source of ``basis``.

    Returns 0.5 when the single-photon yield bound is zero.
    """
    obs = obs or Observations(counts, cfg, eps, settings)
    basis = Basis(basis)
    if s1_test <= 0:
        return 0.5
    test = SourceId.of(basis, 1)
    n0 = obs.n(0, test, basis)
    vac = obs.a(0, test) * s0_mean * _shrink(n0 * s0_mean, eps) / 2.0
    e = (obs.T(test, basis).upper - vac) / (obs.a(1, test) * s1_test)
    return min(max(e, 0.0), 0.5)


def theta_correction(n_x: float, n_z: float, e1: float, eps: float,
                     log_base: LogBase | str = LogBase.E) -> float:
    """Random-sampling correction from test-set to key-set phase errors."""
    if not (n_x > 0 and n_z > 0):
        raise ValueError("theta_correction needs positive sample sizes")
    if not 0 < e1 < 1:
        raise ValueError(f"theta_correction needs 0 < e1 < 1, got {e1}")
    n = n_x + n_z
    g = n_x / n
    d_theta = (1.0 - g) * g * math.log(2.0) / (2.0 * (1.0 - e1) * e1)
    n_theta = -math.log(eps * math.sqrt(e1 * (1.0 - e1) * n_x * n_z / n)) / LogBase.coerce(log_base).ln / n
    return math.sqrt(max(n_theta, 0.0) / d_theta)


def vacuum_rectangle(counts: CountsTable, cfg: ProtocolConfig, *, eps: float = 1e-10,
                     settings: Settings = DEFAULT_SETTINGS,
                     obs: Observations | None = None) -> VacuumRectangle:
    """Range of the vacuum yield in each basis from the four decoy sources alone."""
    obs = obs or Observations(counts, cfg, eps, settings)
    out = []
    for w in (Basis.Z, Basis.X):
        lower = 0.0
        for alpha in Basis:
            lo, hi = SourceId.of(alpha, 1), SourceId.of(alpha, 2)
            v = (obs.a(1, hi) * obs.S(lo, w).lower - obs.a(1, lo) * obs.S(hi, w).upper) / _det(obs, alpha, 0, 1)
            lower = max(lower, v)
        w1 = SourceId.of(w, 1)
        upper = min(
            2.0 * obs.T(w1, w).upper / obs.a(0, w1),
            obs.S(SourceId.Z1, w).upper / obs.a(0, SourceId.Z1),
            obs.S(SourceId.X1, w).upper / obs.a(0, SourceId.X1),
            1.0,
        )
        out += [min(lower, 1.0), upper]
    return VacuumRectangle(*out)


def vacuum_rectangle_3int(counts: CountsTable, cfg: ProtocolConfig, *, eps: float = 1e-10,
                          settings: Settings = DEFAULT_SETTINGS,
                          obs: Observations | None = None) -> VacuumRectangle:
    """Vacuum yields bounded directly by the vacuum source's own counts."""
    if not cfg.variant.has_vacuum:
        raise CountsError("vacuum_rectangle_3int needs a 3-intensity configuration")
    obs = obs or Observations(counts, cfg, eps, settings)
    out = []
    for w in (Basis.Z, Basis.X):
        iv = obs.S(SourceId.VAC, w)
        out += [iv.lower, min(iv.upper, 1.0)]
    return VacuumRectangle(*out)


def rectangle_for(obs: Observations) -> VacuumRectangle:
    if obs.cfg.variant is Variant.FOUR:
        return vacuum_rectangle(obs.counts, obs.cfg, obs=obs)
    return vacuum_rectangle_3int(obs.counts, obs.cfg, obs=obs)


def bounds_at(obs: Observations, s0z: float, s0x: float) -> SinglePhotonBounds:
    """Every intermediate bound at one vacuum-yield point, with clamp accounting."""
    s0 = {Basis.Z: s0z, Basis.X: s0x}
    clamps = 0
    mean, key, test, e_test = {}, {}, {}, {}
    for w in Basis:
        raw = max(c - sl * s0[w] for c, sl in s1_lines(obs, w))
        clamps += raw < 0
        mean[w] = max(raw, 0.0)
        key[w] = s1_lower(obs.counts, obs.cfg, SourceId.of(w, 2), w, mean[w], eps=obs.eps)
        test[w] = s1_lower(obs.counts, obs.cfg, SourceId.of(w, 1), w, mean[w], eps=obs.eps)
        e_test[w] = e1_upper(obs.counts, obs.cfg, s0[w], test[w], basis=w, obs=obs)
        if test[w] > 0:
            t1 = SourceId.of(w, 1)
            vac = obs.a(0, t1) * s0[w] * _shrink(obs.n(0, t1, w) * s0[w], obs.eps) / 2.0
            raw_e = (obs.T(t1, w).upper - vac) / (obs.a(1, t1) * test[w])
            clamps += not 0.0 <= raw_e <= 0.5
        else:
            clamps += 1
    theta, phase = {}, {}
    for k in Basis:
        t = k.other
        theta[k], phase[k] = phase_error(obs, k, e_test[t])
        clamps += e_test[t] + theta[k] > 0.5
    return SinglePhotonBounds(mean, key, test, e_test, phase, theta, int(clamps))


def phase_error(obs: Observations, key_basis: Basis, e_test: float) -> tuple[float, float]:
    """Sampling correction and corrected phase-error bound for the key in ``key_basis``."""
    t = Basis(key_basis).other
    n_test = obs.n(1, SourceId.of(t, 1), t)
    n_key = obs.n(1, SourceId.of(key_basis, 2), key_basis)
    if n_test <= 0 or n_key <= 0:
        return 0.5, 0.5
    ec = min(max(e_test, L.E_FLOOR), L.E_CAP)
    th = theta_correction(n_test, n_key, ec, obs.eps, obs.settings.theta_log_base)
    return th, min(e_test + th, L.E_CAP)


def axis_params(obs: Observations, basis: Basis) -> np.ndarray:
    """Pack every constant the kernel needs along one vacuum-yield axis."""
    w = Basis(basis)
    k = w.other
    key, test = SourceId.of(w, 2), SourceId.of(w, 1)
    out = np.zeros(L.SIZE)
    lines = s1_lines(obs, w)
    out[L.N_LINES] = len(lines)
    (out[L.C0], out[L.SL0]), (out[L.C1], out[L.SL1]) = lines
    out[L.N1_KEY] = obs.n(1, key, w)
    out[L.N1_TEST] = obs.n(1, test, w)
    out[L.N0_TEST] = obs.n(0, test, w)
    out[L.TBAR] = obs.T(test, w).upper
    out[L.A0_TEST] = obs.a(0, test)
    out[L.A1_TEST] = obs.a(1, test)
    out[L.PREF_KEY] = obs.cfg.p[key] * obs.cfg.q(w) * obs.a(1, key)
    out[L.N_THETA_TEST] = obs.n(1, test, w)
    out[L.N_THETA_KEY] = obs.n(1, SourceId.of(k, 2), k)
    out[L.LN_HALF_EPS] = math.log(obs.eps / 2.0)
    out[L.EPS] = obs.eps
    out[L.LOG_SCALE] = 1.0 / obs.settings.theta_log_base.ln
    return out
