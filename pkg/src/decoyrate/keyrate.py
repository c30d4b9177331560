"""Worst-case finite-key rate over the vacuum-yield rectangle."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .counts import CountsError, CountsTable
from .decoy import (
    DEFAULT_SETTINGS,
    Observations,
    Settings,
    SinglePhotonBounds,
    VacuumRectangle,
    axis_params,
    bounds_at,
    rectangle_for,
)
from .model import Basis, ProtocolConfig, SourceId, SystemModel, Variant, binary_entropy

GRID = 33
GOLDEN_ITERS = 80
_TOL = 1e-10  # golden-section stop, relative to the bracket width
# bound invocations beyond the observed-yield intervals: two single-photon
# shrink factors and one vacuum shrink per basis, one sampling correction per key
_EXTRA_USES = 8


@dataclass
class KeyRateReport:
    R: float
    rz: float = 0.0
    rx: float = 0.0
    s0z_star: float = math.nan
    s0x_star: float = math.nan
    bps: float = 0.0
    signed: float = -math.inf
    rectangle: VacuumRectangle | None = None
    bounds: SinglePhotonBounds | None = None
    clamp_events: int = 0
    eps_budget: float = 0.0
    reason: str | None = None
    variant: Variant = Variant.FOUR
    settings: Settings = field(default_factory=Settings)

    def record(self) -> dict:
        """Flat key/value view for machine-readable output."""
        rec = {
            "variant": self.variant.value,
            "R_per_pulse": self.R,
            "bps": self.bps,
            "R_signed": self.signed,
            "Rz": self.rz,
            "Rx": self.rx,
            "s0z_star": self.s0z_star,
            "s0x_star": self.s0x_star,
            "clamp_events": self.clamp_events,
            "eps_budget": self.eps_budget,
            "chernoff_arg": self.settings.chernoff_arg.value,
            "theta_log_base": self.settings.theta_log_base.value,
        }
        if self.rectangle is not None:
            r = self.rectangle
            rec.update(s0z_lower=r.s0z_lower, s0z_upper=r.s0z_upper, s0x_lower=r.s0x_lower, s0x_upper=r.s0x_upper)
        if self.bounds is not None:
            b = self.bounds
            for w in Basis:
                rec[f"s1_mean_{w.value}"] = b.s1_mean[w]
                rec[f"s1_key_{w.value}2"] = b.s1_key[w]
                rec[f"e1_test_{w.value}1"] = b.e1_test[w]
                rec[f"e1_phase_{w.value}"] = b.e1_phase[w]
        if self.reason:
            rec["reason"] = self.reason
        return rec


def correction_cost(obs: Observations, basis: Basis, f: float) -> float:
    """Per-pulse error-correction leakage of the signal key in ``basis``."""
    key = SourceId.of(basis, 2)
    n = obs.counts.total(key, basis)
    if n <= 0:
        return 0.0
    e = obs.counts.error(key, basis) / n
    s = n / obs.denom(key, basis)
    return obs.cfg.p[key] * obs.cfg.q(basis) * f * s * binary_entropy(e)


def _prepare(counts, cfg, sys, settings):
    obs = Observations(counts, cfg, sys.eps, settings)
    rect = rectangle_for(obs)
    pz, px = axis_params(obs, Basis.Z), axis_params(obs, Basis.X)
    cz, cx = correction_cost(obs, Basis.Z, sys.f), correction_cost(obs, Basis.X, sys.f)
    return obs, rect, pz, px, cz, cx


def _basis_rates(obs: Observations, b: SinglePhotonBounds, cz: float, cx: float) -> tuple[float, float]:
    out = []
    for k, cost in ((Basis.Z, cz), (Basis.X, cx)):
        key = SourceId.of(k, 2)
        gain = obs.cfg.p[key] * obs.cfg.q(k) * obs.a(1, key) * b.s1_key[k]
        out.append(gain * (1.0 - binary_entropy(b.e1_phase[k])) - cost)
    return out[0], out[1]


def rate_at(counts: CountsTable, cfg: ProtocolConfig, sys: SystemModel, s0z: float, s0x: float,
            settings: Settings = DEFAULT_SETTINGS) -> float:
    """Signed key rate at one vacuum-yield point, from the scalar reference bounds."""
    obs = Observations(counts, cfg, sys.eps, settings)
    b = bounds_at(obs, s0z, s0x)
    rz, rx = _basis_rates(obs, b, correction_cost(obs, Basis.Z, sys.f), correction_cost(obs, Basis.X, sys.f))
    return rz + rx


def _axis(lo: float, hi: float, n: int) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    return np.linspace(lo, hi, n)


def _minimize(pz, px, cost: float, rect: VacuumRectangle, grid: int, golden_iters: int):
    """Grid scan then one golden-section pass per axis around the best cell."""
    zs = _axis(rect.s0z_lower, rect.s0z_upper, grid)
    xs = _axis(rect.s0x_lower, rect.s0x_upper, grid)
    kz, pzv, _ = _backend.axis_terms(pz, zs)
    kx, pxv, _ = _backend.axis_terms(px, xs)
    best, i, j = _backend.grid_min(kz, pzv, kx, pxv, cost)
    z, x = float(zs[i]), float(xs[j])
    if golden_iters and len(zs) > 1:
        lo, hi = float(zs[max(i - 1, 0)]), float(zs[min(i + 1, len(zs) - 1)])
        zz, fz = _backend.golden_axis(pz, lo, hi, float(kx[j]), float(pxv[j]), cost,
                                      golden_iters, _TOL * (hi - lo))
        if fz < best:
            best, z = fz, zz
    if golden_iters and len(xs) > 1:
        (kzz,), (pzz,), _ = _backend.axis_terms(pz, [z])
        lo, hi = float(xs[max(j - 1, 0)]), float(xs[min(j + 1, len(xs) - 1)])
        xx, fx = _backend.golden_axis(px, lo, hi, float(kzz), float(pzz), cost,
                                      golden_iters, _TOL * (hi - lo))
        if fx < best:
            best, x = fx, xx
    return best, z, x


def worst_case_rate(counts: CountsTable, cfg: ProtocolConfig, sys: SystemModel,
                    settings: Settings = DEFAULT_SETTINGS, *, grid: int = GRID,
                    golden_iters: int = GOLDEN_ITERS) -> KeyRateReport:
    """Minimize the key rate over every vacuum yield consistent with the data.

    Dense ``grid`` x ``grid`` scan, then golden-section refinement along each
    axis around the best cell. The result is floored at zero.
    """
    settings = settings or DEFAULT_SETTINGS
    base = KeyRateReport(R=0.0, variant=cfg.variant, settings=settings)
    try:
        obs, rect, pz, px, cz, cx = _prepare(counts, cfg, sys, settings)
    except CountsError as exc:
        if "p*q*Nt = 0" in str(exc):
            base.reason = f"degenerate configuration: {exc}"
            return base
        raise
    base.rectangle = rect
    base.eps_budget = (obs.uses + _EXTRA_USES) * sys.eps
    if not rect.feasible:
        base.reason = "infeasible vacuum rectangle"
        return base
    signed, z, x = _minimize(pz, px, cz + cx, rect, grid, golden_iters)
    b = bounds_at(obs, z, x)
    rz, rx = _basis_rates(obs, b, cz, cx)
    r = max(0.0, signed)
    return KeyRateReport(
        R=r, rz=rz, rx=rx, s0z_star=z, s0x_star=x, bps=r * sys.clock_rate, signed=signed,
        rectangle=rect, bounds=b, clamp_events=b.clamp_events, eps_budget=base.eps_budget,
        reason=None if signed > 0 else "non-positive worst-case rate",
        variant=cfg.variant, settings=settings,
    )


def rate_3intensity(counts: CountsTable, cfg: ProtocolConfig, sys: SystemModel,
                    settings: Settings = DEFAULT_SETTINGS, **kw) -> KeyRateReport:
    """Worst-case rate for the 3-intensity variants, vacuum yields taken from the vacuum source."""
    if not cfg.variant.has_vacuum:
        raise ValueError(f"rate_3intensity needs a 3-intensity variant, got {cfg.variant.value}")
    return worst_case_rate(counts, cfg, sys, settings, **kw)


def rate_surface(counts: CountsTable, cfg: ProtocolConfig, sys: SystemModel, zs, xs,
                 settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    """Signed rate on the outer product of the given vacuum yields."""
    _, _, pz, px, cz, cx = _prepare(counts, cfg, sys, settings)
    kz, pzv, _ = _backend.axis_terms(pz, zs)
    kx, pxv, _ = _backend.axis_terms(px, xs)
    return _backend.grid_fill(kz, pzv, kx, pxv, cz + cx)
