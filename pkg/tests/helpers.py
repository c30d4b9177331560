"""Shared test utilities: fixture columns and a noiseless channel oracle."""
import math
from dataclasses import dataclass
from pathlib import Path

from decoyrate import io
from decoyrate.model import Basis, ProtocolConfig, SourceId, SystemModel
from decoyrate.simulator import expected_counts


@dataclass(frozen=True)
class Column:
    table: str          # "s2" (10%/5%) or "s3" (10%/1%)
    distance: int
    variant: str
    counts_path: Path
    config_path: Path
    reported: float
    reported_sd: float

    @property
    def name(self) -> str:
        return f"{self.table}-{self.distance}km-{self.variant}"

    def load(self):
        cfg, system = io.parse_config(self.config_path)
        return io.parse_counts(self.counts_path), cfg, system


def columns(table: str | None = None) -> list[Column]:
    out = []
    for p in sorted(io.fixtures_dir().glob("s[23]-*.csv")):
        meta = io.parse_counts(p).metadata
        r, sd = (float(v) for v in meta["reported_R"].split("+/-"))
        out.append(Column(p.name[:2], int(meta["distance_km"]), meta["variant"], p,
                          io.fixtures_dir() / meta["config"], r, sd))
    out.sort(key=lambda c: (c.table, c.distance, ["3int-sym", "3int-asym", "4int"].index(c.variant)))
    return [c for c in out if table is None or c.table == table]


def column(table: str, distance: int, variant: str) -> Column:
    return next(c for c in columns(table) if c.distance == distance and c.variant == variant)


def noiseless_system(eta_z, eta_x, dark_rate=2.5e-7, e_mis=0.015, **kw) -> SystemModel:
    """Channel whose yields follow the per-photon-number model exactly."""
    return SystemModel(eta_z=eta_z, eta_x=eta_x, dark_rate=dark_rate, e_mis=e_mis, after_pulse=0.0,
                       dead_time=0.0, loss_coeff=0.0, extra_bob_loss=0.0, **kw)


def true_yields(system: SystemModel, basis: Basis) -> dict:
    """Exact vacuum yield, single-photon yield and single-photon error rate."""
    d = system.dark_rate
    y0 = 2 * d * (1 - d)
    eta = system.eta(basis)
    s1 = 1 - (1 - eta) * (1 - y0)
    e1 = (0.5 * y0 + system.misalignment(basis) * eta) / s1
    return {"s0": y0, "s1": s1, "e1": e1}


def expected_table(system: SystemModel, cfg: ProtocolConfig):
    return expected_counts(system, cfg, 0.0).table()


def cfg4(mu, p, q_x, nt=1e10) -> ProtocolConfig:
    keys = (SourceId.Z1, SourceId.Z2, SourceId.X1, SourceId.X2)
    return ProtocolConfig(dict(zip(keys, mu)), dict(zip(keys, p)), q_x, nt=nt)


def rel(a, b):
    return abs(a - b) / abs(b) if b else abs(a)


def isclose(a, b, rtol):
    return math.isclose(a, b, rel_tol=rtol)


def random_instance(rng):
    """A noiseless channel and a 4-intensity config drawn across the published ranges."""
    import numpy as np
    eta = np.exp(rng.uniform(np.log(1e-3), np.log(0.1), size=2))
    mu1 = rng.uniform(0.02, 0.31, size=2)
    mu2 = rng.uniform(0.41, 0.72, size=2)
    p = rng.dirichlet(np.ones(4)) * 0.96 + 0.01
    cfg = cfg4([mu1[0], mu2[0], mu1[1], mu2[1]], list(p), rng.uniform(0.13, 0.55))
    system = noiseless_system(float(eta[0]), float(eta[1]), dark_rate=float(rng.uniform(1e-7, 1e-6)),
                              e_mis=float(rng.uniform(0.005, 0.03)))
    return cfg, system


def oracle_violations(n: int = 200, seed: int = 20240601) -> list:
    """Check every decoy bound against the exact yields of ``n`` random noiseless instances.

    Returns ``(instance, check, basis)`` for each bound on the wrong side of
    its true value.
    """
    import numpy as np
    from decoyrate.decoy import Observations, bounds_at, vacuum_rectangle
    rng = np.random.default_rng(seed)
    bad = []
    for i in range(n):
        cfg, system = random_instance(rng)
        obs = Observations(expected_table(system, cfg), cfg, system.eps)
        rect = vacuum_rectangle(obs.counts, cfg, obs=obs)
        truth = {b: true_yields(system, b) for b in Basis}
        for b in Basis:
            lo, hi = rect.bounds(b)
            if not lo <= truth[b]["s0"] <= hi:
                bad.append((i, "s0", b))
        at = bounds_at(obs, truth[Basis.Z]["s0"], truth[Basis.X]["s0"])
        # the yield bounds fall as s0 grows, so the upper corner is the worst case
        far = bounds_at(obs, rect.s0z_upper, rect.s0x_upper)
        for b in Basis:
            t = truth[b]
            checks = {
                "s1_mean": at.s1_mean[b] <= t["s1"],
                "s1_key": at.s1_key[b] <= t["s1"],
                "s1_test": at.s1_test[b] <= t["s1"],
                "e1_test": at.e1_test[b] >= t["e1"],
                "e1_phase": at.e1_phase[b.other] >= t["e1"],
                "s1_mean_upper_corner": far.s1_mean[b] <= t["s1"],
            }
            bad += [(i, k, b) for k, ok in checks.items() if not ok]
    return bad
