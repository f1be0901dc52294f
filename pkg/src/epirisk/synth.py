"""Synthetic multi-region outbreak scenarios with known ground truth.

Regions get log-uniform populations, uniform planar positions, and
per-region (beta, gamma) drawn log-uniformly, so the true reproduction
numbers span the three risk bands. Every region is seeded with a small
infectious fraction, which makes the eventual risk label a deterministic
function of the region's own rates and of its mobility neighborhood.

Epidemics are coupled through the gravity graph: a fraction `coupling` of
each region's force of infection is driven by the weighted per-capita
prevalence of its in-neighbors instead of its own. At coupling zero the
stepper reduces bit-for-bit to the single-region integrator in sir.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, InvalidStateError
from .gravity import GravityConfig, Region, build_graph
from .sir import CaseSeries, SirParams


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything that determines a scenario, including its seed."""

    n_regions: int = 600
    seed: int = 0
    pop_range: tuple = (2000.0, 20000.0)
    side_m: float = 150000.0
    horizon_days: int = 120
    beta_range: tuple = (0.12, 0.55)
    gamma_range: tuple = (0.05, 0.25)
    i0_fraction: float = 1e-3
    coupling: float = 0.0
    obs_noise: float = 0.0
    feature_noise: float = 0.0
    n_distractors: int = 2
    sim_dt: float = 0.5
    gravity: GravityConfig = field(default_factory=GravityConfig)

    def __post_init__(self):
        if not isinstance(self.n_regions, int) or self.n_regions < 2:
            raise ConfigError("n_regions", f"need >= 2 regions, got {self.n_regions!r}")
        for name in ("pop_range", "beta_range", "gamma_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ConfigError(name, f"need 0 < lo <= hi, got ({lo}, {hi})")
        if not self.side_m > 0:
            raise ConfigError("side_m", "must be positive")
        if not isinstance(self.horizon_days, int) or self.horizon_days < 1:
            raise ConfigError("horizon_days", "must be a positive int")
        if not 0.0 <= self.coupling <= 1.0:
            raise ConfigError("coupling", f"must lie in [0, 1], got {self.coupling}")
        if self.obs_noise < 0 or self.feature_noise < 0:
            raise ConfigError("obs_noise", "noise scales must be >= 0")
        if self.n_distractors < 0:
            raise ConfigError("n_distractors", "must be >= 0")
        if not 0 < self.i0_fraction <= 0.5:
            raise ConfigError("i0_fraction", f"must lie in (0, 0.5], got {self.i0_fraction}")
        if self.sim_dt <= 0:
            raise ConfigError("sim_dt", "must be positive")

    @property
    def feature_dim(self):
        return 3 + self.n_distractors


def _centered(values, lo, hi):
    """Map [lo, hi] affinely onto [-1, 1]."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return (values - mid) / half if half > 0 else np.zeros_like(values)


def generate_regions(cfg, rng):
    """Sample regions with features, plus their true SIR parameters.

    Draw order is fixed (populations, positions, beta, gamma, feature
    noise, distractors) so a given generator state always yields the
    same scenario. Features are centered encodings of log-beta,
    log-gamma and log-population; noise draws are consumed only when
    their scale is positive.
    """
    n = cfg.n_regions
    p_lo, p_hi = cfg.pop_range
    pops = np.exp(rng.uniform(np.log(p_lo), np.log(p_hi), size=n))
    xs = rng.uniform(0.0, cfg.side_m, size=n)
    ys = rng.uniform(0.0, cfg.side_m, size=n)
    b_lo, b_hi = cfg.beta_range
    g_lo, g_hi = cfg.gamma_range
    log_betas = rng.uniform(np.log(b_lo), np.log(b_hi), size=n)
    log_gammas = rng.uniform(np.log(g_lo), np.log(g_hi), size=n)
    betas = np.exp(log_betas)
    gammas = np.exp(log_gammas)

    base = np.column_stack([
        _centered(log_betas, np.log(b_lo), np.log(b_hi)),
        _centered(log_gammas, np.log(g_lo), np.log(g_hi)),
        _centered(np.log(pops), np.log(p_lo), np.log(p_hi)),
    ])
    if cfg.feature_noise > 0:
        base = base + cfg.feature_noise * rng.standard_normal((n, 3))
    if cfg.n_distractors > 0:
        feats = np.column_stack([base, rng.standard_normal((n, cfg.n_distractors))])
    else:
        feats = base

    width = len(str(n - 1))
    regions = []
    params = []
    for j in range(n):
        rid = f"r{j:0{width}d}"
        regions.append(Region(region_id=rid, population=float(pops[j]),
                              x_m=float(xs[j]), y_m=float(ys[j]),
                              features=feats[j]))
        i0 = cfg.i0_fraction * float(pops[j])
        params.append(SirParams.from_initial_infected(
            beta=float(betas[j]), gamma=float(gammas[j]),
            population=float(pops[j]), i0=i0,
        ))
    return regions, params


def coupled_daily_states(betas, gammas, pops, s0, i0, r0, inflow_matrix,
                         coupling, horizon_days, dt):
    """RK4 for the coupled system; returns (S, I, R) at integer days.

    inflow_matrix[v, w] holds the normalized weight of edge w -> v, so
    inflow = M @ (I / N) is each region's weighted neighbor per-capita
    prevalence. The arithmetic grouping mirrors sir.sir_derivatives and
    the stage updates mirror sir.integrate_sir exactly, which makes the
    coupling-zero limit bit-identical to the scalar integrator.
    """
    steps_per_day = max(1, round(1.0 / dt))
    h = 1.0 / steps_per_day
    hh = 0.5 * h
    c = coupling
    n = len(pops)
    s = np.array(s0, dtype=np.float64)
    i = np.array(i0, dtype=np.float64)
    r = np.array(r0, dtype=np.float64)
    out_s = np.empty((n, horizon_days + 1))
    out_i = np.empty((n, horizon_days + 1))
    out_r = np.empty((n, horizon_days + 1))
    out_s[:, 0], out_i[:, 0], out_r[:, 0] = s, i, r

    def derivs(sv, iv):
        foi = (1.0 - c) * (betas * iv / pops) \
            + c * (betas * (inflow_matrix @ (iv / pops)))
        ds = -foi * sv
        di = foi * sv - gammas * iv
        dr = gammas * iv
        return ds, di, dr

    for day in range(1, horizon_days + 1):
        for _ in range(steps_per_day):
            k1s, k1i, k1r = derivs(s, i)
            k2s, k2i, k2r = derivs(s + hh * k1s, i + hh * k1i)
            k3s, k3i, k3r = derivs(s + hh * k2s, i + hh * k2i)
            k4s, k4i, k4r = derivs(s + h * k3s, i + h * k3i)
            s = s + (h / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
            i = i + (h / 6.0) * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
            r = r + (h / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
        out_s[:, day], out_i[:, day], out_r[:, day] = s, i, r

    if not (np.all(np.isfinite(out_s)) and np.all(np.isfinite(out_i))):
        raise InvalidStateError("coupled integration produced non-finite state")
    return out_s, out_i, out_r


def simulate_coupled_cases(regions, params, graph, cfg, rng):
    """Daily cumulative case series per region, optionally noised.

    The clean signal is cumulative incidence N - S(day). With positive
    obs_noise each count is scaled by an independent log-normal factor
    exp(obs_noise * z) and then made monotone with a running maximum;
    counts stay real-valued. At obs_noise zero the series is exactly the
    clean signal and no draws are consumed.
    """
    n = len(regions)
    if len(params) != n:
        raise DataError(f"{n} regions but {len(params)} parameter sets")
    betas = np.array([p.beta for p in params])
    gammas = np.array([p.gamma for p in params])
    pops = np.array([p.population for p in params])
    s0 = np.array([p.s0 for p in params])
    i0 = np.array([p.i0 for p in params])
    r0 = np.array([p.r0 for p in params])

    m = np.zeros((n, n))
    for e in graph.edges:
        m[graph.index[e.dst], graph.index[e.src]] = e.norm_weight

    out_s, _, _ = coupled_daily_states(
        betas, gammas, pops, s0, i0, r0, m,
        cfg.coupling, cfg.horizon_days, cfg.sim_dt,
    )
    cum = pops[:, None] - out_s
    if cfg.obs_noise > 0:
        z = rng.standard_normal(cum.shape)
        cum = np.maximum.accumulate(cum * np.exp(cfg.obs_noise * z), axis=1)
        # reported cases cannot exceed the population
        cum = np.minimum(cum, pops[:, None])

    days = np.arange(cfg.horizon_days + 1)
    return [
        CaseSeries(region_id=regions[j].region_id, days=days.copy(),
                   cumulative_cases=cum[j])
        for j in range(n)
    ]


@dataclass
class DatasetSplit:
    """Disjoint train/val/test index arrays plus the seed that made them."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    seed: int


def make_split(n, seed, fractions=(0.6, 0.2)):
    """Shuffle 0..n-1 and cut train/val/test at floor(f * n) boundaries."""
    f_train, f_val = fractions
    if not (0 < f_train < 1 and 0 < f_val < 1 and f_train + f_val < 1):
        raise ConfigError("fractions", f"invalid split fractions {fractions}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(f_train * n)
    n_val = int(f_val * n)
    if n_train == 0 or n_val == 0 or n_train + n_val >= n:
        raise DataError(f"split of {n} items leaves an empty part")
    return DatasetSplit(
        train=np.sort(perm[:n_train]),
        val=np.sort(perm[n_train:n_train + n_val]),
        test=np.sort(perm[n_train + n_val:]),
        seed=seed,
    )


@dataclass
class SynthDataset:
    """A generated scenario: regions, graph, case series, ground truth."""

    config: ScenarioConfig
    regions: list
    graph: object
    series: list
    params: list

    @property
    def true_r0(self):
        return np.array([p.beta / p.gamma for p in self.params])


def make_dataset(cfg):
    """Generate a full scenario from its config, deterministically."""
    rng = np.random.default_rng(cfg.seed)
    regions, params = generate_regions(cfg, rng)
    graph = build_graph(regions, cfg.gravity)
    series = simulate_coupled_cases(regions, params, graph, cfg, rng)
    return SynthDataset(config=cfg, regions=regions, graph=graph,
                        series=series, params=params)
