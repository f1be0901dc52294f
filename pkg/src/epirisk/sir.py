"""SIR dynamics, per-region calibration, and three-level risk labeling.

Calibration fits (beta, gamma) to a cumulative case series by minimizing
mean squared error between observed counts and the model's cumulative
incidence N - S(t): a coarse log-uniform grid seeds a Nelder-Mead
refinement in log space. All operations are pure and deterministic, so
per-region calibrations can run in any order or in parallel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError, DataError, DegenerateSeriesError, InvalidStateError

DEFAULT_THRESHOLD_MULTIPLIER = 0.71


@dataclass(frozen=True)
class SirParams:
    """Compartmental rates plus initial state; rates are per day."""

    beta: float
    gamma: float
    population: float
    s0: float
    i0: float
    r0: float

    def __post_init__(self):
        if not self.population > 0:
            raise ConfigError("population", f"must be positive, got {self.population}")
        if self.beta < 0 or not math.isfinite(self.beta):
            raise ConfigError("beta", f"must be finite and >= 0, got {self.beta}")
        if self.gamma < 0 or not math.isfinite(self.gamma):
            raise ConfigError("gamma", f"must be finite and >= 0, got {self.gamma}")
        for name in ("s0", "i0", "r0"):
            if getattr(self, name) < 0:
                raise ConfigError(name, f"must be >= 0, got {getattr(self, name)}")
        total = self.s0 + self.i0 + self.r0
        if abs(total - self.population) > 1e-9 * self.population:
            raise ConfigError(
                "s0", f"initial state sums to {total}, expected {self.population}"
            )

    @classmethod
    def from_initial_infected(cls, beta, gamma, population, i0):
        """Standard outbreak window: i0 infectious, nobody recovered yet."""
        return cls(beta=beta, gamma=gamma, population=population,
                   s0=population - i0, i0=i0, r0=0.0)


@dataclass
class SirTrajectory:
    """Uniformly sampled compartment sizes; times are in days."""

    times: np.ndarray
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    population: float

    def __len__(self):
        return len(self.times)


@dataclass
class CaseSeries:
    """Cumulative reported cases for one region at integer day offsets."""

    region_id: str
    days: np.ndarray
    cumulative_cases: np.ndarray

    def __post_init__(self):
        self.days = np.asarray(self.days, dtype=np.int64)
        self.cumulative_cases = np.asarray(self.cumulative_cases, dtype=np.float64)
        if self.days.shape != self.cumulative_cases.shape:
            raise DataError(
                f"series {self.region_id}: days and counts lengths differ"
            )
        if np.any(np.diff(self.days) <= 0):
            raise DataError(f"series {self.region_id}: days must be strictly increasing")
        if np.any(np.diff(self.cumulative_cases) < 0):
            raise DataError(f"series {self.region_id}: cumulative cases decrease")


@dataclass
class RiskLabel:
    """Three-level exposure risk: 0 low, 1 medium, 2 high."""

    region_id: str
    r0: float
    label: int


def sir_derivatives(state, params):
    """Right-hand side of the SIR system, in persons per day.

    The force of infection is grouped as (beta * i / N) * s; the coupled
    multi-region stepper in synth uses the same grouping so its zero-
    coupling limit is bit-for-bit identical.
    """
    s, i, r = state
    if not (math.isfinite(s) and math.isfinite(i) and math.isfinite(r)):
        raise InvalidStateError(f"non-finite state ({s}, {i}, {r})")
    foi = params.beta * i / params.population
    ds = -foi * s
    di = foi * s - params.gamma * i
    dr = params.gamma * i
    return ds, di, dr


def integrate_sir(params, horizon_days, dt=0.1):
    """Classical fixed-step RK4 over [0, horizon]; samples every dt days.

    Returns floor(horizon/dt) + 1 samples, the first being the initial
    state. Mass is conserved to rounding error.
    """
    if dt <= 0:
        raise ConfigError("dt", f"must be positive, got {dt}")
    if horizon_days <= 0:
        raise ConfigError("horizon_days", f"must be positive, got {horizon_days}")
    if dt > horizon_days:
        raise ConfigError("dt", f"dt={dt} exceeds horizon={horizon_days}")

    n_steps = int(math.floor(horizon_days / dt + 1e-9))
    times = np.arange(n_steps + 1) * dt
    out_s = np.empty(n_steps + 1)
    out_i = np.empty(n_steps + 1)
    out_r = np.empty(n_steps + 1)

    s, i, r = params.s0, params.i0, params.r0
    out_s[0], out_i[0], out_r[0] = s, i, r
    h = dt
    hh = 0.5 * h
    for step in range(1, n_steps + 1):
        k1s, k1i, k1r = sir_derivatives((s, i, r), params)
        k2s, k2i, k2r = sir_derivatives((s + hh * k1s, i + hh * k1i, r + hh * k1r), params)
        k3s, k3i, k3r = sir_derivatives((s + hh * k2s, i + hh * k2i, r + hh * k2r), params)
        k4s, k4i, k4r = sir_derivatives((s + h * k3s, i + h * k3i, r + h * k3r), params)
        s = s + (h / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
        i = i + (h / 6.0) * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
        r = r + (h / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
        out_s[step], out_i[step], out_r[step] = s, i, r

    return SirTrajectory(times=times, s=out_s, i=out_i, r=out_r,
                         population=params.population)


def basic_reproduction_number(params):
    """beta / gamma; invariant under common rescaling of both rates."""
    if params.gamma == 0:
        raise ZeroDivisionError("gamma is zero; reproduction number undefined")
    return params.beta / params.gamma


# ---------------------------------------------------------------------------
# calibration

@dataclass(frozen=True)
class CalibConfig:
    """Search region and optimizer settings for per-region calibration.

    The grid stage integrates at roughly grid_dt (snapped so whole days
    are hit exactly); the Nelder-Mead refinement uses refine_dt. RK4 is
    accurate to ~1e-4 relative at half-day steps on these dynamics, far
    below the calibration tolerances, so coarse steps keep fits fast.
    """

    beta_bounds: tuple = (0.01, 2.0)
    gamma_bounds: tuple = (0.01, 1.0)
    grid_size: int = 24
    grid_dt: float = 1.0
    refine_dt: float = 0.5
    nm_max_iter: int = 500
    nm_tol: float = 1e-8

    def __post_init__(self):
        for name in ("beta_bounds", "gamma_bounds"):
            lo, hi = getattr(self, name)
            if not (0 < lo < hi):
                raise ConfigError(name, f"need 0 < lo < hi, got ({lo}, {hi})")
        if self.grid_size < 2:
            raise ConfigError("grid_size", "need at least a 2x2 grid")
        for name in ("grid_dt", "refine_dt"):
            if getattr(self, name) <= 0:
                raise ConfigError(name, "must be positive")


@dataclass
class CalibrationResult:
    """Fitted parameters plus fit diagnostics.

    `clamped` flags an optimizer solution that left the search region and
    was pulled back to the nearest bound.
    """

    params: SirParams
    mse: float
    clamped: bool = False

    @property
    def r0(self):
        return basic_reproduction_number(self.params)


def _incidence_at_days(beta, gamma, population, i0, max_day, dt):
    """Cumulative incidence N - S at integer days 0..max_day.

    Scalar fixed-step RK4 on (S, I) only; R never feeds back. The step is
    snapped to an integer count per day so day marks are hit exactly.
    """
    steps_per_day = max(1, round(1.0 / dt))
    h = 1.0 / steps_per_day
    hh = 0.5 * h
    sixth = h / 6.0
    n = population
    s = n - i0
    i = i0
    out = np.empty(max_day + 1)
    out[0] = n - s
    for day in range(1, max_day + 1):
        for _ in range(steps_per_day):
            foi = beta * i / n
            k1s = -foi * s
            k1i = foi * s - gamma * i
            s2 = s + hh * k1s
            i2 = i + hh * k1i
            foi = beta * i2 / n
            k2s = -foi * s2
            k2i = foi * s2 - gamma * i2
            s3 = s + hh * k2s
            i3 = i + hh * k2i
            foi = beta * i3 / n
            k3s = -foi * s3
            k3i = foi * s3 - gamma * i3
            s4 = s + h * k3s
            i4 = i + h * k3i
            foi = beta * i4 / n
            k4s = -foi * s4
            k4i = foi * s4 - gamma * i4
            s = s + sixth * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
            i = i + sixth * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
        out[day] = n - s
    return out


def _incidence_grid(betas, gammas, population, i0, max_day, dt):
    """Vectorized twin of _incidence_at_days over parameter arrays.

    Returns an (n_params, max_day + 1) matrix of cumulative incidence.
    """
    steps_per_day = max(1, round(1.0 / dt))
    h = 1.0 / steps_per_day
    hh = 0.5 * h
    sixth = h / 6.0
    n = population
    m = len(betas)
    s = np.full(m, n - i0)
    i = np.full(m, float(i0))
    out = np.empty((m, max_day + 1))
    out[:, 0] = n - s
    for day in range(1, max_day + 1):
        for _ in range(steps_per_day):
            foi = betas * i / n
            k1s = -foi * s
            k1i = foi * s - gammas * i
            s2 = s + hh * k1s
            i2 = i + hh * k1i
            foi = betas * i2 / n
            k2s = -foi * s2
            k2i = foi * s2 - gammas * i2
            s3 = s + hh * k2s
            i3 = i + hh * k2i
            foi = betas * i3 / n
            k3s = -foi * s3
            k3i = foi * s3 - gammas * i3
            s4 = s + h * k3s
            i4 = i + h * k3i
            foi = betas * i4 / n
            k4s = -foi * s4
            k4i = foi * s4 - gammas * i4
            s = s + sixth * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
            i = i + sixth * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
        out[:, day] = n - s
    return out


def calibrate_sir(series, population, config=None):
    """Fit (beta, gamma) to one cumulative case series.

    The observation window is anchored at the first observation: day
    offsets are shifted so the first sample is t=0, and the initial state
    is i0 = max(first count, 1), r0 = 0. Deterministic for a fixed config.
    """
    cfg = config or CalibConfig()
    days = np.asarray(series.days, dtype=np.int64)
    cum = np.asarray(series.cumulative_cases, dtype=np.float64)
    if len(days) < 8:
        raise DataError(
            f"series {series.region_id}: need >= 8 observations, got {len(days)}"
        )
    if np.any(np.diff(cum) < 0):
        raise DataError(f"series {series.region_id}: cumulative cases decrease")
    if np.all(cum == 0):
        raise DegenerateSeriesError(
            f"series {series.region_id}: all counts are zero"
        )
    if cum[-1] > population:
        raise DataError(
            f"series {series.region_id}: final count {cum[-1]} exceeds population"
        )

    offsets = days - days[0]
    max_day = int(offsets[-1])
    i0 = max(float(cum[0]), 1.0)

    # coarse log-uniform grid over the search region
    b_lo, b_hi = cfg.beta_bounds
    g_lo, g_hi = cfg.gamma_bounds
    beta_axis = np.geomspace(b_lo, b_hi, cfg.grid_size)
    gamma_axis = np.geomspace(g_lo, g_hi, cfg.grid_size)
    bb, gg = np.meshgrid(beta_axis, gamma_axis, indexing="ij")
    bb = bb.ravel()
    gg = gg.ravel()
    curves = _incidence_grid(bb, gg, population, i0, max_day, cfg.grid_dt)
    grid_mse = np.mean((curves[:, offsets] - cum[None, :]) ** 2, axis=1)
    best = int(np.argmin(grid_mse))

    def objective(log_bg):
        beta = math.exp(log_bg[0])
        gamma = math.exp(log_bg[1])
        if not (1e-8 <= beta <= 1e4 and 1e-8 <= gamma <= 1e4):
            return 1e300
        pred = _incidence_at_days(beta, gamma, population, i0, max_day, cfg.refine_dt)
        mse = float(np.mean((pred[offsets] - cum) ** 2))
        return mse if math.isfinite(mse) else 1e300

    x0 = np.log([bb[best], gg[best]])
    res = minimize(
        objective, x0, method="Nelder-Mead",
        options={"maxiter": cfg.nm_max_iter, "xatol": cfg.nm_tol,
                 "fatol": cfg.nm_tol, "adaptive": False},
    )
    beta = math.exp(res.x[0])
    gamma = math.exp(res.x[1])

    clamped = False
    if not b_lo <= beta <= b_hi:
        beta = min(max(beta, b_lo), b_hi)
        clamped = True
    if not g_lo <= gamma <= g_hi:
        gamma = min(max(gamma, g_lo), g_hi)
        clamped = True
    mse = objective(np.log([beta, gamma]))

    params = SirParams.from_initial_infected(beta, gamma, population, i0)
    return CalibrationResult(params=params, mse=mse, clamped=clamped)


# ---------------------------------------------------------------------------
# risk labeling

@dataclass
class LabelingResult:
    """Risk labels plus the thresholds that produced them.

    `degenerate` is set when the spread is zero and every region fell into
    the medium band by convention.
    """

    labels: list
    mean: float
    std: float
    lower: float
    upper: float
    degenerate: bool = False

    @property
    def label_values(self):
        return np.array([lab.label for lab in self.labels], dtype=np.int64)


def categorize_r0(r0_values, k=DEFAULT_THRESHOLD_MULTIPLIER, region_ids=None):
    """Three-level split at mean +/- k * population-std.

    Strictly below the lower threshold is low (0), strictly above the
    upper is high (2), everything else, ties included, is medium (1).
    Invariant under positive affine rescaling of the values.
    """
    values = np.asarray(r0_values, dtype=np.float64).reshape(-1)
    if len(values) < 2:
        raise DataError(f"need >= 2 values to categorize, got {len(values)}")
    if not np.all(np.isfinite(values)):
        raise DataError("risk values must be finite")
    if k < 0:
        raise ConfigError("k", f"threshold multiplier must be >= 0, got {k}")
    if region_ids is None:
        region_ids = [str(j) for j in range(len(values))]
    elif len(region_ids) != len(values):
        raise DataError("region_ids and values lengths differ")

    mu = float(np.mean(values))
    sigma = float(np.std(values))
    lower = mu - k * sigma
    upper = mu + k * sigma
    degenerate = sigma == 0.0
    if degenerate:
        labels = np.ones(len(values), dtype=np.int64)
    else:
        labels = np.ones(len(values), dtype=np.int64)
        labels[values < lower] = 0
        labels[values > upper] = 2
    wrapped = [
        RiskLabel(region_id=str(rid), r0=float(v), label=int(lab))
        for rid, v, lab in zip(region_ids, values, labels)
    ]
    return LabelingResult(labels=wrapped, mean=mu, std=sigma,
                          lower=lower, upper=upper, degenerate=degenerate)
