"""Scenario generation: determinism, coupling semantics, splits."""
import numpy as np
import pytest

import epirisk as er
from epirisk.errors import ConfigError, DataError
from epirisk.synth import coupled_daily_states


def tiny_scenario(**kw):
    base = dict(n_regions=12, seed=3, horizon_days=40,
                pop_range=(2000.0, 9000.0), side_m=30000.0,
                gravity=er.GravityConfig(k=4, delta_m=8000.0))
    base.update(kw)
    return er.ScenarioConfig(**base)


def test_dataset_is_seed_deterministic():
    a = er.make_dataset(tiny_scenario())
    b = er.make_dataset(tiny_scenario())
    c = er.make_dataset(tiny_scenario(seed=4))
    assert np.array_equal(a.graph.feature_matrix(), b.graph.feature_matrix())
    for sa, sb in zip(a.series, b.series):
        assert np.array_equal(sa.cumulative_cases, sb.cumulative_cases)
    assert [r.region_id for r in a.regions] == [r.region_id for r in a.regions]
    assert not np.array_equal(a.graph.feature_matrix(),
                              c.graph.feature_matrix())


def test_region_ids_populations_and_features():
    ds = er.make_dataset(tiny_scenario())
    assert [r.region_id for r in ds.regions] == [f"r{j:02d}" for j in range(12)]
    for r in ds.regions:
        assert 2000.0 <= r.population <= 9000.0
        assert 0.0 <= r.x_m <= 30000.0
        assert 0.0 <= r.y_m <= 30000.0
        assert r.features.shape == (5,)
    cfg = tiny_scenario()
    assert cfg.feature_dim == 3 + cfg.n_distractors


def test_rate_features_are_centered_in_unit_interval():
    # without noise the first three features are affine maps of
    # log-rates and log-population into [-1, 1]
    ds = er.make_dataset(tiny_scenario(n_regions=200, feature_noise=0.0,
                                       n_distractors=0))
    feats = ds.graph.feature_matrix()
    assert feats.shape == (200, 3)
    assert np.all(feats >= -1.0) and np.all(feats <= 1.0)
    lnb = np.log([p.beta for p in ds.params])
    order = np.argsort(lnb)
    assert np.array_equal(np.argsort(feats[:, 0]), order)


def test_uncoupled_series_matches_single_region_integrator():
    ds = er.make_dataset(tiny_scenario(coupling=0.0, obs_noise=0.0))
    for region, params, series in zip(ds.regions, ds.params, ds.series):
        traj = er.integrate_sir(params, horizon_days=40, dt=0.5)
        daily = params.population - traj.s[::2]
        # coupling weight zero must reduce exactly, not approximately
        assert np.array_equal(series.cumulative_cases, daily)


def test_coupling_changes_dynamics_and_conserves_mass():
    cfg = tiny_scenario(coupling=0.5, obs_noise=0.0)
    ds0 = er.make_dataset(tiny_scenario(coupling=0.0, obs_noise=0.0))
    ds1 = er.make_dataset(cfg)
    stacked0 = np.stack([s.cumulative_cases for s in ds0.series])
    stacked1 = np.stack([s.cumulative_cases for s in ds1.series])
    assert not np.allclose(stacked0, stacked1)

    pops = np.array([r.population for r in ds1.regions])
    betas = np.array([p.beta for p in ds1.params])
    gammas = np.array([p.gamma for p in ds1.params])
    i0 = np.array([p.i0 for p in ds1.params])
    inflow = np.zeros((12, 12))
    for e in ds1.graph.edges:
        inflow[ds1.graph.index[e.dst], ds1.graph.index[e.src]] = e.norm_weight
    s, i, r = coupled_daily_states(betas, gammas, pops, pops - i0, i0,
                                   np.zeros(12), inflow, 0.5, 40, 0.5)
    total = s + i + r
    assert np.max(np.abs(total - pops[:, None])) <= 1e-9 * pops.max()


def test_all_regions_are_seeded():
    ds = er.make_dataset(tiny_scenario())
    for region, params in zip(ds.regions, ds.params):
        assert params.i0 == pytest.approx(1e-3 * region.population)
        assert params.i0 > 0


def test_observation_noise_keeps_series_valid():
    ds = er.make_dataset(tiny_scenario(obs_noise=0.3, seed=11))
    for region, series in zip(ds.regions, ds.series):
        cum = series.cumulative_cases
        assert np.all(np.diff(cum) >= 0.0)
        assert cum[-1] <= region.population
        assert np.all(cum >= 0.0)


def test_true_r0_property():
    ds = er.make_dataset(tiny_scenario())
    expected = np.array([p.beta / p.gamma for p in ds.params])
    assert np.array_equal(ds.true_r0, expected)


def test_make_split_sizes_and_partition():
    split = er.make_split(10, seed=0)
    assert len(split.train) == 6 and len(split.val) == 2 and len(split.test) == 2
    union = sorted(list(split.train) + list(split.val) + list(split.test))
    assert union == list(range(10))
    assert list(split.train) == sorted(split.train)
    again = er.make_split(10, seed=0)
    assert np.array_equal(split.train, again.train)
    assert np.array_equal(split.test, again.test)
    other = er.make_split(10, seed=1)
    assert not (np.array_equal(split.train, other.train)
                and np.array_equal(split.val, other.val))


def test_make_split_rejects_empty_parts():
    with pytest.raises(DataError):
        er.make_split(3, seed=0)
    with pytest.raises(DataError):
        er.make_split(10, seed=0, fractions=(0.99, 0.005))


def test_scenario_validation():
    with pytest.raises(ConfigError):
        tiny_scenario(n_regions=1)
    with pytest.raises(ConfigError):
        tiny_scenario(coupling=1.5)
    with pytest.raises(ConfigError):
        tiny_scenario(beta_range=(0.5, 0.1))
    with pytest.raises(ConfigError):
        tiny_scenario(i0_fraction=0.0)
    with pytest.raises(ConfigError):
        tiny_scenario(obs_noise=-0.1)
    with pytest.raises(ConfigError):
        tiny_scenario(n_distractors=-1)
    with pytest.raises(ConfigError):
        tiny_scenario(horizon_days=0)
