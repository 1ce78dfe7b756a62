import numpy as np
import pytest

from romtree.errors import ValidationError
from romtree.generators import (
    HEAT_GAMMAS,
    HEAT_TRAIN,
    SOLITON_ALPHAS,
    SOLITON_TRAIN,
    HeatConfig,
    SolitonConfig,
    format_id,
    heat_exact,
    heat_grid,
    heat_snapshots,
    heat_sweep,
    parse_range,
    soliton_field,
    soliton_grid,
    soliton_profile,
    soliton_snapshots,
)


def neumann_series(x, t, gamma, terms=20000):
    """Cosine series for sin(pi x) under zero flux: only even modes survive."""
    k = np.arange(2, terms, 2.0)
    a = 4.0 / (np.pi * (1 - k * k))
    modes = np.cos(np.outer(x, k * np.pi)) * a
    return 2.0 / np.pi + modes @ np.exp(-np.outer((gamma * k * np.pi) ** 2, t))


def test_dirichlet_matches_closed_form():
    cfg = HeatConfig(0.05, nx=101, nt=501, T=5.0, bc="dirichlet")
    x, t = heat_grid(cfg)
    assert np.max(np.abs(heat_snapshots(cfg) - heat_exact(x, t, 0.05))) < 1e-3


def test_dirichlet_second_order():
    errs = []
    for nx, nt in [(21, 26), (41, 51), (81, 101)]:
        cfg = HeatConfig(0.3, nx=nx, nt=nt, T=2.0, bc="dirichlet")
        x, t = heat_grid(cfg)
        errs.append(np.max(np.abs(heat_snapshots(cfg) - heat_exact(x, t, 0.3))))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3.5 < q < 4.5 for q in ratios), ratios


def test_neumann_matches_series():
    # sin(pi x) has nonzero slope at the walls, so the first few CN steps carry an
    # O(1e-3) transient; compare once it has decayed and check the order there
    errs = []
    for nx, nt in [(51, 251), (101, 501), (201, 1001)]:
        cfg = HeatConfig(0.1, nx=nx, nt=nt, T=5.0, bc="neumann")
        x, t = heat_grid(cfg)
        late = t >= 0.5
        errs.append(np.max(np.abs(heat_snapshots(cfg)[:, late] - neumann_series(x, t[late], 0.1))))
    assert errs[1] < 1e-3
    assert all(3.5 < a / b < 4.5 for a, b in zip(errs, errs[1:])), errs


def test_neumann_conserves_mass():
    D = heat_snapshots(HeatConfig(0.08, bc="neumann"))
    w = np.ones(D.shape[0])
    w[[0, -1]] = 0.5
    mass = w @ D
    assert np.max(np.abs(mass - mass[0])) < 1e-12 * abs(mass[0]) * D.shape[1]


def test_initial_condition_exact():
    for bc in ("dirichlet", "neumann"):
        cfg = HeatConfig(0.02, bc=bc)
        x, _ = heat_grid(cfg)
        u0 = np.sin(np.pi * x)
        if bc == "dirichlet":
            u0[[0, -1]] = 0.0
        assert np.array_equal(heat_snapshots(cfg)[:, 0], u0)


def test_tiny_gamma_is_nearly_static():
    for bc in ("dirichlet", "neumann"):
        D = heat_snapshots(HeatConfig(1e-8, bc=bc))
        assert np.max(np.abs(np.diff(D, axis=1))) < 1e-6


def test_default_boundary_is_dirichlet():
    assert HeatConfig(0.1).bc == "dirichlet"


def test_heat_config_validation():
    with pytest.raises(ValidationError):
        HeatConfig(0.0)
    with pytest.raises(ValidationError):
        HeatConfig(0.1, bc="robin")
    with pytest.raises(ValidationError):
        HeatConfig(0.1, nx=2)


def test_single_soliton_closed_form():
    cfg = SolitonConfig(0.3, single=True, T=10.0, nt=101)
    x, t = soliton_grid(cfg)
    exact = np.stack([soliton_profile(x, tk, 0.3, cfg.v1, cfg.x1_0) for tk in t], axis=1)
    assert np.max(np.abs(soliton_field(cfg) - exact)) < 1e-2


def test_soliton_mass_drift():
    cfg = SolitonConfig(0.25, T=10.0, nt=101)
    xi = soliton_field(cfg)
    mass = np.sum(np.abs(xi) ** 2, axis=0) * cfg.L / cfg.nx
    assert np.max(np.abs(mass - mass[0])) / mass[0] < 1e-6 * cfg.T


def test_soliton_amplitude_scaling():
    x = np.linspace(-5, 5, 11)
    for alpha in (0.05, 0.2, 0.5):
        assert np.max(np.abs(soliton_profile(x, 0.0, alpha, 1.0))) == pytest.approx(np.sqrt(2 * alpha))


def test_soliton_snapshot_layout():
    cfg = SolitonConfig(0.2, nx=64, nt=5, T=1.0)
    D = soliton_snapshots(cfg)
    xi = soliton_field(cfg)
    assert D.shape == (128, 5)
    assert np.array_equal(D[:64], xi.real) and np.array_equal(D[64:], xi.imag)


def test_parameter_sets():
    assert len(HEAT_GAMMAS) == 100 and HEAT_GAMMAS[0] == 0.001 and HEAT_GAMMAS[-1] == 0.1
    assert len(SOLITON_ALPHAS) == 46 and SOLITON_ALPHAS[-1] == 0.5
    assert len(HEAT_TRAIN) == 21 and set(HEAT_TRAIN) <= set(HEAT_GAMMAS)
    assert len(SOLITON_TRAIN) == 13 and set(SOLITON_TRAIN) <= set(SOLITON_ALPHAS)


def test_parse_range():
    assert parse_range("0.1:0.1:0.3") == [0.1, 0.2, 0.3]
    assert parse_range("1, 2.5") == [1.0, 2.5]
    for bad in ("1:2", "1:0:2", "a:b:c", "x,y"):
        with pytest.raises(ValidationError):
            parse_range(bad)


def test_format_id():
    assert format_id("g", 0.05) == "g0.05"
    assert format_id("a", 0.31) == "a0.31"
    assert format_id("p", [1.0, 2.5]) == "p1_2.5"


def test_single_value_sweep():
    snaps = heat_sweep([0.05], nx=11, nt=6)
    assert len(snaps) == 1 and list(snaps.ids) == ["g0.05"] and snaps.n == 11
    with pytest.raises(ValidationError):
        heat_sweep([])


def test_threaded_sweep_matches_serial():
    a = heat_sweep([0.01, 0.02, 0.03], nx=21, nt=11)
    b = heat_sweep([0.01, 0.02, 0.03], workers=3, nx=21, nt=11)
    assert a == b
