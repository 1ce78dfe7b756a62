"""Snapshot generators for the 1-D heat equation and the cubic NLS.

Both return ``SnapshotMatrix``-shaped arrays (space along rows, time along
columns) suitable for :class:`~romtree.snapshots.SnapshotEntry`.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import ValidationError
from .snapshots import SnapshotEntry, SnapshotSet


@dataclass(frozen=True)
class HeatConfig:
    """``xi_t = gamma^2 xi_xx`` on [0, 1] x [0, T] with ``xi(0, x) = sin(pi x)``.

    ``bc`` is ``"dirichlet"`` (homogeneous, the default) or ``"neumann"`` (zero flux).
    """

    gamma: float
    nx: int = 101
    nt: int = 501
    T: float = 5.0
    bc: str = "dirichlet"

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValidationError("gamma must be positive")
        if self.nx < 3 or self.nt < 2 or not self.T > 0:
            raise ValidationError("need nx >= 3, nt >= 2 and T > 0")
        if self.bc not in ("dirichlet", "neumann"):
            raise ValidationError(f"unknown boundary condition {self.bc!r}")


def heat_grid(cfg: HeatConfig):
    return np.linspace(0.0, 1.0, cfg.nx), np.linspace(0.0, cfg.T, cfg.nt)


def heat_snapshots(cfg: HeatConfig) -> np.ndarray:
    """Crank-Nicolson solution sampled at every grid point and time level."""
    x, t = heat_grid(cfg)
    dx, dt = x[1] - x[0], t[1] - t[0]
    mu = 0.5 * cfg.gamma**2 * dt / dx**2
    nx = cfg.nx

    # tridiagonal second-difference operator A (without the 1/dx^2), banded storage
    lower = np.ones(nx)
    diag = -2.0 * np.ones(nx)
    upper = np.ones(nx)
    if cfg.bc == "dirichlet":
        diag[[0, -1]] = 0.0
        upper[0] = 0.0
        lower[-1] = 0.0
    else:
        # ghost points mirror the first interior node
        upper[0] = 2.0
        lower[-1] = 2.0
    ab = np.zeros((3, nx))
    ab[0, 1:] = -mu * upper[:-1]
    ab[1, :] = 1.0 - mu * diag
    ab[2, :-1] = -mu * lower[1:]

    D = np.empty((nx, cfg.nt), order="F")
    u = np.sin(np.pi * x)
    if cfg.bc == "dirichlet":
        u[[0, -1]] = 0.0
    D[:, 0] = u
    for k in range(1, cfg.nt):
        rhs = (1.0 + mu * diag) * u
        rhs[:-1] += mu * upper[:-1] * u[1:]
        rhs[1:] += mu * lower[1:] * u[:-1]
        u = solve_banded((1, 1), ab, rhs, check_finite=False)
        D[:, k] = u
    return D


def heat_exact(x, t, gamma):
    """Closed form for the Dirichlet problem."""
    return np.exp(-(gamma**2) * np.pi**2 * np.asarray(t))[None, :] * np.sin(np.pi * np.asarray(x))[:, None]


@dataclass(frozen=True)
class SolitonConfig:
    """Two solitons of the cubic NLS ``xi_t = i xi_xx + i |xi|^2 xi``.

    The periodic domain is ``[x_min, x_min + L)``. Setting ``single=True``
    drops the second (slow) soliton.
    """

    alpha: float
    v1: float = 1.0
    v2: float = 0.1
    x1_0: float = 0.0
    x2_0: float = 25.0
    nx: int = 512
    nt: int = 801
    T: float = 40.0
    L: float = 80.0
    x_min: float = -20.0
    substeps: int = 10
    single: bool = False

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError("alpha must be positive")
        if self.nx < 8 or self.nt < 2 or not self.T > 0 or not self.L > 0 or self.substeps < 1:
            raise ValidationError("need nx >= 8, nt >= 2, T > 0, L > 0 and substeps >= 1")


def soliton_profile(x, t, alpha, v, x0=0.0):
    """Single travelling soliton, nonlinear coefficient 1."""
    x = np.asarray(x, dtype=np.float64)
    xs = x - x0
    phase = 0.5 * v * xs - t * (0.25 * v * v - alpha)
    return np.sqrt(2.0 * alpha) * np.exp(1j * phase) / np.cosh(np.sqrt(alpha) * (xs - v * t))


def soliton_grid(cfg: SolitonConfig):
    x = cfg.x_min + cfg.L * np.arange(cfg.nx) / cfg.nx
    return x, np.linspace(0.0, cfg.T, cfg.nt)


# relative mass drift beyond which the run is rejected
MASS_DRIFT_TOL = 1e-3


def soliton_field(cfg: SolitonConfig) -> np.ndarray:
    """Complex field ``(nx, nt)`` from Strang split-step Fourier integration."""
    x, t = soliton_grid(cfg)
    dx = cfg.L / cfg.nx
    xi = soliton_profile(x, 0.0, cfg.alpha, cfg.v1, cfg.x1_0)
    if not cfg.single:
        xi = xi + soliton_profile(x, 0.0, cfg.alpha, cfg.v2, cfg.x2_0)

    k = 2.0 * np.pi * np.fft.fftfreq(cfg.nx, d=dx)
    dt = (t[1] - t[0]) / cfg.substeps
    half_linear = np.exp(-1j * k * k * 0.5 * dt)

    out = np.empty((cfg.nx, cfg.nt), dtype=np.complex128)
    out[:, 0] = xi
    mass0 = np.sum(np.abs(xi) ** 2) * dx
    for n in range(1, cfg.nt):
        for _ in range(cfg.substeps):
            xi = np.fft.ifft(half_linear * np.fft.fft(xi))
            xi = xi * np.exp(1j * dt * np.abs(xi) ** 2)
            xi = np.fft.ifft(half_linear * np.fft.fft(xi))
        out[:, n] = xi
    mass = np.sum(np.abs(xi) ** 2) * dx
    drift = abs(mass - mass0) / mass0
    if not np.isfinite(drift) or drift > MASS_DRIFT_TOL:
        raise ValidationError(
            f"split-step integration unstable for alpha={cfg.alpha}: relative mass drift {drift:.3g}"
        )
    return out


def soliton_snapshots(cfg: SolitonConfig) -> np.ndarray:
    """Real parts stacked over imaginary parts, shape ``(2 nx, nt)``."""
    xi = soliton_field(cfg)
    return np.asfortranarray(np.vstack([xi.real, xi.imag]))


# --- parameter sweeps ---------------------------------------------------------


def parse_range(text: str) -> list[float]:
    """Expand ``a:step:b`` (inclusive) or a comma-separated list into floats."""
    text = text.strip()
    if ":" not in text:
        try:
            return [float(v) for v in text.split(",") if v.strip()]
        except ValueError as exc:
            raise ValidationError(f"bad value list {text!r}") from exc
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"range must look like a:step:b, got {text!r}")
    try:
        a, step, b = (float(p) for p in parts)
    except ValueError as exc:
        raise ValidationError(f"bad range {text!r}") from exc
    if not step > 0 or b < a:
        raise ValidationError(f"range {text!r} needs step > 0 and b >= a")
    count = int(np.floor((b - a) / step + 1e-9)) + 1
    # round away the accumulated binary error so ids read as typed
    return [round(a + k * step, 12) for k in range(count)]


def format_id(prefix: str, value) -> str:
    vals = np.atleast_1d(np.asarray(value, dtype=np.float64))
    return prefix + "_".join(format(float(v), ".10g") for v in vals)


def sweep(
    generator: Callable[[float], np.ndarray],
    values: Sequence,
    prefix: str,
    workers: int = 1,
) -> SnapshotSet:
    """Run ``generator`` once per parameter value and collect a SnapshotSet."""
    values = list(values)
    if not values:
        raise ValidationError("sweep needs at least one parameter value")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            mats = list(pool.map(generator, values))
    else:
        mats = [generator(v) for v in values]
    entries = tuple(
        SnapshotEntry(format_id(prefix, v), np.atleast_1d(v), m) for v, m in zip(values, mats)
    )
    return SnapshotSet(entries[0].snapshots.shape[0], entries)


def heat_sweep(gammas: Sequence[float], workers: int = 1, **grid) -> SnapshotSet:
    base = HeatConfig(gamma=1.0, **grid)
    return sweep(lambda g: heat_snapshots(replace(base, gamma=float(g))), gammas, "g", workers)


def soliton_sweep(alphas: Sequence[float], workers: int = 1, **grid) -> SnapshotSet:
    base = SolitonConfig(alpha=1.0, **grid)
    return sweep(lambda a: soliton_snapshots(replace(base, alpha=float(a))), alphas, "a", workers)


HEAT_GAMMAS = parse_range("0.001:0.001:0.1")
HEAT_TRAIN = [0.001] + [round(0.006 + 0.005 * k, 12) for k in range(19)] + [0.1]
SOLITON_ALPHAS = parse_range("0.05:0.01:0.5")
SOLITON_TRAIN = [round(0.05 + 0.04 * k, 12) for k in range(12)] + [0.5]
