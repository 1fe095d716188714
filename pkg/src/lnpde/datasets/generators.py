"""Trajectory generators (reference solvers).

All generators work in float64 and return arrays shaped [frames, *spatial];
dataset assembly casts to float32 on save. These double as the ground-truth
oracles for evaluation at refined time grids.
"""

from __future__ import annotations

import warnings

import numpy as np

from .grid import GridSpec, TimeGrid

__all__ = [
    "sample_sinusoidal_ic",
    "advection_trajectory",
    "burgers_trajectory",
    "molenkamp_trajectory",
    "sample_molenkamp_params",
    "MOLENKAMP_PARAM_RANGES",
    "CFLError",
]


class CFLError(RuntimeError):
    """The pinned time refinement violates the CFL limit."""


def sample_sinusoidal_ic(grid: GridSpec, rng, n_waves: int = 3,
                         max_wavenumber: int = 8) -> np.ndarray:
    """Superposition of sines: sum_i A_i sin(k_i x + phi_i).

    k_i = 2*pi*n_i/L with integer n_i drawn uniformly from {1..max_wavenumber}
    (bounded so desk-scale 64-point grids resolve every mode), A_i ~ U[0,1],
    phi_i ~ U(0, 2*pi).
    """
    if grid.ndim != 1:
        raise ValueError("sinusoidal ICs are defined for 1-D grids")
    x = grid.coords(0)
    length = grid.extent(0)
    n = rng.integers(1, max_wavenumber + 1, size=n_waves)
    amp = rng.uniform(0.0, 1.0, size=n_waves)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=n_waves)
    field = np.zeros_like(x)
    for ni, ai, pi in zip(n, amp, phase):
        field += ai * np.sin(2.0 * np.pi * ni * x / length + pi)
    return field


# ------------------------------------------------------------ advection


def advection_trajectory(grid: GridSpec, tgrid: TimeGrid, zeta: float,
                         ic: np.ndarray) -> np.ndarray:
    """Periodic linear advection solved exactly by a spectral phase shift:
    s(x, t) = s0(x - zeta*(t - t0))."""
    if grid.ndim != 1 or not grid.periodic:
        raise ValueError("advection generator needs a periodic 1-D grid")
    n = grid.points[0]
    if ic.shape != (n,):
        raise ValueError(f"ic shape {ic.shape} does not match grid ({n},)")
    length = grid.extent(0)
    spectrum = np.fft.rfft(np.asarray(ic, dtype=np.float64))
    modes = np.arange(spectrum.size)
    out = np.empty((tgrid.n_frames, n))
    for i, t in enumerate(tgrid.times):
        shift = zeta * (t - tgrid.t0)
        out[i] = np.fft.irfft(spectrum * np.exp(-2j * np.pi * modes * shift / length), n=n)
    return out


# ------------------------------------------------------------ Burgers


def _spectral_upsample(ic: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return np.asarray(ic, dtype=np.float64).copy()
    n = ic.size
    fine = n * factor
    spectrum = np.fft.rfft(np.asarray(ic, dtype=np.float64))
    padded = np.zeros(fine // 2 + 1, dtype=complex)
    padded[: spectrum.size] = spectrum
    # guard: a populated Nyquist mode of the coarse grid splits in two
    if n % 2 == 0:
        padded[n // 2] *= 0.5
        # its conjugate partner lands at the same bin only on the coarse grid
    return np.fft.irfft(padded * factor, n=fine)


def _burgers_rhs(s: np.ndarray, h: float, diffusivity: float) -> np.ndarray:
    # conservative local Lax-Friedrichs flux + flux-form central diffusion
    f = 0.5 * s * s
    s_right = np.roll(s, -1)
    local_speed = np.maximum(np.abs(s), np.abs(s_right))
    flux = 0.5 * (f + np.roll(f, -1)) - 0.5 * local_speed * (s_right - s)
    visc = diffusivity * (s_right - s) / h
    total = flux - visc
    return -(total - np.roll(total, 1)) / h


def burgers_trajectory(grid: GridSpec, tgrid: TimeGrid, nu: float,
                       ic: np.ndarray, oversample: int = 8,
                       time_oversample: int | None = None,
                       cfl: float = 0.4) -> np.ndarray:
    """Viscous Burgers d_t s + d_x(s^2/2) = (nu/pi) d_xx s, periodic.

    Finite-volume local Lax-Friedrichs flux, flux-form central diffusion,
    RK4 in time. Space is refined by `oversample`; the number of time
    substeps per output interval is the smallest satisfying both CFL limits
    unless pinned by `time_oversample` (too small a pin raises CFLError with
    the required factor). The fine solution is subsampled back to the grid.
    """
    if grid.ndim != 1 or not grid.periodic:
        raise ValueError("Burgers generator needs a periodic 1-D grid")
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    n = grid.points[0]
    if ic.shape != (n,):
        raise ValueError(f"ic shape {ic.shape} does not match grid ({n},)")

    fine = _spectral_upsample(ic, oversample)
    h = grid.extent(0) / fine.size
    diffusivity = nu / np.pi

    amax = max(float(np.max(np.abs(fine))), 1e-12)
    adv_limit = cfl * h / amax
    diff_limit = cfl * h * h / (2.0 * diffusivity) if diffusivity > 0 else np.inf
    required = max(1, int(np.ceil(tgrid.dt / min(adv_limit, diff_limit))))
    if time_oversample is None:
        n_sub = required
    else:
        if time_oversample < required:
            raise CFLError(
                f"time_oversample={time_oversample} violates the CFL limit at "
                f"spatial oversample {oversample}; need at least {required} "
                "substeps per output interval"
            )
        n_sub = time_oversample

    dt_sub = tgrid.dt / n_sub
    out = np.empty((tgrid.n_frames, n))
    state = fine
    out[0] = state[::oversample]
    for frame in range(1, tgrid.n_frames):
        for _ in range(n_sub):
            k1 = _burgers_rhs(state, h, diffusivity)
            k2 = _burgers_rhs(state + 0.5 * dt_sub * k1, h, diffusivity)
            k3 = _burgers_rhs(state + 0.5 * dt_sub * k2, h, diffusivity)
            k4 = _burgers_rhs(state + dt_sub * k3, h, diffusivity)
            state = state + (dt_sub / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[frame] = state[::oversample]
    return out


# ------------------------------------------------------------ Molenkamp

MOLENKAMP_PARAM_RANGES = (
    (1.0, 20.0),   # lam1: initial peak height
    (2.0, 4.0),    # lam2: Gaussian width exponent
    (1.0, 5.0),    # lam3: decay rate
    (-0.1, 0.1),   # lam4: center offset x
    (-0.1, 0.1),   # lam5: center offset y
)


def sample_molenkamp_params(rng) -> np.ndarray:
    return np.array([rng.uniform(lo, hi) for lo, hi in MOLENKAMP_PARAM_RANGES])


def molenkamp_trajectory(grid: GridSpec, tgrid: TimeGrid, lam) -> np.ndarray:
    """Closed-form Molenkamp-Crowley solution: a Gaussian pulse rotating with
    the solid-body velocity field (u, v) = (-2*pi*y, 2*pi*x) while decaying
    as exp(-lam3*t); evaluated exactly on the grid."""
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape != (5,):
        raise ValueError("Molenkamp needs 5 parameters")
    if grid.ndim != 2:
        raise ValueError("Molenkamp generator needs a 2-D grid")
    for value, (lo, hi) in zip(lam, MOLENKAMP_PARAM_RANGES):
        if not (lo <= value <= hi):
            warnings.warn(
                f"Molenkamp parameter {value:.4g} outside sampled range [{lo}, {hi}]",
                stacklevel=2,
            )
            break
    l1, l2, l3, l4, l5 = lam
    xg, yg = grid.meshgrid()
    out = np.empty((tgrid.n_frames,) + xg.shape)
    for i, t in enumerate(tgrid.times):
        cx = l4 - 0.5 * np.cos(2.0 * np.pi * t)
        cy = l5 + 0.5 * np.sin(2.0 * np.pi * t)
        h2 = (xg - cx) ** 2 + (yg - cy) ** 2
        out[i] = l1 * np.power(0.01, l2 * h2) * np.exp(-l3 * t)
    return out
