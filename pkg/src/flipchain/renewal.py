"""Renewal (Volterra) solver for the kinetic temperature profile.

The spatial convolution is diagonalized by DFT, so per dual point k the
equation is scalar: That(t,k) = ghat(t,k) + int_0^t phat_s(k) That(t-s,k) ds.
Each mode is advanced by trapezoidal product integration, implicit in the
newest value.  The kernel and source rows decay like exp(-delta0 t), so
their tables are truncated at t_cut = 40/delta0; past-block contributions
to the convolution are then batched through FFT convolutions, which keeps
long runs (t of order L^2) affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import MissingAsymptotics, NonConvergence, StepTooLarge
from .kernels import InitialCondition, ghat_table, phat_table
from .model import InteractionModel

_BLOCK = 1024


def h_max(model: InteractionModel) -> float:
    """Largest allowed step: resolve gamma, omega_max and the fast rate mu+."""
    omega_max = math.sqrt(model.phi_hat_max)
    u0 = math.sqrt((model.gamma / 2.0) ** 2 - model.omega0**2)
    mu_plus_max = model.gamma / 2.0 + u0
    return min(0.05 / model.gamma, 0.05 / omega_max, 0.25 / mu_plus_max)


def default_t_cut(model: InteractionModel) -> float:
    """Memory horizon 40/delta0; kernel mass beyond it is below e^{-80}."""
    return 40.0 / model.delta0


def time_grid(model: InteractionModel, t_end: float, h: float | None = None) -> np.ndarray:
    """Uniform grid 0..t_end with step <= h_max (h rounded down to fit t_end)."""
    hm = h_max(model)
    if h is None:
        n = max(1, math.ceil(t_end / hm))
        return np.linspace(0.0, t_end, n + 1)
    if h > hm * (1.0 + 1e-12):
        raise StepTooLarge(f"h = {h} exceeds h_max = {hm}")
    n = max(1, round(t_end / h))
    if abs(n * h - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError("t_end must be an integer multiple of h")
    return np.linspace(0.0, n * h, n + 1)


def _check_uniform(times: np.ndarray) -> float:
    d = np.diff(times)
    if len(d) == 0 or times[0] != 0.0 or not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
        raise ValueError("need a uniform time grid starting at 0")
    return float(d[0])


@dataclass
class TemperatureProfile:
    """T_{t,x} on (time grid) x (lattice), with provenance tag."""

    times: np.ndarray
    T: np.ndarray  # (T, L)
    provenance: str
    stderr: np.ndarray | None = None

    def index_of_time(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"time {t} not on the stored grid")
        return i

    def at_time(self, t: float) -> np.ndarray:
        return self.T[self.index_of_time(t)]


@dataclass
class ModeGreen:
    """Green's function of one Fourier mode of the renewal equation."""

    k: float
    times: np.ndarray
    values: np.ndarray


def _volterra_trapezoid(
    phat: np.ndarray, ghat: np.ndarray, h: float, block: int = _BLOCK
) -> np.ndarray:
    """Trapezoidal product integration of That = ghat + phat * That (per column).

    phat: (n_mem+1, K) kernel rows, treated as zero beyond the table.
    ghat: (N+1, K) source rows.  Past-block history is accumulated with FFT
    convolutions; within a block the triangular part is summed directly.
    """
    n_steps = ghat.shape[0] - 1
    n_mem = phat.shape[0] - 1
    q = np.array(phat, dtype=complex)
    q[0] *= 0.5
    denom = 1.0 - h * q[0]
    if np.any(np.abs(denom) < 0.5):
        raise NonConvergence("implicit step denominator too small; reduce h")
    T = np.zeros(ghat.shape, dtype=complex)
    T[0] = ghat[0]
    if n_steps == 0:
        return T
    block = max(1, min(block, n_mem if n_mem > 0 else 1))
    p_rows = np.asarray(phat)
    for n0 in range(1, n_steps + 1, block):
        n1 = min(n0 + block, n_steps + 1)
        if n_mem > 0:
            hist_src = np.zeros((n_mem, ghat.shape[1]), dtype=complex)
            lo = max(0, n0 - n_mem)
            hist_src[n_mem - (n0 - lo):] = T[lo:n0]
            conv = fftconvolve(q, hist_src, axes=0)
            hist = conv[n_mem : n_mem + (n1 - n0)]
        else:
            hist = np.zeros((n1 - n0, ghat.shape[1]), dtype=complex)
        for i, n in enumerate(range(n0, n1)):
            m = min(i, n_mem)
            acc = hist[i]
            if m > 0:
                acc = acc + np.einsum("jk,jk->k", q[1 : m + 1], T[n - 1 : n - m - 1 : -1])
            if n <= n_mem:
                acc = acc - 0.5 * p_rows[n] * T[0]
            T[n] = (ghat[n] + h * acc) / denom
    if not np.all(np.isfinite(T)):
        raise NonConvergence("non-finite values in the Volterra solution")
    return T


def _volterra_direct(phat: np.ndarray, ghat: np.ndarray, h: float) -> np.ndarray:
    """Reference O(N^2) trapezoidal scheme (no truncation, no blocking)."""
    n_steps = ghat.shape[0] - 1
    T = np.zeros(ghat.shape, dtype=complex)
    T[0] = ghat[0]
    denom = 1.0 - 0.5 * h * phat[0]
    for n in range(1, n_steps + 1):
        acc = 0.5 * phat[n] * T[0]
        if n > 1:
            acc = acc + np.einsum("jk,jk->k", phat[1:n], T[n - 1 : 0 : -1])
        T[n] = (ghat[n] + h * acc) / denom
    return T


def _volterra_midpoint(phat_half: np.ndarray, ghat: np.ndarray, h: float) -> np.ndarray:
    """Midpoint product integration: kernel at (j+1/2)h, unknown averaged.

    Independent second-order scheme used as a uniqueness/accuracy proxy.
    """
    n_steps = ghat.shape[0] - 1
    T = np.zeros(ghat.shape, dtype=complex)
    T[0] = ghat[0]
    denom = 1.0 - 0.5 * h * phat_half[0]
    for n in range(1, n_steps + 1):
        mids = phat_half[:n]
        pair = 0.5 * (T[1 : n + 1][::-1] + T[0:n][::-1])
        acc = np.einsum("jk,jk->k", mids[1:], pair[1:]) if n > 1 else 0.0
        acc = acc + 0.5 * phat_half[0] * T[n - 1]
        T[n] = (ghat[n] + h * acc) / denom
    return T


def _mode_tables(model: InteractionModel, times: np.ndarray, t_cut: float):
    h = _check_uniform(times)
    n_steps = len(times) - 1
    n_mem = min(n_steps, int(math.ceil(t_cut / h)))
    ktimes = times[: n_mem + 1]
    return h, n_steps, n_mem, ktimes


def solve_profile(
    model: InteractionModel,
    init: InitialCondition,
    times: np.ndarray,
    t_cut: float | None = None,
    scheme: str = "trapezoid",
) -> TemperatureProfile:
    """Solve the temperature renewal equation on a uniform grid.

    Per-mode scalar Volterra solves after DFT in x; result transformed
    back and certified real.
    """
    times = np.asarray(times, dtype=float)
    h = _check_uniform(times)
    if h > h_max(model) * (1.0 + 1e-12):
        raise StepTooLarge(f"h = {h} exceeds h_max = {h_max(model)}")
    tc = default_t_cut(model) if t_cut is None else float(t_cut)
    h, n_steps, n_mem, ktimes = _mode_tables(model, times, tc)

    phat = phat_table(model, ktimes)
    gmem = min(n_steps, n_mem)
    ghat = np.zeros((n_steps + 1, model.L), dtype=complex)
    ghat[: gmem + 1] = ghat_table(model, init, times[: gmem + 1])

    if scheme == "trapezoid":
        That = _volterra_trapezoid(phat, ghat, h)
    elif scheme == "midpoint":
        half = times[:-1] + 0.5 * h  # O(N^2) reference path, short horizons only
        That = _volterra_midpoint(phat_table(model, half), ghat, h)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    field = model.lattice.idft(That)
    scale = max(1.0, float(np.abs(field.real).max()))
    if float(np.abs(field.imag).max()) > 1e-9 * scale:
        raise NonConvergence("solution has a non-negligible imaginary part")
    return TemperatureProfile(times, field.real, "renewal")


def greens_mode(
    model: InteractionModel,
    k: float,
    times: np.ndarray,
    t_cut: float | None = None,
) -> ModeGreen:
    """Ghat(t,k) solving the scalar renewal equation with source phat(t,k)."""
    times = np.asarray(times, dtype=float)
    h = _check_uniform(times)
    if h > h_max(model) * (1.0 + 1e-12):
        raise StepTooLarge(f"h = {h} exceeds h_max = {h_max(model)}")
    tc = default_t_cut(model) if t_cut is None else float(t_cut)
    h, n_steps, n_mem, ktimes = _mode_tables(model, times, tc)

    from .propagator import a_hat

    _, a2 = a_hat(model, ktimes[:, None], model.lattice.dual[None, :])
    field = model.lattice.idft(a2).real
    # single-mode column at the requested k (need not be a dual point)
    x = model.lattice.sites
    col = (2.0 * model.gamma * field**2) @ np.cos(2.0 * np.pi * float(k) * x)
    pk = col[:, None]
    gk = np.zeros((n_steps + 1, 1))
    gk[: n_mem + 1] = pk[: min(n_mem, n_steps) + 1]
    That = _volterra_trapezoid(pk, gk.astype(complex), h)
    return ModeGreen(float(k), times, That[:, 0].real)


def greens_asymptotic_check(
    model: InteractionModel,
    k: float,
    t_range: np.ndarray,
    decay_rate: float,
    amplitude: float,
    green: ModeGreen | None = None,
    times: np.ndarray | None = None,
) -> float:
    """Max over t_range of |Ghat(t,k) - a e^{-tR}| e^{+dhat t}, dhat fitted.

    Property-test diagnostic for the pole approximation of the mode Green's
    function; dhat is the least-squares decay rate of the deviation itself.
    """
    if not np.isfinite(decay_rate) or amplitude <= 0.0:
        raise MissingAsymptotics(f"no admissible pole data for k = {k}")
    if green is None:
        if times is None:
            raise ValueError("need either a solved ModeGreen or a time grid")
        green = greens_mode(model, k, times)
    t_range = np.asarray(t_range, dtype=float)
    idx = [int(np.argmin(np.abs(green.times - t))) for t in t_range]
    tt = green.times[idx]
    dev = np.abs(green.values[idx] - amplitude * np.exp(-decay_rate * tt))
    dev = np.maximum(dev, 1e-300)
    slope = np.polyfit(tt, np.log(dev), 1)[0]
    dhat = max(0.0, -float(slope))
    return float(np.max(dev * np.exp(dhat * tt)))
