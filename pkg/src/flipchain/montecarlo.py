"""Event-driven simulation of the velocity-flip process.

Flips arrive as a Poisson stream of total rate L gamma / 2; between
events the harmonic flow is applied exactly, mode by mode.  The hot loop
keeps the state in Fourier space (rotation is O(L), a flip is O(L) via
one inverse-transform dot product) and is JIT-compiled when numba is
available; a pure-Python twin with the identical operation order backs
it up and pins its output bit for bit.

Randomness comes from counter-based Philox streams keyed by
(seed, realization index), so ensembles are reproducible regardless of
how realizations are scheduled.  Ensemble reduction runs over fixed-size
chunks combined in index order for the same reason.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .kernels import DETERMINISTIC, POINT_MOMENTUM, SAMPLE_SET, InitialCondition
from .model import InteractionModel, PhasePoint, hamiltonian
from .renewal import TemperatureProfile

try:
    import numba

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

_CHUNK = 256


@dataclass
class SimulationRun:
    """One realization in flight: state, clock, flip counter, initial energy."""

    state: PhasePoint
    current_time: float = 0.0
    flip_count: int = 0
    energy0: float = 0.0
    seed: int | None = None


def new_run(model: InteractionModel, X: PhasePoint, seed: int | None = None) -> SimulationRun:
    return SimulationRun(X.copy(), 0.0, 0, hamiltonian(model, X), seed)


def harmonic_flow(model: InteractionModel, dt: float, X: PhasePoint) -> PhasePoint:
    """Exact flow of the harmonic part: per-mode rotation at frequency omega(k)."""
    if dt < 0:
        raise ValueError("time step must be >= 0")
    lat = model.lattice
    om = model.omega(lat.dual)
    qhat = lat.dft(X.q)
    phat = lat.dft(X.p)
    c = np.cos(om * dt)
    s = np.sin(om * dt)
    q_new = c * qhat + (s / om) * phat
    p_new = -om * s * qhat + c * phat
    return PhasePoint(lat.idft(q_new).real, lat.idft(p_new).real)


def step_to(
    model: InteractionModel, run: SimulationRun, t_target: float, rng: np.random.Generator
) -> SimulationRun:
    """Advance one run to t_target: exponential waits, uniform flip sites."""
    if t_target < run.current_time:
        raise ValueError("cannot step backwards in time")
    model.require_noise_dominated()
    rate = model.L * model.gamma / 2.0
    X = run.state.copy()
    t = run.current_time
    flips = run.flip_count
    while True:
        wait = rng.exponential(1.0 / rate)
        if t + wait > t_target:
            X = harmonic_flow(model, t_target - t, X)
            t = t_target
            break
        X = harmonic_flow(model, wait, X)
        t += wait
        site = int(rng.integers(model.L))
        X.p[site] = -X.p[site]
        flips += 1
    return replace(run, state=X, current_time=t, flip_count=flips)


# ---------------------------------------------------------------------------
# fast Fourier-state event loop

def _event_loop_py(qre, qim, pre, pim, omega, wre, wim, t, t_next, t_stop, waits, sites, pos):
    """Advance to t_stop consuming (sites, waits) draws from index pos.

    t_next is the absolute time of the next scheduled flip; carrying it
    across segment boundaries keeps the Poisson stream exact.  Returns
    (t, t_next, pos, flips, done).  Mirrors the numba kernel operation
    for operation so both paths produce identical floating-point results.
    """
    L = omega.shape[0]
    flips = 0
    n = waits.shape[0]
    while True:
        if t_next > t_stop:
            dt = t_stop - t
            for k in range(L):
                c = np.cos(omega[k] * dt)
                s = np.sin(omega[k] * dt)
                qr, qi = qre[k], qim[k]
                qre[k] = c * qr + (s / omega[k]) * pre[k]
                qim[k] = c * qi + (s / omega[k]) * pim[k]
                pre[k] = -omega[k] * s * qr + c * pre[k]
                pim[k] = -omega[k] * s * qi + c * pim[k]
            return t_stop, t_next, pos, flips, True
        if pos >= n:
            return t, t_next, pos, flips, False
        dt = t_next - t
        for k in range(L):
            c = np.cos(omega[k] * dt)
            s = np.sin(omega[k] * dt)
            qr, qi = qre[k], qim[k]
            qre[k] = c * qr + (s / omega[k]) * pre[k]
            qim[k] = c * qi + (s / omega[k]) * pim[k]
            pre[k] = -omega[k] * s * qr + c * pre[k]
            pim[k] = -omega[k] * s * qi + c * pim[k]
        t = t_next
        site = sites[pos]
        ps = 0.0
        for k in range(L):
            ps += pre[k] * wre[k, site] - pim[k] * wim[k, site]
        ps /= L
        for k in range(L):
            pre[k] -= 2.0 * ps * wre[k, site]
            pim[k] += 2.0 * ps * wim[k, site]
        flips += 1
        t_next = t + waits[pos]
        pos += 1


if _HAVE_NUMBA:
    _event_loop = numba.njit(cache=True, fastmath=False)(_event_loop_py)
else:  # pragma: no cover
    _event_loop = _event_loop_py


def _record_momenta(pre, pim, wre, wim):
    L = pre.shape[0]
    return (pre @ wre - pim @ wim) / L


class _FastState:
    """Fourier-space state plus the phase tables the event loop needs."""

    def __init__(self, model: InteractionModel):
        lat = model.lattice
        self.model = model
        self.omega = model.omega(lat.dual)
        # W[k, s] = exp(+i 2 pi n_k x_s / L) in site order for both axes
        phase = 2.0 * np.pi * np.outer(lat.sites, lat.sites) / model.L
        self.wre = np.cos(phase)
        self.wim = np.sin(phase)
        self.rate = model.L * model.gamma / 2.0
        self.lat = lat

    def load(self, X: PhasePoint):
        qhat = self.lat.dft(X.q)
        phat = self.lat.dft(X.p)
        return (
            np.ascontiguousarray(qhat.real),
            np.ascontiguousarray(qhat.imag),
            np.ascontiguousarray(phat.real),
            np.ascontiguousarray(phat.imag),
        )


def _simulate_momenta(
    fast: _FastState, X0: PhasePoint, times: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, int]:
    """Momenta p_x at the requested times for one realization."""
    qre, qim, pre, pim = fast.load(X0)
    out = np.empty((len(times), fast.model.L))
    t = 0.0
    t_next = float(rng.exponential(1.0 / fast.rate))
    flips = 0
    buf_w = np.empty(0)
    buf_s = np.empty(0, dtype=np.int64)
    pos = 0
    for i, tt in enumerate(np.asarray(times, dtype=float)):
        while True:
            if pos >= len(buf_w):
                expect = fast.rate * max(tt - t, 0.0)
                n = int(expect + 6.0 * np.sqrt(expect + 1.0) + 16.0)
                buf_w = rng.exponential(1.0 / fast.rate, size=n)
                buf_s = rng.integers(0, fast.model.L, size=n)
                pos = 0
            t, t_next, pos, f, done = _event_loop(
                qre, qim, pre, pim, fast.omega, fast.wre, fast.wim, t, t_next, tt,
                buf_w, buf_s, pos,
            )
            flips += f
            if done:
                break
        out[i] = _record_momenta(pre, pim, fast.wre, fast.wim)
    return out, flips


def _draw_initial(init: InitialCondition, rng: np.random.Generator) -> PhasePoint:
    if init.kind in (DETERMINISTIC, POINT_MOMENTUM) or len(init.samples) == 1:
        return init.samples[0]
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(init.weights), u, side="right"))
    return init.samples[min(idx, len(init.samples) - 1)]


def _chunk_stats(args):
    model, init, times, seed, r0, r1 = args
    fast = _FastState(model)
    L = model.L
    s1 = np.zeros((len(times), L))
    s2 = np.zeros((len(times), L))
    flips = 0
    for ridx in range(r0, r1):
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, ridx], dtype=np.uint64)))
        X0 = _draw_initial(init, rng)
        mom, f = _simulate_momenta(fast, X0, times, rng)
        sq = mom**2
        s1 += sq
        s2 += sq**2
        flips += f
    return s1, s2, flips


def estimate_temperature(
    model: InteractionModel,
    init: InitialCondition,
    times,
    n_realizations: int,
    seed: int,
    workers: int = 1,
) -> TemperatureProfile:
    """Ensemble estimate of T_{t,x} = <p_x(t)^2> with per-cell standard errors."""
    model.require_noise_dominated()
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or np.any(times < 0):
        raise ValueError("times must be nonnegative and sorted")
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    bounds = [(r0, min(r0 + _CHUNK, n_realizations)) for r0 in range(0, n_realizations, _CHUNK)]
    tasks = [(model, init, times, int(seed), r0, r1) for r0, r1 in bounds]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chunk_stats, tasks, chunksize=1))
    else:
        results = [_chunk_stats(t) for t in tasks]
    s1 = np.zeros((len(times), model.L))
    s2 = np.zeros((len(times), model.L))
    total_flips = 0
    for c1, c2, f in results:  # fixed chunk order: scheduling-independent reduction
        s1 += c1
        s2 += c2
        total_flips += f
    n = float(n_realizations)
    mean = s1 / n
    if n_realizations > 1:
        var = np.maximum(s2 - n * mean**2, 0.0) / (n - 1.0)
        stderr = np.sqrt(var / n)
    else:
        stderr = np.zeros_like(mean)
    prof = TemperatureProfile(times, mean, "montecarlo", stderr)
    prof.total_flips = total_flips  # type: ignore[attr-defined]
    return prof
