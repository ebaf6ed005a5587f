"""Closed-form local semigroup e^{-t M_gamma} in the noise-dominated regime.

Per mode k the generator is the 2x2 matrix [[0, omega^2], [-1, gamma]]
with real eigenvalues mu_pm = gamma/2 +- u, u = sqrt((gamma/2)^2 - omega^2).
Everything here is the overdamped branch (u > 0); critically damped or
oscillatory modes are rejected.  Hyperbolic forms keep the e^{-t mu+} -
e^{-t mu-} differences stable when u t is small.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMode, ValidationRequired
from .model import InteractionModel, PhasePoint

_DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class ModeSpectrum:
    """Rates of one overdamped mode: mu+ + mu- = gamma, mu+ mu- = omega^2."""

    k: float
    omega: float
    u: float
    mu_plus: float
    mu_minus: float


def _u_of(model: InteractionModel, k) -> np.ndarray:
    """u(k) = sqrt((gamma/2)^2 - omega(k)^2), guarded against degeneracy."""
    om2 = model.phi_hat(k)
    u2 = (model.gamma / 2.0) ** 2 - om2
    om = np.sqrt(np.maximum(om2, 0.0))
    if np.any(np.abs(om - model.gamma / 2.0) < _DEGENERACY_TOL):
        raise DegenerateMode("omega(k) = gamma/2 within 1e-9: critically damped mode")
    if np.any(u2 <= 0.0):
        raise ValidationRequired("oscillatory mode encountered; noise does not dominate")
    return np.sqrt(u2)


def mode_spectrum(model: InteractionModel, k: float) -> ModeSpectrum:
    u = float(_u_of(model, float(k)))
    om = float(model.omega(float(k)))
    return ModeSpectrum(
        k=float(k), omega=om, u=u, mu_plus=model.gamma / 2.0 + u, mu_minus=model.gamma / 2.0 - u
    )


def _sinhc(x: np.ndarray) -> np.ndarray:
    """sinh(x)/x, series for tiny arguments to dodge cancellation."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    out = np.sinh(safe) / safe
    return np.where(small, 1.0 + x * x / 6.0, out)


def a_hat(model: InteractionModel, t, k):
    """(Ahat1, Ahat2) at time t and wave number k (both may be arrays).

    Ahat1 = -(omega^2/u) e^{-t gamma/2} sinh(t u)
    Ahat2 = e^{-t gamma/2} (cosh(t u) - (gamma/2) sinh(t u)/u)
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be >= 0")
    u = _u_of(model, k)
    om2 = model.phi_hat(k)
    env = np.exp(-t * model.gamma / 2.0)
    tu = t * u
    shc = _sinhc(tu)
    a1 = -om2 * env * t * shc
    a2 = env * (np.cosh(tu) - (model.gamma / 2.0) * t * shc)
    return a1, a2


def propagator_matrix(model: InteractionModel, t: float, k: float) -> np.ndarray:
    """2x2 matrix e^{-t Mhat(k)}; column 2 carries (Ahat1, Ahat2)."""
    if t < 0:
        raise ValueError("time must be >= 0")
    u = float(_u_of(model, float(k)))
    om2 = float(model.phi_hat(float(k)))
    g2 = model.gamma / 2.0
    env = np.exp(-t * g2)
    ch = np.cosh(t * u)
    tsh = t * _sinhc(t * u)  # sinh(t u)/u
    return np.array(
        [
            [env * (ch + g2 * tsh), -om2 * env * tsh],
            [env * tsh, env * (ch - g2 * tsh)],
        ]
    )


def a_hat_table(model: InteractionModel, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(Ahat1, Ahat2) on the (times x dual grid) lattice, shape (T, L)."""
    k = model.lattice.dual
    t = np.asarray(times, dtype=float)[:, None]
    a1, a2 = a_hat(model, t, k[None, :])
    return a1, a2


def a_field(model: InteractionModel, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Real-space fields A1_{t,x}, A2_{t,x} (real, even in x)."""
    lat = model.lattice
    a1, a2 = a_hat(model, float(t), lat.dual)
    f1 = lat.idft(a1)
    f2 = lat.idft(a2)
    return f1.real, f2.real


def evolve_replica(model: InteractionModel, t: float, X: PhasePoint) -> PhasePoint:
    """Apply e^{-t M_gamma^T} to a phase point, mode by mode."""
    if X.L != model.L:
        raise ValueError("phase point size does not match the model lattice")
    lat = model.lattice
    qhat = lat.dft(X.q)
    phat = lat.dft(X.p)
    k = lat.dual
    u = _u_of(model, k)
    om2 = model.phi_hat(k)
    g2 = model.gamma / 2.0
    env = np.exp(-t * g2)
    ch = np.cosh(t * u)
    tsh = t * _sinhc(t * u)
    # transpose of the per-mode matrix: rows/columns swapped
    q_new = env * ((ch + g2 * tsh) * qhat + tsh * phat)
    p_new = env * (-om2 * tsh * qhat + (ch - g2 * tsh) * phat)
    return PhasePoint(lat.idft(q_new).real, lat.idft(p_new).real)


def momentum_mode_coefficients(model: InteractionModel, X: PhasePoint):
    """c_sigma(k) with (e^{-t M^T} X)^2-hat(k) = sum_sigma c_sigma(k) e^{-t mu_sigma(k)}.

    c_sigma = sigma (omega^2 qhat + mu_sigma phat) / (2u).  These drive the
    closed-form time integrals of the source term.
    """
    lat = model.lattice
    k = lat.dual
    u = _u_of(model, k)
    om2 = model.phi_hat(k)
    qhat = lat.dft(X.q)
    phat = lat.dft(X.p)
    mu_p = model.gamma / 2.0 + u
    mu_m = model.gamma / 2.0 - u
    c_plus = (om2 * qhat + mu_p * phat) / (2.0 * u)
    c_minus = -(om2 * qhat + mu_m * phat) / (2.0 * u)
    return c_plus, c_minus, mu_p, mu_m


def pair_time_integral_grid(model: InteractionModel, k1, k2, lam=0.0):
    """int_0^inf e^{-lam t} Ahat2_t(k1) Ahat2_t(k2) dt, elementwise closed form.

    Termwise integration of the two-exponential expansions gives
    sum_{s1,s2} s1 s2 mu_{s1}(k1) mu_{s2}(k2) / (4 u1 u2 (lam + mu_{s1} + mu_{s2})).
    Valid for Re lam > -2 delta0; callers guard the domain.
    """
    g2 = model.gamma / 2.0
    u1 = _u_of(model, k1)
    u2 = _u_of(model, k2)
    out = 0.0
    for s1 in (+1.0, -1.0):
        m1 = g2 + s1 * u1
        for s2 in (+1.0, -1.0):
            m2 = g2 + s2 * u2
            out = out + s1 * s2 * m1 * m2 / (lam + m1 + m2)
    return out / (4.0 * u1 * u2)


def pair_time_integral_dlam_grid(model: InteractionModel, k1, k2, lam=0.0):
    """d/dlam of pair_time_integral_grid (each term picks up -1/(lam+m1+m2))."""
    g2 = model.gamma / 2.0
    u1 = _u_of(model, k1)
    u2 = _u_of(model, k2)
    out = 0.0
    for s1 in (+1.0, -1.0):
        m1 = g2 + s1 * u1
        for s2 in (+1.0, -1.0):
            m2 = g2 + s2 * u2
            out = out - s1 * s2 * m1 * m2 / (lam + m1 + m2) ** 2
    return out / (4.0 * u1 * u2)


def sign_flip_time(model: InteractionModel) -> float:
    """t1 = (2 u0)^{-1} ln(2 gamma^2 / omega0^2); -Ahat2 > 0 for all k once t >= t1."""
    u0 = float(np.sqrt((model.gamma / 2.0) ** 2 - model.phi_hat_max))
    return float(np.log(2.0 * model.gamma**2 / model.omega0**2) / (2.0 * u0))
