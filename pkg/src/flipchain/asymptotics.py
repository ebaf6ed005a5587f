"""Diffusive asymptotics: pole data, diffusion constant, heat-equation predictor.

Per dual point the mode Green's function decays like a(k) e^{-t R(k)} where
R(k) solves phat(-R, k) = 1 inside the bracket [0, 0.9 delta0] and
1/a(k) = -d/dlam phat(lam, k) at lam = -R(k).  Modes without a sign change
on the bracket take the absent branch (a = 0).  The lattice symbol
Dhat(k) = 4 sum_y ptilde_y sin^2(pi k y) generates the lattice diffusion
semigroup, kappa_L = sum_y y^2 ptilde_y its continuum limit, and the
smearing kernels feed the observed/predicted profile comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BracketFailure, MissingAsymptotics, ValidationRequired
from .kernels import InitialCondition, dlam_laplace_fourier_p, g_total_hat, laplace_fourier_p
from .kernels import ptilde as integrated_kernel
from .model import InteractionModel, ValidationReport, validate

_BRACKET_FRACTION = 0.9
_validation_cache: dict = {}


def ensure_valid(model: InteractionModel, floor: float = 1e-6) -> ValidationReport:
    """Validate once per model; refuse models violating the assumptions."""
    key = (model, floor)
    rep = _validation_cache.get(key)
    if rep is None:
        rep = validate(model, floor=floor)
        _validation_cache[key] = rep
    if not rep.all_ok:
        raise ValidationRequired(
            "model fails validation: "
            f"pinning={rep.pinning_ok}, noise={rep.noise_dominates_ok}, "
            f"nondegeneracy={rep.nondegeneracy_ok}"
        )
    return rep


def decay_rate(model: InteractionModel, k: float) -> float:
    """Root R(k) of 1 - phat(-R, k) on [0, 0.9 delta0]; NaN when absent."""
    ensure_valid(model)
    return _decay_rate_unchecked(model, k)


def _decay_rate_unchecked(model: InteractionModel, k: float) -> float:
    if abs(float(k)) < 1e-15:
        return 0.0

    def f(r: float) -> float:
        return float(np.real(laplace_fourier_p(model, -r, float(k)))) - 1.0

    hi = _BRACKET_FRACTION * model.delta0
    f0 = f(0.0)
    fh = f(hi)
    if f0 > 1e-12:
        raise BracketFailure(f"phat(0, k) > 1 at k = {k}; kernel mass exceeds one")
    if fh < 0.0:
        return float("nan")
    root = brentq(f, 0.0, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    if abs(f(root)) > 1e-10:
        raise BracketFailure(f"root residual {f(root)} too large at k = {k}")
    return float(root)


def amplitude(model: InteractionModel, k: float, rate: float) -> float:
    """a(k) = 1 / int_0^inf s e^{sR} sum_y p_{s,y} cos(2 pi k y) ds > 0."""
    if not np.isfinite(rate):
        raise MissingAsymptotics(f"no decay rate at k = {k}")
    m = -np.real(dlam_laplace_fourier_p(model, -float(rate), float(k)))
    if m <= 0.0:
        raise BracketFailure(f"nonpositive amplitude integral at k = {k}")
    return float(1.0 / m)


def lattice_symbol(model: InteractionModel, k, ptilde_field: np.ndarray | None = None):
    """Dhat(k) = 4 sum_y ptilde_y sin^2(pi k y) >= 0, even, Dhat(0) = 0."""
    pt = integrated_kernel(model) if ptilde_field is None else ptilde_field
    k = np.asarray(k, dtype=float)
    y = model.lattice.sites
    s = np.sin(np.pi * np.multiply.outer(k, y))
    return 4.0 * (s**2) @ pt


def kappa(model: InteractionModel, ptilde_field: np.ndarray | None = None) -> float:
    """Diffusion constant kappa_L = sum_y y^2 ptilde_y > 0."""
    pt = integrated_kernel(model) if ptilde_field is None else ptilde_field
    return float(np.sum(model.lattice.sites**2 * pt))


def kappa_infinity(omega0: float, gamma: float) -> float:
    """Infinite-volume value 1/(gamma (2 + omega0^2 + omega0 sqrt(omega0^2 + 4)))."""
    return 1.0 / (gamma * (2.0 + omega0**2 + omega0 * math.sqrt(omega0**2 + 4.0)))


@dataclass
class AsymptoticData:
    """Per-mode pole data plus the diffusion quantities of one model."""

    numerators: np.ndarray   # dual numerators n (k = n/L)
    R: np.ndarray            # decay rates, NaN on the absent branch
    a: np.ndarray            # amplitudes, 0 on the absent branch
    Dhat: np.ndarray         # lattice symbol on the dual grid
    kappa: float
    epsilon0_effective: float  # largest |k| with an admissible root
    tau: np.ndarray | None = None  # initial diffusion profile, when built with an init

    def mode(self, L: int, k: float) -> int:
        n = int(round(k * L))
        idx = np.nonzero(self.numerators == n)[0]
        if len(idx) == 0:
            raise MissingAsymptotics(f"k = {k} is not a dual point")
        return int(idx[0])


def build_asymptotics(
    model: InteractionModel, init: InitialCondition | None = None
) -> AsymptoticData:
    """Root-find every dual mode; attach tau when an initial condition is given."""
    ensure_valid(model)
    lat = model.lattice
    n = lat.sites
    L = model.L
    R = np.full(L, np.nan)
    a = np.zeros(L)
    # R and a are even in k: solve n >= 0 and mirror
    for i, nn in enumerate(n):
        if nn < 0:
            continue
        r = _decay_rate_unchecked(model, nn / L)
        R[i] = r
        if np.isfinite(r):
            a[i] = amplitude(model, nn / L, r)
    for i, nn in enumerate(n):
        if nn < 0:
            j = lat.index_of(-nn)
            R[i] = R[j]
            a[i] = a[j]
    pt = integrated_kernel(model)
    dhat = lattice_symbol(model, lat.dual, pt)
    have = np.isfinite(R)
    eps0 = float(np.max(np.abs(n[have]) / L)) if np.any(have) else 0.0
    data = AsymptoticData(n.copy(), R, a, dhat, kappa(model, pt), eps0)
    if init is not None:
        data.tau = tau_profile(model, init, data)
    return data


def tau_profile(
    model: InteractionModel, init: InitialCondition, data: AsymptoticData
) -> np.ndarray:
    """tau_x: amplitude-weighted, time-integrated source; absent modes drop out."""
    ghat_tot = g_total_hat(model, init)
    tau_hat = np.where(np.isfinite(data.R), data.a, 0.0) * ghat_tot
    tau = model.lattice.idft(tau_hat)
    return tau.real


def lattice_diffusion(
    model: InteractionModel, tau: np.ndarray, t: float, data: AsymptoticData | None = None
) -> np.ndarray:
    """(e^{-tD} tau)_x applied spectrally; the mean (k = 0 mode) is conserved."""
    if t < 0:
        raise ValueError("time must be >= 0")
    lat = model.lattice
    dhat = lattice_symbol(model, lat.dual) if data is None else data.Dhat
    out = lat.idft(np.exp(-t * dhat) * lat.dft(np.asarray(tau, dtype=float)))
    return out.real


def diffusion_stencil(model: InteractionModel, tau: np.ndarray) -> np.ndarray:
    """(D tau)_x = sum_y ptilde_y (2 tau_x - tau_{x+y} - tau_{x-y}), real space."""
    pt = integrated_kernel(model)
    lat = model.lattice
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    for j, y in enumerate(lat.sites):
        if pt[j] == 0.0:
            continue
        plus = tau[lat.index_of(lat.sites + y)]
        minus = tau[lat.index_of(lat.sites - y)]
        out += pt[j] * (2.0 * tau - plus - minus)
    return out


# ---------------------------------------------------------------------------
# smearing kernels and the macroscopic (observed / predicted) profiles

_BUMP_PANELS = 4096


class GaussianKernel:
    """phi(x) = exp(-x^2 / 2 sigma^2) / (sigma sqrt(2 pi)); unit integral."""

    kind = "gaussian"

    def __init__(self, sigma: float):
        if sigma <= 0:
            raise ValueError("sigma must be > 0")
        self.sigma = float(sigma)

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * (x / self.sigma) ** 2) / (self.sigma * math.sqrt(2.0 * math.pi))

    def phi_hat(self, p):
        p = np.asarray(p, dtype=float)
        return np.exp(-2.0 * (np.pi * self.sigma * p) ** 2)

    def support_radius(self, tol: float = 1e-14) -> float:
        return self.sigma * math.sqrt(-2.0 * math.log(tol * self.sigma * 2.5066282746310002))


class BandlimitedBump:
    """phi with phhat(p) = exp(1 - 1/(1 - (2 p w)^2)) for |p| < 1/(2w), else 0.

    The transform vanishes exactly outside |p| < 1/2 (for w >= 1), and
    phhat(0) = 1 pins the integral of phi to one.  phi itself comes from a
    trapezoid inverse transform; the integrand vanishes to all orders at the
    support edge, so the rule converges superalgebraically.  Values on
    regular grids are cached.
    """

    kind = "bandlimited_bump"

    def __init__(self, width: float = 1.0):
        if width < 1.0:
            raise ValueError("width must be >= 1 to keep the support inside |p| < 1/2")
        self.width = float(width)
        half = 0.5 / self.width
        n = _BUMP_PANELS
        self._pgrid = np.linspace(-half, half, n + 1)
        self._pw = np.full(n + 1, 2.0 * half / n)
        self._pw[0] *= 0.5
        self._pw[-1] *= 0.5
        self._fhat = self.phi_hat(self._pgrid)
        self._cache: dict = {}
        self._radius: float | None = None

    def phi_hat(self, p):
        p = np.asarray(p, dtype=float)
        u = (2.0 * p * self.width) ** 2
        out = np.zeros_like(u)
        inside = u < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside]))
        return out

    def phi(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        chunk = 8192
        coeff = self._pw * self._fhat
        for i in range(0, len(x), chunk):
            xs = x[i : i + chunk]
            out[i : i + chunk] = np.cos(2.0 * np.pi * np.outer(xs, self._pgrid)) @ coeff
        return out if out.shape else float(out)

    def support_radius(self, tol: float = 1e-14) -> float:
        if self._radius is not None:
            return self._radius
        r = 64.0
        while r <= 4096.0:
            xs = np.linspace(r / 2.0, r, 129)
            if np.max(np.abs(self.phi(xs))) < tol:
                self._radius = r
                return r
            r *= 2.0
        self._radius = r
        return r

    def phi_on_lattice(self, denom: int) -> tuple[int, np.ndarray]:
        """phi on the grid {i/denom}, cached; returns (imax, values for i=0..imax)."""
        hit = self._cache.get(denom)
        if hit is None:
            imax = int(math.ceil(self.support_radius() * denom))
            vals = self.phi(np.arange(imax + 1) / denom)
            hit = (imax, vals)
            self._cache[denom] = hit
        return hit


def smear(profile: np.ndarray, kernel, L: int, xi: np.ndarray) -> np.ndarray:
    """Observed profile sum_{y in Z} phi(xi - y) T_{y mod lattice} on the xi grid."""
    profile = np.asarray(profile, dtype=float)
    if len(profile) != L:
        raise ValueError("profile length must equal L")
    xi = np.asarray(xi, dtype=float)
    radius = kernel.support_radius()
    lo = int(math.floor(xi.min() - radius))
    hi = int(math.ceil(xi.max() + radius))
    ys = np.arange(lo, hi + 1)
    from .lattice import wrap as _wrap

    site_idx = (_wrap(ys, L) - (-((L - 1) // 2))) % L
    vals = profile[site_idx]
    args = xi[:, None] - ys[None, :]
    if isinstance(kernel, BandlimitedBump):
        denom = _common_denominator(args)
        if denom is not None:
            imax, table = kernel.phi_on_lattice(denom)
            idx = np.abs(np.rint(args * denom).astype(np.int64))
            phi = np.where(idx <= imax, table[np.minimum(idx, imax)], 0.0)
            return phi @ vals
    return kernel.phi(args.ravel()).reshape(args.shape) @ vals


def _common_denominator(args: np.ndarray, max_denom: int = 512) -> int | None:
    """Smallest d <= max_denom with all args on the grid Z/d, or None."""
    for d in (1, 2, 4, 8, 16, 32, 64, 128, 256, 512):
        if d > max_denom:
            break
        if np.allclose(args * d, np.rint(args * d), atol=1e-9):
            return d
    return None


def uniform_xi_grid(L: int, points_per_site: int = 8) -> np.ndarray:
    """Measurement grid on the circle of circumference L."""
    M = L * points_per_site
    return np.arange(M) * (L / M)


def heat_predict(observed: np.ndarray, L: int, kappa_value: float, t: float) -> np.ndarray:
    """Evolve a profile on the circle by the heat semigroup, via Fourier series."""
    observed = np.asarray(observed, dtype=float)
    M = len(observed)
    if M < L:
        raise ValueError("need at least L samples on the circle")
    if t < 0:
        raise ValueError("time must be >= 0")
    n = np.fft.fftfreq(M, d=1.0 / M)
    factor = np.exp(-t * kappa_value * (2.0 * np.pi * n / L) ** 2)
    return np.fft.ifft(np.fft.fft(observed) * factor).real
