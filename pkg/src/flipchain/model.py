"""Interaction couplings, dispersion relation, and standing-assumption checks.

A model bundles the symmetric finite-range coupling Phi, the flip rate
gamma, and the lattice size L.  Validation covers three assumptions:
pinning (Phi_hat >= omega0^2 > 0 everywhere), noise domination
(gamma^2 > 4 max_k Phi_hat), and nondegeneracy of the harmonic forces,
quantified by the double integral I(k0) over time and the continuum
circle.  Failures are reported, not raised; downstream modules refuse
to run on an unvalidated model.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import PinningViolation, QuadratureFailure, ValidationRequired
from .lattice import CyclicLattice

NEAREST_NEIGHBOR = "nearest_neighbor"
NEXT_NEAREST_DEGENERATE = "next_nearest_degenerate"
CUSTOM = "custom"

# fine grid used for continuum extrema of Phi_hat
_SCAN_POINTS = 4097


@dataclass(frozen=True)
class InteractionModel:
    """Coupling Phi (half table Phi(0..r)), flip rate gamma, lattice size L."""

    kind: str
    gamma: float = 0.0
    L: int = 0
    phi: tuple = ()  # Phi(0), Phi(1), ..., Phi(r); Phi(-x) = Phi(x)

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("flip rate gamma must be > 0")
        if self.L < 1:
            raise ValueError("lattice size L must be >= 1")
        if not self.phi:
            raise ValueError("empty coupling table")

    @cached_property
    def lattice(self) -> CyclicLattice:
        return CyclicLattice(self.L)

    @property
    def range_radius(self) -> int:
        """Largest |x| with Phi(x) != 0 allowed by the stored table."""
        return len(self.phi) - 1

    def phi_field(self) -> np.ndarray:
        """Phi as a field over the model's lattice (site order)."""
        lat = self.lattice
        out = np.zeros(self.L)
        for x, v in enumerate(self.phi):
            if x == 0:
                out[lat.index_of(0)] += v
            else:
                out[lat.index_of(x)] += v
                out[lat.index_of(-x)] += v
        return out

    def phi_hat(self, k) -> np.ndarray:
        """Phi_hat(k) = Phi(0) + 2 sum_{x>0} Phi(x) cos(2 pi k x); real by symmetry."""
        k = np.asarray(k, dtype=float)
        out = np.full_like(k, self.phi[0], dtype=float)
        for x in range(1, len(self.phi)):
            out = out + 2.0 * self.phi[x] * np.cos(2.0 * np.pi * k * x)
        return out

    def omega(self, k) -> np.ndarray:
        """Dispersion omega(k) = sqrt(Phi_hat(k)); raises if pinning fails at k."""
        ph = self.phi_hat(k)
        if np.any(ph <= 0.0):
            bad = np.asarray(k)[np.atleast_1d(ph) <= 0.0]
            raise PinningViolation(f"Phi_hat <= 0 at k={np.atleast_1d(bad)[:3]}")
        return np.sqrt(ph)

    @cached_property
    def omega0(self) -> float:
        """min_k omega(k) over a fine continuum grid."""
        ph = self.phi_hat(np.linspace(0.0, 0.5, _SCAN_POINTS))
        m = float(ph.min())
        if m <= 0.0:
            raise PinningViolation(f"min Phi_hat = {m} <= 0")
        return float(np.sqrt(m))

    @cached_property
    def phi_hat_max(self) -> float:
        return float(self.phi_hat(np.linspace(0.0, 0.5, _SCAN_POINTS)).max())

    @property
    def delta0(self) -> float:
        """Spectral-gap scale omega0^2 / gamma."""
        return self.omega0**2 / self.gamma

    @property
    def noise_margin(self) -> float:
        return self.gamma**2 - 4.0 * self.phi_hat_max

    @property
    def noise_dominates(self) -> bool:
        return self.noise_margin > 0.0

    def require_noise_dominated(self):
        if not self.noise_dominates:
            raise ValidationRequired(
                f"gamma^2 = {self.gamma**2} must exceed 4 max Phi_hat = {4 * self.phi_hat_max}"
            )

    def h_field(self, q: np.ndarray) -> np.ndarray:
        """(Phi_L q)_x via circular convolution with the coupling."""
        lat = self.lattice
        qhat = lat.dft(q)
        return lat.idft(self.phi_hat(lat.dual) * qhat).real


def nearest_neighbor(omega0: float, gamma: float, L: int) -> InteractionModel:
    """Phi(0) = omega0^2 + 2, Phi(+-1) = -1, so omega(k)^2 = omega0^2 + 4 sin^2(pi k)."""
    return InteractionModel(NEAREST_NEIGHBOR, gamma=gamma, L=L, phi=(omega0**2 + 2.0, -1.0))


def next_nearest_degenerate(omega0: float, gamma: float, L: int) -> InteractionModel:
    """Coupling that skips neighbors: omega(k)^2 = omega0^2 + 4 sin^2(2 pi k)."""
    return InteractionModel(
        NEXT_NEAREST_DEGENERATE, gamma=gamma, L=L, phi=(omega0**2 + 2.0, 0.0, -1.0)
    )


def custom(phi: tuple, gamma: float, L: int) -> InteractionModel:
    """Finite-range coupling from its half table (Phi(0), Phi(1), ...)."""
    return InteractionModel(CUSTOM, gamma=gamma, L=L, phi=tuple(float(v) for v in phi))


def dispersion(model: InteractionModel, k) -> float:
    """omega(k) >= omega0 for a single wave number."""
    return float(model.omega(float(k)))


@dataclass
class QuadratureSpec:
    """Doubling composite-Simpson control for the k-integral of I(k0)."""

    panels: int = 2048
    rtol: float = 1e-9
    atol: float = 1e-12
    max_doublings: int = 8


@dataclass
class ValidationReport:
    pinning_ok: bool
    min_phi_hat: float
    noise_dominates_ok: bool
    noise_margin: float
    nondegeneracy_k0: np.ndarray
    nondegeneracy_profile: np.ndarray
    nondegeneracy_ok: bool
    floor: float

    @property
    def all_ok(self) -> bool:
        return self.pinning_ok and self.noise_dominates_ok and self.nondegeneracy_ok

    def as_dict(self) -> dict:
        return {
            "pinning_ok": self.pinning_ok,
            "min_phi_hat": self.min_phi_hat,
            "noise_dominates_ok": self.noise_dominates_ok,
            "noise_margin": self.noise_margin,
            "nondegeneracy_ok": self.nondegeneracy_ok,
            "nondegeneracy_floor": self.floor,
            "nondegeneracy_min": float(np.min(self.nondegeneracy_profile))
            if len(self.nondegeneracy_profile)
            else None,
            "nondegeneracy_k0": [float(v) for v in self.nondegeneracy_k0],
            "nondegeneracy_I": [float(v) for v in self.nondegeneracy_profile],
        }


def _nondeg_integrand(model: InteractionModel, k: np.ndarray, k0: np.ndarray) -> np.ndarray:
    """Time-integrated (Ahat2(k + k0/2) - Ahat2(k - k0/2))^2, closed form.

    Expanding the square gives pair integrals of Ahat2 Ahat2 over t,
    each a four-term rational expression in the mode rates.
    """
    from .propagator import pair_time_integral_grid

    kp = k[:, None] + k0[None, :] / 2.0
    km = k[:, None] - k0[None, :] / 2.0
    return (
        pair_time_integral_grid(model, kp, kp)
        - 2.0 * pair_time_integral_grid(model, kp, km)
        + pair_time_integral_grid(model, km, km)
    )


def nondegeneracy_integral(
    model: InteractionModel, k0, quadrature: QuadratureSpec | None = None
) -> float:
    """I(k0): double integral over t in (0, inf) and k in the continuum circle."""
    vals = nondegeneracy_profile(model, np.atleast_1d(np.asarray(k0, dtype=float)), quadrature)
    return float(vals[0]) if np.ndim(k0) == 0 else vals


def nondegeneracy_profile(
    model: InteractionModel, k0_grid: np.ndarray, quadrature: QuadratureSpec | None = None
) -> np.ndarray:
    """I(k0) on a grid of k0 values, shared Simpson panels over k."""
    model.require_noise_dominated()
    spec = quadrature or QuadratureSpec()
    k0_grid = np.asarray(k0_grid, dtype=float)

    def simpson(n_panels: int) -> np.ndarray:
        k = np.linspace(0.0, 1.0, n_panels + 1)
        w = np.ones(n_panels + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        f = _nondeg_integrand(model, k, k0_grid)
        return (w @ f) / (3.0 * n_panels)

    prev = simpson(spec.panels)
    n = spec.panels
    for _ in range(spec.max_doublings):
        n *= 2
        cur = simpson(n)
        if np.all(np.abs(cur - prev) <= spec.rtol * np.abs(cur) + spec.atol):
            return np.maximum(cur, 0.0)
        prev = cur
    raise QuadratureFailure(f"nondegeneracy k-quadrature not converged at {n} panels")


def validate(
    model: InteractionModel,
    eps: float = 0.02,
    floor: float = 1e-6,
    n_k0: int = 97,
    quadrature: QuadratureSpec | None = None,
) -> ValidationReport:
    """Populate a report for the three standing assumptions; never raises on failure."""
    fine = np.linspace(0.0, 0.5, _SCAN_POINTS)
    grid_min = float(model.phi_hat(fine).min())
    dual_min = float(model.phi_hat(model.lattice.dual).min())
    min_phi_hat = min(grid_min, dual_min)
    pinning_ok = min_phi_hat > 0.0

    margin = model.gamma**2 - 4.0 * float(model.phi_hat(fine).max())
    noise_ok = margin > 0.0

    if pinning_ok and noise_ok:
        k0_grid = np.linspace(eps, 0.5, n_k0)
        profile = nondegeneracy_profile(model, k0_grid, quadrature)
        nondeg_ok = bool(np.all(profile >= floor))
    else:
        k0_grid = np.array([])
        profile = np.array([])
        nondeg_ok = False

    return ValidationReport(
        pinning_ok=pinning_ok,
        min_phi_hat=min_phi_hat,
        noise_dominates_ok=noise_ok,
        noise_margin=margin,
        nondegeneracy_k0=k0_grid,
        nondegeneracy_profile=profile,
        nondegeneracy_ok=nondeg_ok,
        floor=floor,
    )


@dataclass
class PhasePoint:
    """Positions and momenta of the L particles (unit masses)."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.q.shape != self.p.shape or self.q.ndim != 1:
            raise ValueError("q and p must be 1-d arrays of equal length")

    @property
    def L(self) -> int:
        return len(self.q)

    def copy(self) -> "PhasePoint":
        return PhasePoint(self.q.copy(), self.p.copy())


def hamiltonian(model: InteractionModel, X: PhasePoint) -> float:
    """H_L(X) = (1/2) sum p^2 + (1/2) q^T Phi_L q."""
    if X.L != model.L:
        raise ValueError("phase point size does not match the model lattice")
    return float(0.5 * np.sum(X.p**2) + 0.5 * np.dot(X.q, model.h_field(X.q)))
