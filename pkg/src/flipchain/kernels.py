"""Renewal-equation ingredients: memory kernel, source term, transforms.

The memory kernel is p_{t,x} = 2 gamma (A2_{t,x})^2 with total mass one;
the source term is g_{t,x} = <((e^{-t M^T} X(0))^2_x)^2>.  Because both
are finite sums of decaying exponentials in t, every infinite-time
integral used here (total mass, first moment, integrated kernel, the
Laplace-Fourier transform and its lam-derivative) is evaluated in
closed form; brute-force time quadratures of the defining integrals
back these expressions in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import InteractionModel, PhasePoint, hamiltonian
from .propagator import (
    a_hat_table,
    momentum_mode_coefficients,
    pair_time_integral_dlam_grid,
    pair_time_integral_grid,
)

DETERMINISTIC = "deterministic"
POINT_MOMENTUM = "point_momentum"
SAMPLE_SET = "sample_set"


@dataclass(frozen=True)
class InitialCondition:
    """Initial data with finite second moments, held as weighted phase points."""

    kind: str
    samples: tuple
    weights: np.ndarray
    energy: float
    energy_density: float

    @property
    def L(self) -> int:
        return self.samples[0].L


def point_momentum(model: InteractionModel, amplitude: float | None = None) -> InitialCondition:
    """All energy on the momentum of site 0; default amplitude sqrt(2L)."""
    amp = float(np.sqrt(2.0 * model.L)) if amplitude is None else float(amplitude)
    q = np.zeros(model.L)
    p = np.zeros(model.L)
    p[model.lattice.index_of(0)] = amp
    X = PhasePoint(q, p)
    e = hamiltonian(model, X)
    return InitialCondition(POINT_MOMENTUM, (X,), np.array([1.0]), e, e / model.L)


def deterministic(model: InteractionModel, X: PhasePoint) -> InitialCondition:
    e = hamiltonian(model, X)
    return InitialCondition(DETERMINISTIC, (X.copy(),), np.array([1.0]), e, e / model.L)


def sample_set(
    model: InteractionModel, points, weights=None
) -> InitialCondition:
    """Finite mixture of deterministic phase points (stands in for a random state)."""
    pts = tuple(X.copy() for X in points)
    if weights is None:
        w = np.full(len(pts), 1.0 / len(pts))
    else:
        w = np.asarray(weights, dtype=float)
        if len(w) != len(pts) or np.any(w < 0):
            raise ValueError("weights must be nonnegative, one per sample")
        w = w / w.sum()
    e = float(sum(wi * hamiltonian(model, X) for wi, X in zip(w, pts)))
    return InitialCondition(SAMPLE_SET, pts, w, e, e / model.L)


def memory_kernel(model: InteractionModel, t: float) -> np.ndarray:
    """p_{t,x} = 2 gamma (A2_{t,x})^2, nonnegative and even in x."""
    from .propagator import a_field

    _, a2 = a_field(model, t)
    return 2.0 * model.gamma * a2**2


def rho(model: InteractionModel, t: float) -> float:
    """Total kernel mass at time t, via Parseval on the dual grid."""
    from .propagator import a_hat

    _, a2 = a_hat(model, float(t), model.lattice.dual)
    return float(2.0 * model.gamma * np.mean(a2**2))


def phat_table(model: InteractionModel, times: np.ndarray) -> np.ndarray:
    """Spatial transform rows phat_t(k) = F_x[p_t](k), shape (T, L), real."""
    lat = model.lattice
    _, a2 = a_hat_table(model, times)
    field = lat.idft(a2).real
    return lat.dft(2.0 * model.gamma * field**2).real


def ghat_table(model: InteractionModel, init: InitialCondition, times: np.ndarray) -> np.ndarray:
    """Spatial transform rows ghat(t, k) of the source term, shape (T, L)."""
    lat = model.lattice
    a1, a2 = a_hat_table(model, times)
    total = np.zeros((len(times), model.L))
    for w, X in zip(init.weights, init.samples):
        qhat = lat.dft(X.q)
        phat = lat.dft(X.p)
        y = lat.idft(a1 * qhat[None, :] + a2 * phat[None, :]).real
        total += w * y**2
    return lat.dft(total)


def source_term(model: InteractionModel, init: InitialCondition, t: float) -> np.ndarray:
    """g_{t,x}: weighted mean of squared evolved momenta."""
    from .propagator import evolve_replica

    out = np.zeros(model.L)
    for w, X in zip(init.weights, init.samples):
        out += w * evolve_replica(model, t, X).p ** 2
    return out


def _difference_index(model: InteractionModel) -> np.ndarray:
    """idx[i, j] = dual-grid index of k_j - k_i (wrapped)."""
    lat = model.lattice
    n = lat.sites
    return lat.index_of(n[None, :] - n[:, None])


def laplace_fourier_p_grid(model: InteractionModel, lam: complex) -> np.ndarray:
    """phat(lam, k) on the full dual grid via the convolution-theorem double sum."""
    _check_domain(model, lam)
    k = model.lattice.dual
    idx = _difference_index(model)
    w = pair_time_integral_grid(model, k[:, None], k[idx], lam)
    return 2.0 * model.gamma * w.sum(axis=0) / model.L


def laplace_fourier_p(model: InteractionModel, lam: complex, k: float) -> complex:
    """Laplace-Fourier transform of p at (lam, k), closed form.

    Analytic for Re lam > -delta0; |phat(eps + i alpha, k)| < 1 for eps > 0.
    """
    _check_domain(model, lam)
    kp = model.lattice.dual
    w = pair_time_integral_grid(model, kp, float(k) - kp, lam)
    return complex(2.0 * model.gamma * np.sum(w) / model.L)


def dlam_laplace_fourier_p(model: InteractionModel, lam: complex, k: float) -> complex:
    """d/dlam of the Laplace-Fourier transform at (lam, k)."""
    _check_domain(model, lam)
    kp = model.lattice.dual
    w = pair_time_integral_dlam_grid(model, kp, float(k) - kp, lam)
    return complex(2.0 * model.gamma * np.sum(w) / model.L)


def _check_domain(model: InteractionModel, lam: complex):
    if np.real(lam) <= -model.delta0 + 1e-9:
        raise DomainError(
            f"Re lam = {np.real(lam)} outside the analyticity half plane "
            f"Re lam > -delta0 = {-model.delta0}"
        )


def kernel_mass(model: InteractionModel) -> float:
    """int_0^inf dt sum_x p_{t,x} = phat(0, 0); equals 1 up to round-off."""
    return float(np.real(laplace_fourier_p(model, 0.0, 0.0)))


def kernel_time_moment(model: InteractionModel) -> float:
    """int_0^inf dt sum_x t p_{t,x} = -d/dlam phat(0, 0); equals 1/gamma."""
    return float(-np.real(dlam_laplace_fourier_p(model, 0.0, 0.0)))


def ptilde(model: InteractionModel) -> np.ndarray:
    """Integrated kernel ptilde_x = (gamma/2) int_0^inf p_{s,x} ds, closed form."""
    lat = model.lattice
    phat0 = laplace_fourier_p_grid(model, 0.0).real
    out = lat.idft(phat0).real * (model.gamma / 2.0)
    return np.maximum(out, 0.0)


def g_total_hat(model: InteractionModel, init: InitialCondition) -> np.ndarray:
    """ghat_tot(k) = F_x[int_0^inf g_{s,x} ds](k), closed form, shape (L,)."""
    idx = _difference_index(model)
    total = np.zeros(model.L, dtype=complex)
    for wgt, X in zip(init.weights, init.samples):
        c_p, c_m, mu_p, mu_m = momentum_mode_coefficients(model, X)
        cs = (c_p, c_m)
        mus = (mu_p, mu_m)
        acc = np.zeros(model.L, dtype=complex)
        for a in range(2):
            for b in range(2):
                acc += np.sum(
                    cs[a][:, None] * cs[b][idx] / (mus[a][:, None] + mus[b][idx]), axis=0
                )
        total += wgt * acc / model.L
    return total


def source_total(model: InteractionModel, init: InitialCondition) -> float:
    """int_0^inf dt sum_x g_{t,x}; equals E_L / gamma."""
    return float(np.real(g_total_hat(model, init)[model.lattice.index_of(0)]))


@dataclass
class KernelSet:
    """Tabulated kernel data on a uniform time grid."""

    times: np.ndarray
    p: np.ndarray       # (T, L)
    rho: np.ndarray     # (T,)
    ptilde: np.ndarray  # (L,)
    g: np.ndarray       # (T, L)
    tail_bound: float   # crude bound on the mass beyond the last grid time


def build_kernel_set(
    model: InteractionModel, init: InitialCondition, times: np.ndarray
) -> KernelSet:
    lat = model.lattice
    times = np.asarray(times, dtype=float)
    _, a2 = a_hat_table(model, times)
    field = lat.idft(a2).real
    p = 2.0 * model.gamma * field**2
    rho_t = p.sum(axis=1)
    a1, a2t = a_hat_table(model, times)
    total = np.zeros((len(times), model.L))
    for w, X in zip(init.weights, init.samples):
        qhat = lat.dft(X.q)
        phat = lat.dft(X.p)
        y = lat.idft(a1 * qhat[None, :] + a2t * phat[None, :]).real
        total += w * y**2
    tail = float(2.0 * model.gamma * np.exp(-2.0 * model.delta0 * times[-1]) / (2.0 * model.delta0))
    return KernelSet(times, p, rho_t, ptilde(model), total, tail)
