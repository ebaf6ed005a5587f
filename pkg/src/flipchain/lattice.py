"""Cyclic lattice, its dual, and the discrete Fourier transform.

Conventions: sites of the size-L circle are the integers
{-(L-1)/2, ..., (L-1)/2} for odd L and {-L/2+1, ..., L/2} for even L.
Dual points are the rationals n/L with n running over the same integer
labels, so every k lies in (-1/2, 1/2].  The forward transform is
fhat(k) = sum_x f(x) exp(-i 2 pi k x) and the inverse carries the 1/L
factor.  Dual points are kept as integer numerators; they are converted
to floats only where a kernel actually needs k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def site_range(L: int) -> np.ndarray:
    """Integer site labels of the size-L circle, in increasing order."""
    if L < 1:
        raise ValueError(f"lattice size must be >= 1, got {L}")
    lo = -((L - 1) // 2)
    return np.arange(lo, lo + L)


def wrap(x, L: int):
    """Reduce x (integer or integer array) to its representative site label."""
    lo = -((L - 1) // 2)
    return (np.asarray(x) - lo) % L + lo if np.ndim(x) else int((x - lo) % L + lo)


@dataclass(frozen=True)
class CyclicLattice:
    """Size-L circle with site labels, dual numerators, and DFT helpers."""

    L: int
    sites: np.ndarray = field(init=False, repr=False, compare=False)
    _perm: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sites = site_range(self.L)
        object.__setattr__(self, "sites", sites)
        # position j of the standard-order (0..L-1) array holding label j mod L
        object.__setattr__(self, "_perm", sites % self.L)

    @property
    def dual_numerators(self) -> np.ndarray:
        """Integer numerators n of the dual points k = n/L (same labels as sites)."""
        return self.sites

    @property
    def dual(self) -> np.ndarray:
        """Dual wave numbers k = n/L as floats, in (-1/2, 1/2]."""
        return self.sites / self.L

    def wrap(self, x):
        return wrap(x, self.L)

    def index_of(self, x) -> np.ndarray:
        """Array index of site label x (after wrapping)."""
        lo = int(self.sites[0])
        return (np.asarray(x) - lo) % self.L

    def dft(self, f: np.ndarray) -> np.ndarray:
        """fhat(k) = sum_x f(x) e^{-i 2 pi k x} on the dual grid, site order in/out."""
        f = np.asarray(f)
        if f.shape[-1] != self.L:
            raise ValueError(f"field length {f.shape[-1]} != L={self.L}")
        a = np.empty_like(f, dtype=complex)
        a[..., self._perm] = f
        return np.fft.fft(a, axis=-1)[..., self._perm]

    def idft(self, g: np.ndarray) -> np.ndarray:
        """Inverse transform with the 1/L normalization, dual order in, site order out."""
        g = np.asarray(g)
        if g.shape[-1] != self.L:
            raise ValueError(f"field length {g.shape[-1]} != L={self.L}")
        b = np.empty_like(g, dtype=complex)
        b[..., self._perm] = g
        return np.fft.ifft(b, axis=-1)[..., self._perm]

    def dft_direct(self, f: np.ndarray) -> np.ndarray:
        """O(L^2) definition-level transform; pins the FFT path in tests."""
        f = np.asarray(f)
        phase = np.exp(-2j * np.pi * np.outer(self.sites, self.sites) / self.L)
        return phase @ f.astype(complex)

    def idft_direct(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g)
        phase = np.exp(2j * np.pi * np.outer(self.sites, self.sites) / self.L)
        return phase @ g.astype(complex) / self.L


def parseval_mismatch(lat: CyclicLattice, f: np.ndarray) -> float:
    """Relative gap between sum_x |f|^2 and (1/L) sum_k |fhat|^2."""
    lhs = float(np.sum(np.abs(f) ** 2))
    rhs = float(np.sum(np.abs(lat.dft(f)) ** 2)) / lat.L
    return abs(lhs - rhs) / max(lhs, 1e-300)
