"""Hyperbolic coordinates inside the light cone and the attached geometry.

Coordinates ``(tau, z)`` cover ``|x| < t + 2K`` through
``t + 2K = tau*cosh|z|``, ``x = tau*(z/|z|)*sinh|z|``.  This module provides
the coordinate maps, the asymptotic direction ``omega(z)`` on the unit
hyperboloid, the flat-derivative decomposition coefficients ``eta``, the
induced metric ``g``/``G``, the boost-field coefficient matrices and their
inverses, the exponential weight ``chi``, and the lowest-order energy
quadrature used as a diagnostic.

All point functions are vectorized over leading axes of ``z`` (shape
``(..., 2)``).  Quantities with removable singularities on the cone axis
(``sinh|z|/|z|`` and friends) switch to 4-term Taylor series below
``|z| = 1e-4`` to avoid cancellation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_K",
    "DEFAULT_TAU0",
    "HyperboloidPoint",
    "HyperbolicCoords",
    "MetricData",
    "to_hyperbolic",
    "from_hyperbolic",
    "omega",
    "metric",
    "eta",
    "gamma_coeffs",
    "weight_chi",
    "energy_e0",
]

DEFAULT_K = 2.0
# initial hyperbola parameter, strictly greater than 1 + 2K
DEFAULT_TAU0 = 1.0 + 2.0 * DEFAULT_K + 0.5

_SERIES_RADIUS = 1e-4


def _series_switch(rho, direct, coeffs):
    """Evaluate an even function of rho: series sum(c_i rho^(2i)) near zero."""
    rho = np.asarray(rho, dtype=float)
    small = rho < _SERIES_RADIUS
    r2 = rho * rho
    series = np.zeros_like(rho)
    for c in reversed(coeffs):
        series = series * r2 + c
    with np.errstate(divide="ignore", invalid="ignore"):
        full = direct(np.where(small, 1.0, rho))
    return np.where(small, series, full)


def _sinhc(rho):
    """sinh(rho)/rho, smooth through rho = 0."""
    return _series_switch(
        rho, lambda r: np.sinh(r) / r, (1.0, 1 / 6, 1 / 120, 1 / 5040)
    )


def _inv_sinhc(rho):
    """rho/sinh(rho)."""
    return _series_switch(
        rho, lambda r: r / np.sinh(r), (1.0, -1 / 6, 7 / 360, -31 / 15120)
    )


def _metric_corr(rho):
    """1/rho**2 - 1/sinh(rho)**2."""
    return _series_switch(
        rho,
        lambda r: 1.0 / r**2 - 1.0 / np.sinh(r) ** 2,
        (1 / 3, -1 / 15, 2 / 189, -1 / 675),
    )


def _eta_corr(rho):
    """(cosh(rho) - rho/sinh(rho)) / rho**2."""
    return _series_switch(
        rho,
        lambda r: (np.cosh(r) - r / np.sinh(r)) / r**2,
        (2 / 3, 1 / 45, 13 / 3780, -1 / 5400),
    )


def _gamma_corr(rho):
    """(rho/tanh(rho) - 1) / rho**2."""
    return _series_switch(
        rho,
        lambda r: (r / np.tanh(r) - 1.0) / r**2,
        (1 / 3, -1 / 45, 2 / 945, -1 / 4725),
    )


def _gamma_corr_inv(rho):
    """(tanh(rho)/rho - 1) / rho**2."""
    return _series_switch(
        rho,
        lambda r: (np.tanh(r) / r - 1.0) / r**2,
        (-1 / 3, 2 / 15, -17 / 315, 62 / 2835),
    )


def _artanhc(s):
    """arctanh(s)/s."""
    return _series_switch(
        s, lambda t: np.arctanh(t) / t, (1.0, 1 / 3, 1 / 5, 1 / 7)
    )


def _rho(z):
    z = np.asarray(z, dtype=float)
    return np.sqrt(z[..., 0] ** 2 + z[..., 1] ** 2)


@dataclass(frozen=True)
class HyperboloidPoint:
    """Point on the unit hyperboloid w0**2 - w1**2 - w2**2 = 1, w0 >= 1.

    The residual tolerance scales with w0**2 since the defining combination
    cancels catastrophically for large boosts.
    """

    w0: float
    w1: float
    w2: float

    def __post_init__(self):
        if not (self.w0 >= 1.0):
            raise ValueError(f"w0 must be >= 1, got {self.w0}")
        residual = self.w0**2 - self.w1**2 - self.w2**2 - 1.0
        if abs(residual) > 1e-12 * max(1.0, self.w0**2):
            raise ValueError(f"point off the hyperboloid, residual {residual:.3e}")

    @classmethod
    def from_z(cls, z) -> "HyperboloidPoint":
        w = omega(np.asarray(z, dtype=float))
        return cls(float(w[0]), float(w[1]), float(w[2]))

    def __iter__(self):
        return iter((self.w0, self.w1, self.w2))


@dataclass(frozen=True)
class HyperbolicCoords:
    """Coordinates (tau, z) of points inside the light cone, with the K shift."""

    tau: np.ndarray
    z: np.ndarray
    K: float


@dataclass(frozen=True)
class MetricData:
    """Inverse metric g^{jk} and the volume factor G = det(g)^-1."""

    g: np.ndarray  # (..., 2, 2), positive semidefinite
    G: np.ndarray  # (...,)


def to_hyperbolic(t, x, K: float = DEFAULT_K) -> HyperbolicCoords:
    """Map (t, x) inside the light cone to hyperbolic coordinates.

    Requires ``|x| < t + 2K``; the axis ``x = 0`` maps to ``z = 0`` exactly.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    shifted = t + 2.0 * K
    absx = np.sqrt(x[..., 0] ** 2 + x[..., 1] ** 2)
    if np.any(absx >= shifted):
        raise ValueError("point outside the light cone: |x| >= t + 2K")
    tau = np.sqrt(shifted**2 - absx**2)
    s = absx / shifted
    z = x * (_artanhc(s) / shifted)[..., None]
    return HyperbolicCoords(tau=tau, z=z, K=K)


def from_hyperbolic(tau, z, K: float = DEFAULT_K):
    """Inverse coordinate map; z = 0 returns x = 0 exactly."""
    tau = np.asarray(tau, dtype=float)
    z = np.asarray(z, dtype=float)
    rho = _rho(z)
    t = tau * np.cosh(rho) - 2.0 * K
    x = tau[..., None] * z * _sinhc(rho)[..., None]
    return t, x


def omega(z) -> np.ndarray:
    """Asymptotic direction (cosh rho, -z*sinh(rho)/rho) on the hyperboloid."""
    z = np.asarray(z, dtype=float)
    rho = _rho(z)
    out = np.empty(z.shape[:-1] + (3,))
    out[..., 0] = np.cosh(rho)
    out[..., 1:] = -z * _sinhc(rho)[..., None]
    return out


def metric(z) -> MetricData:
    """Inverse metric g^{jk}(z) and volume factor G(z) = (sinh|z|/|z|)**2.

    The quadratic form satisfies
    ``zeta' g zeta = |zhat . zeta|**2 + |z ^ zeta|**2 / sinh(|z|)**2 >= 0``.
    """
    z = np.asarray(z, dtype=float)
    rho = _rho(z)
    corr = _metric_corr(rho)
    z1, z2 = z[..., 0], z[..., 1]
    g = np.empty(z.shape[:-1] + (2, 2))
    g[..., 0, 0] = 1.0 - corr * z2**2
    g[..., 0, 1] = corr * z1 * z2
    g[..., 1, 0] = g[..., 0, 1]
    g[..., 1, 1] = 1.0 - corr * z1**2
    return MetricData(g=g, G=_sinhc(rho) ** 2)


def eta(z) -> np.ndarray:
    """Coefficients eta[a, j] of the spatial part of flat derivatives.

    Flat derivatives decompose on (tau, z) as
    ``d_a = omega_a(z) d_tau + (1/tau) sum_j eta[a, j] d_{z_j}``.
    """
    z = np.asarray(z, dtype=float)
    rho = _rho(z)
    sc = _sinhc(rho)
    isc = _inv_sinhc(rho)
    corr = _eta_corr(rho)
    z1, z2 = z[..., 0], z[..., 1]
    out = np.empty(z.shape[:-1] + (3, 2))
    out[..., 0, 0] = -z1 * sc
    out[..., 0, 1] = -z2 * sc
    out[..., 1, 0] = isc + corr * z1**2
    out[..., 1, 1] = corr * z1 * z2
    out[..., 2, 0] = out[..., 1, 1]
    out[..., 2, 1] = isc + corr * z2**2
    return out


def gamma_coeffs(z) -> tuple[np.ndarray, np.ndarray]:
    """Boost-field coefficients c and their inverses ct.

    The boost fields are ``Gamma_j = sum_k c[j, k] d_{z_k}`` and conversely
    ``d_{z_k} = sum_l ct[k, l] Gamma_l``; the two matrices are mutually
    inverse, with eigenvalues {1, rho/tanh(rho)} and {1, tanh(rho)/rho} on
    the radial/angular eigenvectors.
    """
    z = np.asarray(z, dtype=float)
    rho = _rho(z)
    z1, z2 = z[..., 0], z[..., 1]
    perp = np.empty(z.shape[:-1] + (2, 2))
    perp[..., 0, 0] = z2**2
    perp[..., 0, 1] = -z1 * z2
    perp[..., 1, 0] = -z1 * z2
    perp[..., 1, 1] = z1**2
    eye = np.zeros_like(perp)
    eye[..., 0, 0] = 1.0
    eye[..., 1, 1] = 1.0
    c = eye + _gamma_corr(rho)[..., None, None] * perp
    ct = eye + _gamma_corr_inv(rho)[..., None, None] * perp
    return c, ct


def weight_chi(z, kappa: float) -> np.ndarray:
    """Exponential weight exp(-kappa * sqrt(1 + |z|**2)).

    Values below kappa = 6 are allowed but warned about: the reduction of
    the field equations needs at least that much decay.
    """
    if kappa < 6.0:
        warnings.warn(
            f"weight exponent kappa={kappa} < 6 weakens the reduction estimates",
            UserWarning,
            stacklevel=2,
        )
    z = np.asarray(z, dtype=float)
    bracket = np.sqrt(1.0 + z[..., 0] ** 2 + z[..., 1] ** 2)
    return np.exp(-kappa * bracket)


def energy_e0(v, dtau_v, m: float, tau: float, z1, z2) -> float:
    """Lowest-order energy of a scalar profile on a tensor z-grid.

    ``E0 = 1/2 * integral((dtau_v)**2 + tau**-2 * g^{jk} dj_v dk_v
    + m**2 v**2) * sqrt(G) dz`` with tensor-trapezoid quadrature; spatial
    derivatives are taken by centered differences on the grid.
    """
    v = np.asarray(v, dtype=float)
    dtau_v = np.asarray(dtau_v, dtype=float)
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(dtau_v))):
        raise ValueError("non-finite field values")
    if v.shape != (z1.size, z2.size) or dtau_v.shape != v.shape:
        raise ValueError("field shape must match the (z1, z2) tensor grid")
    Z1, Z2 = np.meshgrid(z1, z2, indexing="ij")
    zgrid = np.stack([Z1, Z2], axis=-1)
    md = metric(zgrid)
    d1, d2 = np.gradient(v, z1, z2)
    grad_term = (
        md.g[..., 0, 0] * d1 * d1
        + 2.0 * md.g[..., 0, 1] * d1 * d2
        + md.g[..., 1, 1] * d2 * d2
    )
    density = 0.5 * (dtau_v**2 + grad_term / tau**2 + m**2 * v**2) * np.sqrt(md.G)
    return float(np.trapezoid(np.trapezoid(density, z2, axis=1), z1))
