"""Reduced profile system along rays of the light cone.

Per ray ``z`` the slowly varying complex amplitudes ``(beta1, beta2)`` obey

    i d beta1 / d tau = chi1 Phi1(omega(z)) / tau * conj(beta1) beta2 + r1,
    i d beta2 / d tau = chi2 Phi2(omega(z)) / tau * beta1**2        + r2,

with ``chi_j = chi(z) / m_j``.  Rays are fully decoupled, so a state holds
arrays over an arbitrary sample set and the integrator advances all rays at
once.  Integration runs in ``s = log tau`` with fixed-step classical RK4:
the coupling becomes tau-free there, so accuracy is uniform over decades.

When the weighted coupling is hermitian (condition (b):
``Phi1*Phi2`` real positive), the quantity
``lambda1 |beta1|**2 + lambda2 |beta2|**2`` is conserved exactly and the
regularized square root ``B_eps`` is the natural Lyapunov functional.  With
``Phi1 = 0`` and no forcing, ``beta2`` grows like ``log(tau)`` with an
explicit closed form, which is the profile-level counterexample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hyperbolic_geometry import DEFAULT_TAU0, omega, weight_chi

__all__ = [
    "ForcingSpec",
    "ProfileState",
    "ProfileTrajectory",
    "default_z_samples",
    "lambdas",
    "rhs",
    "integrate",
    "lyapunov",
    "counterexample_closed_form",
    "hermitian_check",
]

DEFAULT_EPSILON = 0.01
DEFAULT_STEPS_PER_DECADE = 2000


@dataclass(frozen=True)
class ForcingSpec:
    """Exogenous remainder r_j(tau) for the profile system.

    Mode "zero" gives r1 = r2 = 0.  Mode "power" gives
    ``r_j = C * epsilon * exp(i phase_j) / tau**(2 - delta)`` with
    ``delta in (0, 1)``, the admissible remainder envelope.
    """

    mode: str = "zero"
    C: float = 0.0
    epsilon: float = 0.0
    delta: float = 0.5
    phase1: float = 0.0
    phase2: float = 0.0

    def __post_init__(self):
        if self.mode not in ("zero", "power"):
            raise ValueError(f"forcing mode must be 'zero' or 'power', got {self.mode!r}")
        if self.mode == "power" and not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")

    def evaluate(self, tau: float) -> tuple[complex, complex]:
        if self.mode == "zero":
            return (0.0 + 0.0j, 0.0 + 0.0j)
        envelope = self.C * self.epsilon / tau ** (2.0 - self.delta)
        return (
            envelope * np.exp(1j * self.phase1),
            envelope * np.exp(1j * self.phase2),
        )

    def envelope_integral(self, tau0: float) -> float:
        """integral_tau0^inf of the envelope, the total forcing budget."""
        if self.mode == "zero":
            return 0.0
        return self.C * self.epsilon * tau0 ** (self.delta - 1.0) / (1.0 - self.delta)


def lambdas(z, chi1, chi2, phi1, phi2):
    """Lyapunov weights of the conserved quadratic form.

    ``lambda1 = exp(-2<z>) sqrt(chi2 |Phi2| / (chi1 |Phi1|))`` and the
    reciprocal-weighted ``lambda2``, so ``lambda1 * lambda2 = exp(-4<z>)``.
    Requires both coefficient values nonzero on every sample.
    """
    z = np.asarray(z, dtype=float)
    a1 = np.abs(np.asarray(phi1, dtype=complex))
    a2 = np.abs(np.asarray(phi2, dtype=complex))
    if np.any(a1 == 0) or np.any(a2 == 0):
        raise ValueError("Lyapunov weights undefined where a resonance coefficient vanishes")
    bracket = np.sqrt(1.0 + z[..., 0] ** 2 + z[..., 1] ** 2)
    ratio = np.sqrt((chi2 * a2) / (chi1 * a1))
    lam1 = np.exp(-2.0 * bracket) * ratio
    lam2 = np.exp(-2.0 * bracket) / ratio
    return lam1, lam2


@dataclass
class ProfileState:
    """Amplitudes over a decoupled z-sample set with cached coefficients.

    ``lam1``/``lam2`` hold NaN on samples where a resonance coefficient
    vanishes (condition (a) or counterexample runs); the Lyapunov
    functional is only reported where they are defined.
    """

    tau: float
    z: np.ndarray  # (n, 2)
    beta1: np.ndarray  # (n,) complex
    beta2: np.ndarray  # (n,) complex
    chi1: np.ndarray  # (n,)
    chi2: np.ndarray  # (n,)
    phi1: np.ndarray  # (n,) complex
    phi2: np.ndarray  # (n,) complex
    lam1: np.ndarray = field(default=None)  # type: ignore[assignment]
    lam2: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        n = self.z.shape[0]
        self.beta1 = np.asarray(self.beta1, dtype=complex).copy()
        self.beta2 = np.asarray(self.beta2, dtype=complex).copy()
        for name in ("beta1", "beta2", "chi1", "chi2", "phi1", "phi2"):
            if np.asarray(getattr(self, name)).shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
        if self.lam1 is None or self.lam2 is None:
            ok = (np.abs(self.phi1) > 0) & (np.abs(self.phi2) > 0)
            lam1 = np.full(n, np.nan)
            lam2 = np.full(n, np.nan)
            if np.any(ok):
                lam1[ok], lam2[ok] = lambdas(
                    self.z[ok], self.chi1[ok], self.chi2[ok],
                    self.phi1[ok], self.phi2[ok],
                )
            self.lam1, self.lam2 = lam1, lam2

    @classmethod
    def from_polynomials(
        cls,
        z,
        beta1,
        beta2,
        phi1_poly,
        phi2_poly,
        m1: float,
        m2: float,
        kappa: float = 6.0,
        tau: float = DEFAULT_TAU0,
    ) -> "ProfileState":
        """Build a state from reduced resonance polynomials and the weight."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        w = omega(z)
        chi = weight_chi(z, kappa)
        phi1 = np.asarray(phi1_poly.evaluate(w[:, 0], w[:, 1], w[:, 2]), dtype=complex)
        phi2 = np.asarray(phi2_poly.evaluate(w[:, 0], w[:, 1], w[:, 2]), dtype=complex)
        n = z.shape[0]
        return cls(
            tau=tau,
            z=z,
            beta1=np.broadcast_to(np.asarray(beta1, dtype=complex), (n,)).copy(),
            beta2=np.broadcast_to(np.asarray(beta2, dtype=complex), (n,)).copy(),
            chi1=chi / m1,
            chi2=chi / m2,
            phi1=phi1,
            phi2=phi2,
        )

    @property
    def conserved(self) -> np.ndarray:
        """lambda1 |beta1|^2 + lambda2 |beta2|^2, NaN where weights are."""
        return self.lam1 * np.abs(self.beta1) ** 2 + self.lam2 * np.abs(self.beta2) ** 2


def default_z_samples() -> np.ndarray:
    """Tensor sample grid rho in {0, 0.5, 1, 2, 4} x theta in {0, pi/2, pi, 3pi/2}."""
    rhos = (0.0, 0.5, 1.0, 2.0, 4.0)
    thetas = (0.0, np.pi / 2, np.pi, 3 * np.pi / 2)
    out = [
        (rho * np.cos(th), rho * np.sin(th)) for rho in rhos for th in thetas
    ]
    return np.array(out)


def rhs(state: ProfileState, forcing: ForcingSpec, tau: float | None = None):
    """Time derivative of (beta1, beta2) in tau, per sample."""
    t = state.tau if tau is None else tau
    r1, r2 = forcing.evaluate(t)
    d1 = -1j * (state.chi1 * state.phi1 / t) * np.conj(state.beta1) * state.beta2 - 1j * r1
    d2 = -1j * (state.chi2 * state.phi2 / t) * state.beta1**2 - 1j * r2
    return d1, d2


@dataclass
class ProfileTrajectory:
    """Recorded trajectory with the derived diagnostics."""

    taus: np.ndarray  # (m,)
    beta1: np.ndarray  # (m, n)
    beta2: np.ndarray  # (m, n)
    lyapunov: np.ndarray  # (m, n), NaN where weights undefined
    z: np.ndarray  # (n, 2)
    conserved_drift: float  # max relative drift of the conserved form
    growth_coefficients: np.ndarray  # (n,) slope of |beta2| against log tau
    boundedness_sup: float  # sup over tau, z of exp(-2|z|) (|b1| + |b2|)
    steps: int
    steps_per_decade: float
    drift_flag: bool  # set when a requested drift tolerance was exceeded


def integrate(
    state: ProfileState,
    tau_end: float,
    forcing: ForcingSpec = ForcingSpec(),
    steps_per_decade: int = DEFAULT_STEPS_PER_DECADE,
    epsilon: float = DEFAULT_EPSILON,
    record_stride: int = 10,
    drift_tol: float | None = None,
) -> ProfileTrajectory:
    """Advance the profile system to tau_end with fixed-step RK4 in log tau.

    The state is advanced in place; the returned trajectory holds rows every
    ``record_stride`` steps (plus both endpoints) and the diagnostics.  If
    ``drift_tol`` is given and the conserved-form drift exceeds it, the
    trajectory is flagged rather than rejected.
    """
    if tau_end <= state.tau:
        raise ValueError("tau_end must exceed the current tau")
    s0, s1 = np.log(state.tau), np.log(tau_end)
    decades = (s1 - s0) / np.log(10.0)
    n_steps = max(1, int(np.ceil(decades * steps_per_decade)))
    h = (s1 - s0) / n_steps

    chi_phi1 = -1j * state.chi1 * state.phi1
    chi_phi2 = -1j * state.chi2 * state.phi2

    def ds(s, b1, b2):
        tau = np.exp(s)
        r1, r2 = forcing.evaluate(tau)
        d1 = chi_phi1 * np.conj(b1) * b2 - 1j * tau * r1
        d2 = chi_phi2 * b1**2 - 1j * tau * r2
        return d1, d2

    b1, b2 = state.beta1.copy(), state.beta2.copy()
    taus = [state.tau]
    rows1, rows2 = [b1.copy()], [b2.copy()]
    for k in range(n_steps):
        s = s0 + k * h
        a1, a2 = ds(s, b1, b2)
        k2a, k2b = ds(s + h / 2, b1 + h / 2 * a1, b2 + h / 2 * a2)
        k3a, k3b = ds(s + h / 2, b1 + h / 2 * k2a, b2 + h / 2 * k2b)
        k4a, k4b = ds(s + h, b1 + h * k3a, b2 + h * k3b)
        b1 = b1 + h / 6 * (a1 + 2 * k2a + 2 * k3a + k4a)
        b2 = b2 + h / 6 * (a2 + 2 * k2b + 2 * k3b + k4b)
        if (k + 1) % record_stride == 0 or k + 1 == n_steps:
            taus.append(np.exp(s0 + (k + 1) * h))
            rows1.append(b1.copy())
            rows2.append(b2.copy())

    state.beta1, state.beta2 = b1, b2
    state.tau = float(tau_end)

    taus_arr = np.array(taus)
    beta1_arr = np.array(rows1)
    beta2_arr = np.array(rows2)

    with np.errstate(invalid="ignore"):
        q = (
            state.lam1[None, :] * np.abs(beta1_arr) ** 2
            + state.lam2[None, :] * np.abs(beta2_arr) ** 2
        )
        lyap = np.sqrt(q + epsilon**2)
    defined = np.isfinite(q[0]) & (q[0] > 0)
    if np.any(defined):
        rel = np.abs(q[:, defined] - q[0, defined]) / q[0, defined]
        drift = float(np.max(rel))
    else:
        drift = float("nan")

    logt = np.log(taus_arr / taus_arr[0])
    design = np.stack([np.ones_like(logt), logt], axis=1)
    coef, *_ = np.linalg.lstsq(design, np.abs(beta2_arr), rcond=None)
    growth = coef[1]

    bracket2 = np.exp(-2.0 * np.linalg.norm(state.z, axis=-1))
    bound = float(
        np.max(bracket2[None, :] * (np.abs(beta1_arr) + np.abs(beta2_arr)))
    )

    return ProfileTrajectory(
        taus=taus_arr,
        beta1=beta1_arr,
        beta2=beta2_arr,
        lyapunov=lyap,
        z=state.z,
        conserved_drift=drift,
        growth_coefficients=growth,
        boundedness_sup=bound,
        steps=n_steps,
        steps_per_decade=n_steps / max(decades, 1e-300),
        drift_flag=bool(drift_tol is not None and not np.isnan(drift) and drift > drift_tol),
    )


def lyapunov(state: ProfileState, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """B_eps = sqrt(lambda1 |beta1|^2 + lambda2 |beta2|^2 + eps^2) per sample."""
    return np.sqrt(state.conserved + epsilon**2)


def counterexample_closed_form(tau, tau0: float, beta1_0, beta2_0, chi2_phi2):
    """Exact beta2 when Phi1 = 0 and r = 0: logarithmic secular growth.

    ``beta1`` is frozen at its initial value and
    ``beta2(tau) = beta2(tau0) - i chi2 Phi2 beta1(tau0)**2 log(tau/tau0)``.
    """
    tau = np.asarray(tau, dtype=float)
    return beta2_0 - 1j * chi2_phi2 * np.asarray(beta1_0) ** 2 * np.log(tau / tau0)


def hermitian_check(chi1, chi2, phi1, phi2, lam1, lam2) -> float:
    """Largest relative asymmetry |lam1 chi1 Phi1 - lam2 chi2 conj(Phi2)|.

    Zero (to round-off) exactly when the weighted coupling matrix of the
    system is hermitian, which is what condition (b) guarantees.
    """
    left = np.asarray(lam1 * chi1 * phi1, dtype=complex)
    right = np.asarray(lam2 * chi2 * np.conj(phi2), dtype=complex)
    scale = np.maximum(np.abs(left), np.abs(right))
    scale = np.where(scale == 0, 1.0, scale)
    return float(np.max(np.abs(left - right) / scale))
