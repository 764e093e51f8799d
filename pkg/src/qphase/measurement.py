"""Projective and Gaussian generalized measurement as phase-space operations.

Selective projective measurement jumps the phase point onto the closest
point of the eigenspace in the G metric; non-selective measurement in a
nondegenerate basis produces an atomic phase-space density.  Continuous
observation integrates the double-commutator damping equation
``drho/dt = -i[H, rho] - (s/2)[L, [L, rho]]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import PhaseEnsemble
from .errors import (
    DegenerateBasisError,
    DimensionMismatchError,
    NormalizationError,
    ZeroProbabilityBranchError,
)
from .geometry import (
    Observable,
    PhasePoint,
    StateVector,
    _readonly,
    from_phase,
    g_form,
    to_phase,
)

_STATE_TOL = 1e-9
_ZERO_WEIGHT = 1e-14


def _require_normalized(x: PhasePoint):
    if abs(x.norm_sq() - 1.0) > _STATE_TOL:
        raise NormalizationError(f"phase point has squared norm {x.norm_sq()!r}, expected 1")


@dataclass(frozen=True)
class MeasurementOutcome:
    value: float
    probability: float
    post_state: PhasePoint
    branch: int = 0


def branch_probabilities(x: PhasePoint, a: Observable) -> np.ndarray:
    """Born weights ||P_a psi||^2 for every spectral branch."""
    if x.dim != a.dim:
        raise DimensionMismatchError("state and observable dimensions differ")
    psi = x.q + 1j * x.p
    return np.array([float(np.real(np.vdot(psi, proj @ psi))) for _, proj in a.spectrum])


def measure_selective(
    x: PhasePoint, a: Observable, rng: np.random.Generator
) -> MeasurementOutcome:
    """Sample a projective outcome with Born statistics and jump the state."""
    _require_normalized(x)
    probs = np.clip(branch_probabilities(x, a), 0.0, None)
    probs = probs / probs.sum()
    branch = int(rng.choice(len(probs), p=probs))
    value, proj = a.spectrum[branch]
    psi = proj @ (x.q + 1j * x.p)
    psi = psi / np.linalg.norm(psi)
    return MeasurementOutcome(
        value=value,
        probability=float(probs[branch]),
        post_state=PhasePoint(psi.real, psi.imag),
        branch=branch,
    )


def born_probability_via_metric(x: PhasePoint, a: Observable, eigenvalue: float) -> float:
    """Born weight computed from the G-metric distance to the projected state.

    Evaluates ``(1 - G(psi - psi_a, psi - psi_a)/2)^2`` where psi_a is the
    normalized projection onto the eigenspace; equals ||P_a psi||^2.
    """
    _require_normalized(x)
    proj = a.projector(eigenvalue)
    psi = x.q + 1j * x.p
    ppsi = proj @ psi
    nrm = np.linalg.norm(ppsi)
    if nrm <= 1e-15:
        raise ZeroProbabilityBranchError("metric formula undefined on a zero-weight branch")
    xa = PhasePoint((ppsi / nrm).real, (ppsi / nrm).imag)
    d = x - xa
    return (1.0 - 0.5 * g_form(d, d)) ** 2


def closest_point_check(
    x: PhasePoint,
    a: Observable,
    eigenvalue: float,
    trials: int,
    rng: np.random.Generator,
) -> bool:
    """Verify the projected state minimizes the G distance over the eigenspace.

    Draws ``trials`` Haar-random normalized states in the eigenspace and
    checks none comes closer to x than the normalized projection.
    """
    basis = a.eigenspace_basis(eigenvalue)
    psi = x.q + 1j * x.p
    ppsi = basis @ (basis.conj().T @ psi)
    nrm = np.linalg.norm(ppsi)
    if nrm <= 1e-15:
        raise ZeroProbabilityBranchError("closest point undefined on a zero-weight branch")
    xa = PhasePoint((ppsi / nrm).real, (ppsi / nrm).imag)
    d = x - xa
    dist_min = g_form(d, d)
    r = basis.shape[1]
    for _ in range(trials):
        c = rng.normal(size=r) + 1j * rng.normal(size=r)
        phi = basis @ (c / np.linalg.norm(c))
        dphi = x - PhasePoint(phi.real, phi.imag)
        if g_form(dphi, dphi) < dist_min - 1e-12:
            return False
    return True


def measure_nonselective(x: PhasePoint, basis: Observable) -> PhaseEnsemble:
    """Atomic phase-space density after an unrecorded basis measurement.

    Each nonzero branch contributes an atom at the component-normalized
    basis direction with weight q_k^2 + p_k^2 (in the measured basis);
    zero-weight branches are omitted.
    """
    _require_normalized(x)
    if x.dim != basis.dim:
        raise DimensionMismatchError("state and basis dimensions differ")
    if not basis.is_nondegenerate():
        raise DegenerateBasisError(
            "coordinate-wise non-selective measurement needs a nondegenerate basis"
        )
    psi = x.q + 1j * x.p
    weights = []
    points = []
    for vecs in basis._eigenvectors:
        v = vecs[:, 0]
        c = np.vdot(v, psi)
        w = abs(c) ** 2
        if w <= _ZERO_WEIGHT:
            continue
        post = (c / abs(c)) * v
        weights.append(w)
        points.append(PhasePoint(post.real, post.imag))
    return PhaseEnsemble(np.asarray(weights), tuple(points))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise ValueError("density matrix must be Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-10:
            raise ValueError("density matrix must have unit trace")
        if np.min(np.linalg.eigvalsh(m)) < -1e-10:
            raise ValueError("density matrix must be positive semidefinite")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_state(cls, psi: StateVector) -> "DensityMatrix":
        a = psi.normalized().amplitudes
        return cls(np.outer(a, a.conj()))


@dataclass(frozen=True)
class GaussianMeasurement:
    """Finite-resolution measurement of an observable over a time step dt.

    ``strength`` is the resolution s; the readout density for a pure state
    is a mixture of Gaussians at the eigenvalues with variance 1/(4 s dt).
    """

    observable: Observable
    strength: float
    dt: float

    def __post_init__(self):
        if self.strength <= 0 or self.dt <= 0:
            raise ValueError("strength and dt must be positive")

    @property
    def readout_variance(self) -> float:
        return 1.0 / (4.0 * self.strength * self.dt)

    def readout_density(self, x: PhasePoint, alpha) -> np.ndarray:
        """Probability density of the readout alpha for state x."""
        alpha = np.asarray(alpha, dtype=float)
        probs = branch_probabilities(x, self.observable)
        vals = np.asarray(self.observable.eigenvalues)
        var = self.readout_variance
        dens = np.zeros_like(alpha, dtype=float)
        for p, lam in zip(probs, vals):
            dens = dens + p * np.exp(-((alpha - lam) ** 2) / (2 * var)) / np.sqrt(
                2 * np.pi * var
            )
        return dens


def gaussian_apply(
    x: PhasePoint, m: GaussianMeasurement, rng: np.random.Generator
) -> tuple[float, PhasePoint]:
    """Selective generalized measurement: sample a readout, damp the state.

    The post state is exp(-s dt (Lambda - alpha)^2) psi renormalized; it is
    a projection only in the infinite-strength limit.
    """
    _require_normalized(x)
    probs = np.clip(branch_probabilities(x, m.observable), 0.0, None)
    probs = probs / probs.sum()
    branch = int(rng.choice(len(probs), p=probs))
    lam = m.observable.eigenvalues[branch]
    alpha = float(rng.normal(lam, np.sqrt(m.readout_variance)))
    psi = (x.q + 1j * x.p).astype(complex)
    post = np.zeros_like(psi)
    sdt = m.strength * m.dt
    for val, proj in m.observable.spectrum:
        post = post + np.exp(-sdt * (val - alpha) ** 2) * (proj @ psi)
    post = post / np.linalg.norm(post)
    return alpha, PhasePoint(post.real, post.imag)


def continuous_observe(
    rho0: DensityMatrix,
    h: Observable,
    m: GaussianMeasurement,
    t_final: float,
    steps: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the non-selective continuous-observation master equation.

    Fixed-step classical RK4 with trace renormalization per step.  Returns
    (times, rhos) with rhos of shape (steps + 1, N, N).
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    hm = h.matrix
    lam = m.observable.matrix
    if hm.shape != lam.shape or rho0.dim != hm.shape[0]:
        raise DimensionMismatchError("rho, H and Lambda dimensions differ")
    s = m.strength

    def rhs(rho):
        comm = hm @ rho - rho @ hm
        dbl = lam @ (lam @ rho - rho @ lam) - (lam @ rho - rho @ lam) @ lam
        return -1j * comm - 0.5 * s * dbl

    dt = t_final / steps
    times = np.linspace(0.0, t_final, steps + 1)
    rhos = np.empty((steps + 1,) + hm.shape, dtype=complex)
    rho = np.array(rho0.matrix)
    rhos[0] = rho
    for k in range(steps):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * dt * k1)
        k3 = rhs(rho + 0.5 * dt * k2)
        k4 = rhs(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = rho / np.trace(rho).real
        rhos[k + 1] = rho
    return times, rhos
