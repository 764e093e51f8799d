"""Hamiltonian phase-space flow for finite-level systems with bilinear control.

Per interval of constant control the flow is the exact exponential of the
linear Hamiltonian field, so norm and energy are conserved to rounding.
A fixed-step implicit-midpoint (Cayley) integrator is available for densely
modulated schedules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import (
    DimensionMismatchError,
    HermiticityError,
    ScheduleCoverageError,
)
from .geometry import HERMITICITY_TOL, Observable, PhasePoint, _readonly


def _as_hermitian(m) -> np.ndarray:
    if isinstance(m, Observable):
        return m.matrix
    m = np.asarray(m, dtype=complex)
    if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
        raise HermiticityError("Hamiltonian matrix is not Hermitian")
    return m


def real_block(u: np.ndarray) -> np.ndarray:
    """Real 2N x 2N representation of a complex-linear map on amplitudes."""
    return np.block([[u.real, -u.imag], [u.imag, u.real]])


@dataclass(frozen=True)
class ClassicalHamiltonian:
    """The classical Hamiltonian induced by a Hermitian matrix (hbar = 1)."""

    h_matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h_matrix", _readonly(_as_hermitian(self.h_matrix)))

    def value(self, x: PhasePoint) -> float:
        """Energy at a phase point; equals <psi|H|psi>/2 in this convention."""
        if x.dim != self.h_matrix.shape[0]:
            raise DimensionMismatchError("phase point and Hamiltonian dimensions differ")
        psi = x.q + 1j * x.p
        return 0.5 * float(np.real(np.vdot(psi, self.h_matrix @ psi)))


def hamiltonian_value(h: ClassicalHamiltonian, x: PhasePoint) -> float:
    return h.value(x)


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise-constant control amplitudes on a strictly increasing grid.

    ``grid`` has m+1 breakpoints; ``values`` has shape (m, r) with one row
    per interval and one column per channel.
    """

    grid: np.ndarray
    values: np.ndarray
    max_magnitude: np.ndarray | None = None

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        if g.ndim != 1 or g.size < 2 or np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing with >= 2 points")
        if v.shape[0] != g.size - 1:
            raise ValueError("values must have one row per grid interval")
        if not np.all(np.isfinite(v)):
            raise ValueError("control values must be finite")
        if self.max_magnitude is not None:
            b = np.asarray(self.max_magnitude, dtype=float)
            if np.any(np.abs(v) > b[None, :] + 1e-15):
                raise ValueError("control values exceed the per-channel bound")
            object.__setattr__(self, "max_magnitude", _readonly(b))
        object.__setattr__(self, "grid", _readonly(g))
        object.__setattr__(self, "values", _readonly(v))

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def t_start(self) -> float:
        return float(self.grid[0])

    @property
    def t_end(self) -> float:
        return float(self.grid[-1])

    def covers(self, t0: float, t1: float) -> bool:
        eps = 1e-12 * max(1.0, abs(t0), abs(t1))
        return self.grid[0] <= t0 + eps and t1 <= self.grid[-1] + eps

    def value_at(self, t: float) -> np.ndarray:
        k = int(np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, len(self.values) - 1))
        return self.values[k]

    def segments(self, t0: float, t1: float):
        """Yield (ta, tb, u) covering [t0, t1] with constant control per piece."""
        if not self.covers(t0, t1):
            raise ScheduleCoverageError(
                f"schedule [{self.grid[0]}, {self.grid[-1]}] does not cover [{t0}, {t1}]"
            )
        cuts = [t0] + [float(t) for t in self.grid if t0 < t < t1] + [t1]
        for ta, tb in zip(cuts[:-1], cuts[1:]):
            yield ta, tb, self.value_at(0.5 * (ta + tb))

    @classmethod
    def constant(cls, u, t0: float, t1: float) -> "ControlSchedule":
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return cls(np.array([t0, t1]), u[None, :])

    @classmethod
    def zero(cls, n_channels: int, t0: float, t1: float) -> "ControlSchedule":
        return cls.constant(np.zeros(n_channels), t0, t1)


@dataclass(frozen=True)
class ControlledHamiltonian:
    """Drift plus bilinearly controlled Hamiltonian H(t) = H0 + sum u_j(t) H_j."""

    drift: np.ndarray
    controls: tuple = ()
    schedule: ControlSchedule | None = None

    def __post_init__(self):
        h0 = _readonly(_as_hermitian(self.drift))
        hs = tuple(_readonly(_as_hermitian(h)) for h in self.controls)
        for h in hs:
            if h.shape != h0.shape:
                raise DimensionMismatchError("control matrices must match drift dimension")
        if hs and self.schedule is not None and self.schedule.n_channels != len(hs):
            raise DimensionMismatchError("schedule channel count must match controls")
        object.__setattr__(self, "drift", h0)
        object.__setattr__(self, "controls", hs)

    @property
    def dim(self) -> int:
        return self.drift.shape[0]

    def matrix_for(self, u: np.ndarray) -> np.ndarray:
        h = np.array(self.drift)
        for uj, hj in zip(np.atleast_1d(u), self.controls):
            h = h + uj * hj
        return h

    def _segments(self, t0: float, t1: float):
        if t1 < t0:
            raise ValueError("t1 must be >= t0")
        if t1 == t0:
            return
        if not self.controls or self.schedule is None:
            if self.controls:
                raise ScheduleCoverageError("controlled Hamiltonian has no schedule")
            yield t0, t1, np.zeros(0)
        else:
            yield from self.schedule.segments(t0, t1)

    @classmethod
    def drift_only(cls, h0) -> "ControlledHamiltonian":
        return cls(drift=h0)


def _segment_propagator(h: np.ndarray, dt: float, method: str, steps: int) -> np.ndarray:
    if method == "exact":
        return expm(-1j * h * dt)
    if method == "midpoint":
        # Cayley transform: unitary, second order, symplectic in phase coords
        n = h.shape[0]
        sub = dt / steps
        a = -0.5j * sub * h
        step = np.linalg.solve(np.eye(n) - a, np.eye(n) + a)
        return np.linalg.matrix_power(step, steps)
    raise ValueError(f"unknown integrator {method!r}")


def evolve_unitary(
    h: ControlledHamiltonian, t0: float, t1: float, method: str = "exact", steps: int = 64
) -> np.ndarray:
    """Complex N x N propagator of the Schroedinger flow over [t0, t1]."""
    u = np.eye(h.dim, dtype=complex)
    for ta, tb, uval in h._segments(t0, t1):
        u = _segment_propagator(h.matrix_for(uval), tb - ta, method, steps) @ u
    return u


def evolve(
    h: ControlledHamiltonian,
    x0: PhasePoint,
    t0: float,
    t1: float,
    method: str = "exact",
    steps: int = 64,
) -> PhasePoint:
    """Advance a phase point along Hamilton's equations from t0 to t1."""
    if x0.dim != h.dim:
        raise DimensionMismatchError("phase point and Hamiltonian dimensions differ")
    psi = (x0.q + 1j * x0.p).astype(complex)
    psi = evolve_unitary(h, t0, t1, method, steps) @ psi
    return PhasePoint(psi.real, psi.imag)


def evolve_block(
    h: ControlledHamiltonian, t0: float, t1: float, method: str = "exact", steps: int = 64
) -> np.ndarray:
    """Real 2N x 2N phase-space propagator over [t0, t1]."""
    return real_block(evolve_unitary(h, t0, t1, method, steps))


@dataclass(frozen=True)
class PhaseEnsemble:
    """Weighted finite collection of phase points (atomic phase-space density)."""

    weights: np.ndarray
    points: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        pts = tuple(self.points)
        if w.ndim != 1 or w.size != len(pts):
            raise ValueError("one weight per point required")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-10:
            raise ValueError("weights must sum to 1 within 1e-10")
        object.__setattr__(self, "weights", _readonly(w))
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


def transport_ensemble(
    h: ControlledHamiltonian, e: PhaseEnsemble, t0: float, t1: float, method: str = "exact"
) -> PhaseEnsemble:
    """Advance every member point; weights are Liouville-invariant."""
    block = evolve_block(h, t0, t1, method)
    moved = tuple(PhasePoint.from_flat(block @ x.flat()) for x in e.points)
    return PhaseEnsemble(e.weights, moved)
