"""Bipartite density operators, structural maps, and random-state ensembles.

Conventions (fixed once, used everywhere):
  * dense row-major complex storage,
  * product basis |i_A j_B> with j_B varying fastest,
  * column-stacking vectorization lives in ``dynamics``.

Randomness uses the counter-based Philox generator; per-sample streams
are derived by spawn-key splitting so ensembles are reproducible and
independent of worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotAState, UnsupportedEnsemble

VALIDATION_TOL = 1e-10

ENSEMBLE_KINDS = ("hilbert_schmidt_mixed", "haar_pure", "fixed_concurrence_pure")


@dataclass(frozen=True)
class QState:
    """A validated bipartite density operator on C^dim_a ⊗ C^dim_b."""

    dim_a: int
    dim_b: int
    matrix: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b

    @property
    def dims(self) -> tuple[int, int]:
        return (self.dim_a, self.dim_b)


@dataclass(frozen=True)
class EnsembleSpec:
    """Which random-state ensemble to draw from, and with which seed."""

    kind: str
    seed: int
    target_concurrence: float = 0.0

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise UnsupportedEnsemble(f"unknown ensemble kind {self.kind!r}")
        if not 0.0 <= self.target_concurrence <= 1.0:
            raise ValueError(
                f"target_concurrence must lie in [0, 1], got {self.target_concurrence}"
            )


def new_state(matrix, dim_a: int, dim_b: int, tol: float = VALIDATION_TOL) -> QState:
    """Validate a matrix as a density operator and wrap it as a QState.

    The matrix is symmetrized to (M + M†)/2 before the trace and PSD
    checks; a Hermiticity deviation beyond ``tol`` is rejected first.
    """
    m = np.asarray(matrix, dtype=complex)
    d = dim_a * dim_b
    if m.shape != (d, d):
        raise DimensionMismatch(
            f"matrix shape {m.shape} does not match dims {dim_a}x{dim_b} (side {d})"
        )
    herm_dev = np.max(np.abs(m - m.conj().T))
    if herm_dev > tol:
        raise NotAState(f"not Hermitian: max |M - M†| = {herm_dev:.3e} > {tol:.1e}")
    m = 0.5 * (m + m.conj().T)
    trace_dev = abs(np.trace(m).real - 1.0)
    if trace_dev > tol:
        raise NotAState(f"trace deviates from 1 by {trace_dev:.3e} > {tol:.1e}")
    min_eig = float(np.linalg.eigvalsh(m)[0])
    if min_eig < -tol:
        raise NotAState(f"not PSD: min eigenvalue {min_eig:.3e} < -{tol:.1e}")
    m.setflags(write=False)
    return QState(dim_a=dim_a, dim_b=dim_b, matrix=m)


def partial_transpose(s: QState, subsystem: str = "B") -> np.ndarray:
    """Transpose the indices of one tensor factor.

    Returns a Hermitian, unit-trace matrix (not necessarily PSD).
    Applying it twice is the identity.
    """
    da, db = s.dim_a, s.dim_b
    r = s.matrix.reshape(da, db, da, db)
    if subsystem == "A":
        r = r.transpose(2, 1, 0, 3)
    elif subsystem == "B":
        r = r.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return np.ascontiguousarray(r.reshape(da * db, da * db))


def partial_trace(s: QState, keep: str = "A") -> QState:
    """Reduced state on the kept subsystem."""
    da, db = s.dim_a, s.dim_b
    r = s.matrix.reshape(da, db, da, db)
    if keep == "A":
        red = np.einsum("ijkj->ik", r)
        return new_state(red, da, 1)
    if keep == "B":
        red = np.einsum("ijil->jl", r)
        return new_state(red, db, 1)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def trace_distance(a: QState, b: QState) -> float:
    """Half the trace norm of a - b."""
    if a.dims != b.dims:
        raise DimensionMismatch(f"dims {a.dims} vs {b.dims}")
    eigs = np.linalg.eigvalsh(a.matrix - b.matrix)
    return 0.5 * float(np.sum(np.abs(eigs)))


def split_seed(seed: int, index: int) -> int:
    """Derive a 64-bit child seed for sample ``index`` of a base seed."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def _haar_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def sample(spec: EnsembleSpec, dims: tuple[int, int] = (2, 2)) -> QState:
    """Draw one state from the ensemble. Pure function of (spec, dims)."""
    da, db = dims
    d = da * db
    rng = _rng(spec.seed)
    if spec.kind == "hilbert_schmidt_mixed":
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        m = g @ g.conj().T
        m /= np.trace(m).real
        return new_state(m, da, db)
    if spec.kind == "haar_pure":
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        v /= np.linalg.norm(v)
        return new_state(np.outer(v, v.conj()), da, db)
    if spec.kind == "fixed_concurrence_pure":
        if dims != (2, 2):
            raise UnsupportedEnsemble(
                f"fixed_concurrence_pure requires 2x2 dims, got {dims}"
            )
        # Schmidt form cos(t)|00> + sin(t)|11>, concurrence sin(2t),
        # then independent Haar-random local unitaries on each side.
        theta = 0.5 * np.arcsin(spec.target_concurrence)
        psi = np.zeros(4, dtype=complex)
        psi[0] = np.cos(theta)
        psi[3] = np.sin(theta)
        u = np.kron(_haar_unitary(rng, 2), _haar_unitary(rng, 2))
        v = u @ psi
        return new_state(np.outer(v, v.conj()), 2, 2)
    raise UnsupportedEnsemble(spec.kind)


def max_entangled(d: int = 2) -> QState:
    """Projector onto (1/sqrt(d)) sum_i |ii>."""
    v = np.zeros(d * d, dtype=complex)
    for i in range(d):
        v[i * d + i] = 1.0
    v /= np.sqrt(d)
    return new_state(np.outer(v, v.conj()), d, d)


def basis_state(i: int, j: int, dims: tuple[int, int] = (2, 2)) -> QState:
    """Computational-basis product projector |i j><i j|."""
    da, db = dims
    v = np.zeros(da * db, dtype=complex)
    v[i * db + j] = 1.0
    return new_state(np.outer(v, v.conj()), da, db)
