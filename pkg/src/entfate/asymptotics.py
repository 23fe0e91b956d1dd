"""Asymptotic sets of Lindblad dynamics and the six-class classification.

An asymptotic set is represented in one of three computable forms:

  * ``unique``        -- a single stationary state,
  * ``affine_family`` -- reference state plus traceless Hermitian kernel
                         directions (autonomous, degenerate kernel),
  * ``image_of_d``    -- the image of the state set under a converged
                         total propagator (non-autonomous).

Classification into the six classes is driven by the PT margin evaluated
over probe states of the set: a singleton is placed by the trichotomy
directly; a larger set is certified by deterministic extreme-point probes
(the margin is concave along mixtures, so extreme points attain the
minimum) plus random members.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .dynamics import (
    DEFAULT_OPTS,
    ConstantRate,
    ExponentialRate,
    Generator,
    SolverOptions,
    apply_map,
    liouvillian_matrix,
    make_generator,
    propagator_matrix,
    unvec,
    vec,
)
from .errors import (
    BadParams,
    Inconclusive,
    NoTraceOneElement,
    NotConverged,
    OscillatoryAsymptotics,
    UnsupportedDimension,
)
from .geometry import classify_region, min_pt_eigenvalue
from .operators import (
    EYE2,
    SMINUS,
    SZ,
    bell_vectors,
    single_qubit_probe_vectors,
    two_qubit_paulis,
)
from .states import QState, new_state

DEFAULT_CLASS_TOL = 1e-7
DEFAULT_KERNEL_TOL = 1e-9
DEFAULT_CONVERGENCE_TOL = 1e-8
DEFAULT_NONAUTONOMOUS_HORIZON = 60.0

CLASS4_MIN_C = np.log(3.0) + 0.5
CLASS6_MIN_C = 5.0


@dataclass(frozen=True)
class AsymptoticSet:
    kind: str  # unique | affine_family | image_of_d
    cardinality: str  # one | many
    dims: tuple[int, int]
    state: QState | None = None
    reference: QState | None = None
    basis: tuple[np.ndarray, ...] = ()
    map_matrix: np.ndarray | None = field(default=None, repr=False)
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TheoremClass:
    class_id: int
    cardinality: str
    min_margin: float
    max_margin: float
    min_probe: str
    max_probe: str
    tol: float
    probes: tuple[tuple[str, float], ...]


def _hs_inner(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.real(np.trace(a.conj().T @ b)))


def _gram_schmidt_hermitian(candidates, max_count, drop_tol=1e-8):
    basis: list[np.ndarray] = []
    for c in candidates:
        for b in basis:
            c = c - _hs_inner(b, c) * b
        nrm = np.sqrt(_hs_inner(c, c))
        if nrm > drop_tol:
            basis.append(c / nrm)
        if len(basis) == max_count:
            break
    return basis


def stationary_set_autonomous(g: Generator, tol: float = DEFAULT_KERNEL_TOL) -> AsymptoticSet:
    """Spectral kernel of the Liouvillian as the asymptotic set."""
    if not g.autonomous:
        raise ValueError("generator is not autonomous")
    d = g.dim
    lmat = liouvillian_matrix(g, 0.0)
    w, vl, vr = scipy.linalg.eig(lmat, left=True, right=True)
    kernel = np.abs(w) <= tol
    peripheral = (~kernel) & (np.abs(w.real) <= tol) & (np.abs(w.imag) > tol)
    if np.any(peripheral):
        raise OscillatoryAsymptotics(
            f"non-kernel peripheral eigenvalues present: {w[peripheral]}"
        )
    k = int(np.sum(kernel))
    if k == 0:
        raise NoTraceOneElement("Liouvillian has an empty kernel")
    vk = vr[:, kernel]
    wk = vl[:, kernel]
    # spectral projector onto the kernel (biorthogonalized)
    proj = vk @ np.linalg.inv(wk.conj().T @ vk) @ wk.conj().T
    ref = unvec(proj @ vec(np.eye(d) / d), d)
    ref = 0.5 * (ref + ref.conj().T)
    tr = np.trace(ref).real
    if abs(tr - 1.0) > 1e-8:
        raise NoTraceOneElement(f"projected reference has trace {tr:.6g}")
    eigs = np.linalg.eigvalsh(ref)
    if eigs[0] < -1e-8:
        raise NoTraceOneElement(f"projected reference min eigenvalue {eigs[0]:.3e}")
    if eigs[0] < 0.0:
        ww, vv = np.linalg.eigh(ref)
        ref = (vv * np.clip(ww, 0.0, None)) @ vv.conj().T
        ref /= np.trace(ref).real
    ref_state = new_state(ref, g.dims[0], g.dims[1])
    diagnostics = {
        "kernel_dim": k,
        "spectral_gap": float(min(-w.real[~kernel])) if k < w.size else 0.0,
        "peripheral_eigenvalues": [],
    }
    if k == 1:
        return AsymptoticSet(
            kind="unique",
            cardinality="one",
            dims=g.dims,
            state=ref_state,
            diagnostics=diagnostics,
        )
    herm_candidates = []
    for i in range(k):
        m = unvec(vk[:, i], d)
        herm_candidates.append(0.5 * (m + m.conj().T))
        herm_candidates.append((m - m.conj().T) / 2j)
    herm_basis = _gram_schmidt_hermitian(herm_candidates, k)
    if len(herm_basis) != k:
        raise NoTraceOneElement(
            f"kernel is not closed under conjugation: found {len(herm_basis)} "
            f"Hermitian directions for kernel dimension {k}"
        )
    traceless = _gram_schmidt_hermitian(
        [b - np.trace(b).real * ref_state.matrix for b in herm_basis], k - 1
    )
    return AsymptoticSet(
        kind="affine_family",
        cardinality="one" if not traceless else "many",
        dims=g.dims,
        reference=ref_state,
        basis=tuple(traceless),
        diagnostics=diagnostics,
    )


def asymptotic_set_nonautonomous(
    g: Generator,
    horizon: float = DEFAULT_NONAUTONOMOUS_HORIZON,
    tol: float = DEFAULT_CONVERGENCE_TOL,
    opts: SolverOptions = DEFAULT_OPTS,
    seed: int = 0,
) -> AsymptoticSet:
    """Converged total propagator; the asymptotic set is its image of D."""
    phi_half = propagator_matrix(g, 0.5 * horizon, opts)
    phi = propagator_matrix(g, horizon, opts)
    residual = float(np.max(np.abs(phi - phi_half)))
    if residual > tol:
        raise NotConverged(
            f"propagator residual {residual:.3e} > {tol:.1e} at horizon {horizon}; "
            "extend the horizon"
        )
    rng = np.random.default_rng(seed)
    images = [apply_map(phi, _random_hs_state(rng, g.dims), opts) for _ in range(20)]
    from .states import trace_distance

    spread = max(
        trace_distance(images[i], images[j])
        for i in range(len(images))
        for j in range(i + 1, len(images))
    )
    return AsymptoticSet(
        kind="image_of_d",
        cardinality="one" if spread <= 1e-8 else "many",
        dims=g.dims,
        map_matrix=phi,
        diagnostics={"convergence_residual": residual, "image_spread": spread},
    )


def _random_hs_state(rng: np.random.Generator, dims) -> QState:
    d = dims[0] * dims[1]
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = z @ z.conj().T
    return new_state(m / np.trace(m).real, dims[0], dims[1])


def _random_pure_state(rng: np.random.Generator, dims) -> QState:
    d = dims[0] * dims[1]
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v /= np.linalg.norm(v)
    return new_state(np.outer(v, v.conj()), dims[0], dims[1])


def representative(a: AsymptoticSet, opts: SolverOptions = DEFAULT_OPTS) -> QState:
    """Any member of the set (the canonical one for singletons)."""
    if a.kind == "unique":
        return a.state
    if a.kind == "affine_family":
        return a.reference
    d = a.dims[0] * a.dims[1]
    return apply_map(a.map_matrix, new_state(np.eye(d) / d, *a.dims), opts)


def _affine_member(a: AsymptoticSet, coeffs: np.ndarray) -> np.ndarray:
    m = a.reference.matrix.copy()
    for x, b in zip(coeffs, a.basis):
        m = m + x * b
    return m


def _boundary_scale(a: AsymptoticSet, direction: np.ndarray) -> float:
    """Largest t with reference + t*direction-combination still PSD."""
    nrm = np.linalg.norm(direction)
    if nrm == 0.0:
        return 0.0
    u = direction / nrm
    lo, hi = 0.0, 1.0
    while np.linalg.eigvalsh(_affine_member(a, hi * u))[0] >= 0.0:
        hi *= 2.0
        if hi > 1e6:
            break
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if np.linalg.eigvalsh(_affine_member(a, mid * u))[0] >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def _affine_member_clamped(a: AsymptoticSet, coeffs: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(coeffs)
    if r == 0.0:
        return a.reference.matrix
    tmax = _boundary_scale(a, coeffs)
    if r > tmax:
        coeffs = coeffs * (tmax / r)
    return _affine_member(a, coeffs)


def _margin_of_matrix(m: np.ndarray, dims) -> float:
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    if w[0] < 0.0:  # clamp tiny excursions from the bisection
        m = (v * np.clip(w, 0.0, None)) @ v.conj().T
        m /= np.trace(m).real
    return min_pt_eigenvalue(new_state(m, dims[0], dims[1]))


def sample_member(a: AsymptoticSet, rng: np.random.Generator,
                  opts: SolverOptions = DEFAULT_OPTS) -> QState:
    """Draw a random member of the asymptotic set."""
    if a.kind == "unique":
        return a.state
    if a.kind == "affine_family":
        if not a.basis:
            return a.reference
        u = rng.normal(size=len(a.basis))
        u /= np.linalg.norm(u)
        r = rng.uniform(0.0, _boundary_scale(a, u))
        m = _affine_member(a, r * u)
        w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
        m = (v * np.clip(w, 0.0, None)) @ v.conj().T
        return new_state(m / np.trace(m).real, *a.dims)
    return apply_map(a.map_matrix, _random_hs_state(rng, a.dims), opts)


def membership_residual(a: AsymptoticSet, s: QState) -> float:
    """How far a state is from being a member of the set."""
    from .states import trace_distance

    if a.kind == "unique":
        return trace_distance(a.state, s)
    if a.kind == "affine_family":
        delta = s.matrix - a.reference.matrix
        proj = np.zeros_like(delta)
        for b in a.basis:
            proj = proj + _hs_inner(b, delta) * b
        return float(np.linalg.norm(delta - proj))
    # image_of_d: least-squares preimage, projected back into D
    phi = a.map_matrix
    x, *_ = np.linalg.lstsq(phi, vec(s.matrix), rcond=None)
    d = s.dim
    pre = unvec(x, d)
    pre = 0.5 * (pre + pre.conj().T)
    w, v = np.linalg.eigh(pre)
    pre = (v * np.clip(w, 0.0, None)) @ v.conj().T
    tr = np.trace(pre).real
    if tr > 0.0:
        pre /= tr
    img = unvec(phi @ vec(pre), d)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(img - s.matrix))))


def _image_probes(a: AsymptoticSet, n_probes: int, seed: int,
                  opts: SolverOptions) -> list[tuple[str, QState]]:
    probes: list[tuple[str, QState]] = []
    singles = single_qubit_probe_vectors()
    labels = ["0", "1", "+", "+i"]
    for i, va in enumerate(singles):
        for j, vb in enumerate(singles):
            v = np.kron(va, vb)
            st = new_state(np.outer(v, v.conj()), *a.dims)
            probes.append((f"image(product |{labels[i]}{labels[j]}>)", st))
    for name, bv in zip(["Phi+", "Phi-", "Psi+", "Psi-"], bell_vectors()):
        probes.append((f"image(Bell {name})", new_state(np.outer(bv, bv.conj()), *a.dims)))
    rng = np.random.default_rng(seed)
    for i in range(n_probes):
        probes.append((f"image(random #{i})", _random_hs_state(rng, a.dims)))
    return [(label, apply_map(a.map_matrix, st, opts)) for label, st in probes]


def _affine_probes(a: AsymptoticSet, n_probes: int, seed: int) -> list[tuple[str, float]]:
    """(label, margin) pairs over the affine family, including extremal
    local searches with coefficients clamped to stay inside D."""
    out: list[tuple[str, float]] = [
        ("reference", _margin_of_matrix(a.reference.matrix, a.dims))
    ]
    k = len(a.basis)
    starts = [np.zeros(k)]
    for j in range(k):
        for sign in (+1.0, -1.0):
            e = np.zeros(k)
            e[j] = sign
            t = _boundary_scale(a, e)
            out.append((f"boundary({sign:+g}e{j})", _margin_of_matrix(_affine_member(a, t * e), a.dims)))
            starts.append(t * e)
    rng = np.random.default_rng(seed)
    for i in range(n_probes):
        u = rng.normal(size=k)
        u /= np.linalg.norm(u)
        r = rng.uniform(0.0, _boundary_scale(a, u))
        out.append((f"random #{i}", _margin_of_matrix(_affine_member(a, r * u), a.dims)))
    for goal, sign in (("min", +1.0), ("max", -1.0)):
        def objective(x):
            return sign * _margin_of_matrix(_affine_member_clamped(a, x), a.dims)

        best = None
        for x0 in starts:
            res = scipy.optimize.minimize(
                objective, x0, method="Nelder-Mead",
                options={"maxiter": 200, "xatol": 1e-9, "fatol": 1e-12},
            )
            if best is None or res.fun < best:
                best = res.fun
        out.append((f"local_search_{goal}", sign * best))
    return out


def classify_theorem_class(
    a: AsymptoticSet,
    tol: float = DEFAULT_CLASS_TOL,
    n_probes: int = 50,
    seed: int = 0,
    opts: SolverOptions = DEFAULT_OPTS,
) -> TheoremClass:
    """Assign the asymptotic set to one of the six classes."""
    if a.dims != (2, 2):
        raise UnsupportedDimension(f"classification needs 2x2 dims, got {a.dims}")
    if a.cardinality == "one":
        rep = representative(a, opts)
        region = classify_region(rep, tol)
        class_id = {"deep_separable": 1, "boundary": 2, "entangled": 3}[region.tag]
        return TheoremClass(
            class_id=class_id,
            cardinality="one",
            min_margin=region.margin,
            max_margin=region.margin,
            min_probe="representative",
            max_probe="representative",
            tol=tol,
            probes=(("representative", region.margin),),
        )
    if a.kind == "affine_family":
        margins = _affine_probes(a, n_probes, seed)
    elif a.kind == "image_of_d":
        margins = [
            (label, min_pt_eigenvalue(st))
            for label, st in _image_probes(a, n_probes, seed, opts)
        ]
    else:
        raise Inconclusive(f"cardinality 'many' with representation {a.kind!r}")
    values = np.array([m for _, m in margins])
    i_min, i_max = int(np.argmin(values)), int(np.argmax(values))
    mn, mx = float(values[i_min]), float(values[i_max])
    if mn > tol:
        class_id = 4
    elif mx < -tol:
        class_id = 6
    elif np.any(np.abs(values) <= tol) or (mn < -tol and mx > tol):
        class_id = 5
    else:
        hist = np.histogram(values, bins=10)
        raise Inconclusive(
            f"margins in [{mn:.3e}, {mx:.3e}] exclude classes 4/6 but no probe "
            f"certifies boundary contact within ±{tol:.1e}; histogram {hist}"
        )
    return TheoremClass(
        class_id=class_id,
        cardinality="many",
        min_margin=mn,
        max_margin=mx,
        min_probe=margins[i_min][0],
        max_probe=margins[i_max][0],
        tol=tol,
        probes=tuple(margins),
    )


def classify_generator(
    g: Generator,
    class_tol: float = DEFAULT_CLASS_TOL,
    kernel_tol: float = DEFAULT_KERNEL_TOL,
    horizon: float = DEFAULT_NONAUTONOMOUS_HORIZON,
    convergence_tol: float = DEFAULT_CONVERGENCE_TOL,
    n_probes: int = 50,
    seed: int = 0,
    opts: SolverOptions = DEFAULT_OPTS,
) -> tuple[AsymptoticSet, TheoremClass]:
    """Full pipeline: asymptotic set, then theorem class."""
    if g.autonomous:
        aset = stationary_set_autonomous(g, tol=kernel_tol)
    else:
        aset = asymptotic_set_nonautonomous(
            g, horizon=horizon, tol=convergence_tol, opts=opts, seed=seed
        )
    return aset, classify_theorem_class(aset, tol=class_tol, n_probes=n_probes, seed=seed, opts=opts)


def catalog_generator(class_id: int, gamma: float = 1.0, c: float | None = None) -> Generator:
    """A two-qubit generator certified to land in the requested class.

    1: depolarizing toward I/4 (all 15 non-identity Paulis, rate gamma/16)
    2: independent amplitude damping on both qubits
    3: pumping into the Bell state Phi+
    4: quenched depolarizing, rate c*exp(-t), c >= ln 3 + 0.5 (default 2)
    5: computational-basis dephasing on both qubits
    6: quenched Bell pumping, rate c*exp(-t), c >= 5 (default 10)
    """
    if gamma <= 0.0:
        raise BadParams(f"gamma must be positive, got {gamma}")
    dims = (2, 2)
    if class_id == 1:
        jumps = [(p, ConstantRate(gamma / 16.0)) for p in two_qubit_paulis()]
        return make_generator(dims, jumps=jumps)
    if class_id == 2:
        jumps = [
            (np.kron(SMINUS, EYE2), ConstantRate(gamma)),
            (np.kron(EYE2, SMINUS), ConstantRate(gamma)),
        ]
        return make_generator(dims, jumps=jumps)
    if class_id == 3:
        phi_p, *others = bell_vectors()
        jumps = [(np.outer(phi_p, b.conj()), ConstantRate(gamma)) for b in others]
        return make_generator(dims, jumps=jumps)
    if class_id == 4:
        c = 2.0 if c is None else float(c)
        if c < CLASS4_MIN_C:
            raise BadParams(
                f"class 4 needs c >= ln 3 + 0.5 ~= {CLASS4_MIN_C:.4f} to certify "
                f"a strictly interior image (Werner margin (1-3e^-c)/4); got {c}"
            )
        jumps = [(p, ExponentialRate(c / 16.0)) for p in two_qubit_paulis()]
        return make_generator(dims, jumps=jumps, autonomous=False)
    if class_id == 5:
        jumps = [
            (np.kron(SZ, EYE2), ConstantRate(gamma)),
            (np.kron(EYE2, SZ), ConstantRate(gamma)),
        ]
        return make_generator(dims, jumps=jumps)
    if class_id == 6:
        c = 10.0 if c is None else float(c)
        if c < CLASS6_MIN_C:
            raise BadParams(
                f"class 6 needs c >= {CLASS6_MIN_C} so every image stays strictly "
                f"NPT (population leakage e^-c); got {c}"
            )
        phi_p, *others = bell_vectors()
        jumps = [(np.outer(phi_p, b.conj()), ExponentialRate(c)) for b in others]
        return make_generator(dims, jumps=jumps, autonomous=False)
    raise BadParams(f"class_id must be 1..6, got {class_id}")
