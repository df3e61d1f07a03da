"""Ancilla-coupling matrices and their explicit joint-space dilations.

A coupling matrix C holds the amplitudes ``c[j, k]`` for finding the
ancilla in outcome k when the input was state j.  C is physically
realizable exactly when ``C C^H`` equals the ensemble's Gram matrix;
every feasible C arises as ``B V`` with ``B B^H = G`` and V
row-orthonormal, which is the search space of the optimizer module.
``build_dilation`` turns a feasible coupling into concrete coordinates:
state vectors, the joint unitary, and the post-measurement states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closed_form import binary_individual_errors, symmetric_p_quadratic
from .ensembles import Ensemble, gram_binary, gram_symmetric, spectral_factor
from .errors import (
    InfeasibleCouplingError,
    InvalidIsometryError,
    UndefinedConditionalError,
    ValidationError,
)

ROW_NORM_TOL = 1e-10
FEASIBILITY_TOL = 1e-8
ISOMETRY_TOL = 1e-8


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CouplingMatrix:
    """Amplitudes ``c[j, k]`` of ancilla outcome k given input state j.

    Rows are unit vectors (each input evolves unitarily); feasibility
    against the target ensemble is a separate check because closed-form
    constructions meet it at 1e-12 while optimizer outputs are only
    required to meet 1e-8.
    """

    c: np.ndarray
    ensemble: Ensemble

    def __post_init__(self):
        c = np.array(self.c, dtype=complex)
        object.__setattr__(self, "c", _frozen(c))
        n = self.ensemble.n
        if c.shape != (n, n):
            raise ValidationError(f"coupling must be {n}x{n}, got {c.shape}")
        row_norm_err = float(np.max(np.abs(np.sum(np.abs(c) ** 2, axis=1) - 1.0)))
        if row_norm_err > ROW_NORM_TOL:
            raise ValidationError(
                f"coupling rows must be unit vectors (residual {row_norm_err:.3e})"
            )

    @property
    def n(self) -> int:
        return self.ensemble.n


@dataclass(frozen=True)
class DilationModel:
    """Concrete realization of a coupling as a joint-space unitary.

    The system and ancilla each get dimension n.  Joint vectors use the
    system-major Kronecker layout: component ``m*n + i`` of ``x (x) y``
    is ``x[m]*y[i]``.  Row j of ``state_coords`` is a coordinate vector
    for state j (pairwise inner products reproduce the Gram matrix), the
    ancilla starts in basis slot ``ancilla_init_index``, and
    ``joint_unitary`` maps ``state_j (x) e_init`` to
    ``sum_k c[j, k] * (post_states[:, k] (x) e_k)``.
    """

    system_dim: int
    ancilla_dim: int
    state_coords: np.ndarray
    ancilla_init_index: int
    joint_unitary: np.ndarray
    post_states: np.ndarray
    coupling: CouplingMatrix

    def __post_init__(self):
        object.__setattr__(
            self, "state_coords", _frozen(np.array(self.state_coords, dtype=complex))
        )
        object.__setattr__(
            self, "joint_unitary", _frozen(np.array(self.joint_unitary, dtype=complex))
        )
        object.__setattr__(
            self, "post_states", _frozen(np.array(self.post_states, dtype=complex))
        )


def success_probability(coupling: CouplingMatrix) -> float:
    """Prior-weighted probability that the outcome names the input,
    ``sum_j eta_j * |c[j, j]|**2``."""
    diag = np.abs(np.diag(coupling.c))
    return float(np.dot(coupling.ensemble.priors, diag * diag))


def error_probability(coupling: CouplingMatrix) -> float:
    return 1.0 - success_probability(coupling)


def feasibility_residual(coupling: CouplingMatrix) -> float:
    """Max entrywise deviation of ``C C^H`` from the target Gram matrix."""
    c = coupling.c
    return float(np.max(np.abs(c @ c.conj().T - coupling.ensemble.gram)))


def binary_optimal_coupling(eta1: float, overlap: complex) -> CouplingMatrix:
    """Optimal two-state coupling built from the closed-form error rates.

    Amplitudes are ``[[sqrt(1-r1), sqrt(r1)], [sqrt(r2), sqrt(1-r2)]]``
    with the overlap's phase absorbed into the second row, so the
    feasibility law holds for complex overlaps too.
    """
    ensemble = gram_binary(overlap, eta1)
    sol = binary_individual_errors(eta1, overlap)
    c = np.array(
        [
            [np.sqrt(1.0 - sol.r1), np.sqrt(sol.r1)],
            [np.sqrt(sol.r2), np.sqrt(1.0 - sol.r2)],
        ],
        dtype=complex,
    )
    phi = np.angle(complex(overlap))
    if phi != 0.0:
        c[1] *= np.exp(-1j * phi)
    return CouplingMatrix(c, ensemble)


def symmetric_optimal_coupling(n: int, s: float) -> CouplingMatrix:
    """Optimal coupling for n states with common real overlap s.

    Diagonal ``sqrt(p)`` with p the larger quadratic root, constant
    off-diagonal t with ``t**2 = (1-p)/(n-1)``.  The off-diagonal sign
    follows the overlap constraint ``2*sqrt(p)*t + (n-2)*t**2 = s``, so
    negative overlaps get a negative t.
    """
    ensemble = gram_symmetric(n, s)
    p, _ = symmetric_p_quadratic(n, s)
    r = (1.0 - p) / (n - 1)
    t = (s - (n - 2) * r) / (2.0 * np.sqrt(p))
    c = np.full((n, n), t, dtype=complex)
    np.fill_diagonal(c, np.sqrt(p))
    return CouplingMatrix(c, ensemble)


def coupling_from_unitary(ensemble: Ensemble, v: np.ndarray) -> CouplingMatrix:
    """Feasible coupling ``C = B V`` from a row-orthonormal isometry V.

    B is the spectral factor of the Gram matrix (its principal square
    root when full rank), so ``C C^H = B V V^H B^H = G`` for any V with
    orthonormal rows.  V must be rank(G) x n.
    """
    v = np.asarray(v, dtype=complex)
    sf = spectral_factor(ensemble)
    if v.shape != (sf.rank, ensemble.n):
        raise InvalidIsometryError(
            f"isometry must be {sf.rank}x{ensemble.n} (rank x n), got {v.shape}"
        )
    ortho = float(np.max(np.abs(v @ v.conj().T - np.eye(sf.rank))))
    if ortho > ISOMETRY_TOL:
        raise InvalidIsometryError(f"rows are not orthonormal (residual {ortho:.3e})")
    return CouplingMatrix(sf.factor @ v, ensemble)


def _polar_orthonormal(m: np.ndarray) -> np.ndarray:
    """Closest matrix with orthonormal rows/columns (unitary polar factor)."""
    u, _, vh = np.linalg.svd(m, full_matrices=False)
    return u @ vh


def _complete_basis(q: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns q (dim x r) to a dim x dim unitary.

    Deterministic column-pivoted extension: repeatedly take the standard
    basis vector with the largest residual outside the current span and
    orthonormalize it (two projection passes for numerical stability).
    """
    dim, r = q.shape
    basis = np.zeros((dim, dim), dtype=complex)
    basis[:, :r] = q
    for count in range(r, dim):
        m = basis[:, :count]
        residual = 1.0 - np.sum(np.abs(m) ** 2, axis=1)
        pivot = int(np.argmax(residual))
        v = np.zeros(dim, dtype=complex)
        v[pivot] = 1.0
        v -= m @ (m.conj().T @ v)
        v -= m @ (m.conj().T @ v)
        nrm = np.linalg.norm(v)
        if nrm < 1e-8:  # cannot happen for orthonormal input columns
            raise ValidationError("basis completion failed; columns not orthonormal")
        basis[:, count] = v / nrm
    return basis


def build_dilation(coupling: CouplingMatrix) -> DilationModel:
    """Realize a feasible coupling as an explicit n^2 x n^2 joint unitary.

    State j gets coordinates ``S[j, :]`` (S the Gram square root), the
    ancilla starts at slot 0, and post-measurement system states are the
    standard basis.  The partial isometry sending each
    ``state_j (x) e_0`` to ``sum_k c[j, k] (e_k (x) e_k)`` is expressed
    in a shared orthonormal-basis pair so the mapping is exact at
    roundoff scale, then completed to a unitary by deterministic
    pivoted extension.

    Inner products here are conjugate-linear in the second slot:
    ``<x, y> = sum_i x_i conj(y_i)``, so coordinate rows satisfy
    ``coords @ coords^H = G``.  That convention is forced jointly by the
    feasibility law ``C C^H = G`` and the mapping above, since a unitary
    preserves pairwise inner products and the targets' pairwise products
    equal ``(C C^H)_jl``.
    """
    residual = feasibility_residual(coupling)
    if residual > FEASIBILITY_TOL:
        raise InfeasibleCouplingError(
            f"coupling does not reproduce the Gram matrix (residual {residual:.3e}); "
            "inner products are not preserved, so no unitary extension exists"
        )
    ensemble = coupling.ensemble
    n = ensemble.n
    lam, w = np.linalg.eigh(ensemble.gram)
    lam = np.clip(lam, 0.0, None)
    keep = lam > 1e-12 * lam.max()
    # support square root: eigenvalues below the rank cut contribute 0, so
    # rank-deficient Grams do not leak sqrt(ulp)-size mass along dropped modes
    sqrt_support = (w * np.sqrt(np.where(keep, lam, 0.0))) @ w.conj().T
    w_r = w[:, keep]
    thin = w_r * np.sqrt(lam[keep])  # n x r, thin = W_r sqrt(Lam_r)
    r = thin.shape[1]

    # row-orthonormal V with thin @ V ~= C (orthogonal Procrustes)
    v_iso = _polar_orthonormal(thin.conj().T @ coupling.c)

    dim = n * n
    # orthonormal input basis: conj(w_alpha) (x) e_0; state_j = S[j, :]
    # expands along these with coefficient thin[j, alpha]
    qa = np.zeros((dim, r), dtype=complex)
    for alpha in range(r):
        qa[:, alpha] = np.kron(w_r[:, alpha].conj(), _basis_vec(n, 0))
    # orthonormal output basis: sum_k V[alpha, k] (e_k (x) e_k)
    qb = np.zeros((dim, r), dtype=complex)
    for alpha in range(r):
        for k in range(n):
            qb[k * n + k, alpha] = v_iso[alpha, k]

    qa_full = _complete_basis(qa)
    qb_full = _complete_basis(qb)
    joint_unitary = qb_full @ qa_full.conj().T

    return DilationModel(
        system_dim=n,
        ancilla_dim=n,
        state_coords=sqrt_support,
        ancilla_init_index=0,
        joint_unitary=joint_unitary,
        post_states=np.eye(n, dtype=complex),
        coupling=coupling,
    )


def _basis_vec(dim: int, index: int) -> np.ndarray:
    e = np.zeros(dim, dtype=complex)
    e[index] = 1.0
    return e


def dilation_input_vector(dilation: DilationModel, input_j: int) -> np.ndarray:
    """Joint-space vector ``state_j (x) e_init`` for input j."""
    return np.kron(
        dilation.state_coords[input_j],
        _basis_vec(dilation.ancilla_dim, dilation.ancilla_init_index),
    )


def dilation_target_vector(dilation: DilationModel, input_j: int) -> np.ndarray:
    """Joint-space vector ``sum_k c[j, k] (post_k (x) e_k)`` for input j."""
    n = dilation.system_dim
    out = np.zeros(n * n, dtype=complex)
    for k in range(n):
        out += dilation.coupling.c[input_j, k] * np.kron(
            dilation.post_states[:, k], _basis_vec(n, k)
        )
    return out


def outcome_amplitudes(dilation: DilationModel, input_j: int) -> np.ndarray:
    """Amplitudes ``<post_k (x) e_k | U (state_j (x) e_init)>`` for all k.

    Their squared magnitudes must match ``|c[j, k]|**2``; this is the
    consistency check between the coupling and its dilation.
    """
    n = dilation.system_dim
    mapped = dilation.joint_unitary @ dilation_input_vector(dilation, input_j)
    amps = np.zeros(n, dtype=complex)
    for k in range(n):
        target = np.kron(dilation.post_states[:, k], _basis_vec(n, k))
        amps[k] = np.vdot(target, mapped)
    return amps


def post_measurement_state(
    dilation: DilationModel, input_j: int, outcome_k: int
) -> tuple[np.ndarray, float]:
    """System state and probability for ancilla outcome k on input j.

    In this shared-post-state construction the conditional state is
    ``post_states[:, k]`` for every input; the probability is
    ``|c[j, k]|**2``.  Outcomes with probability below 1e-24 have no
    defined conditional state.
    """
    n = dilation.system_dim
    if not (0 <= input_j < n and 0 <= outcome_k < n):
        raise ValidationError("state or outcome index out of range")
    prob = float(np.abs(dilation.coupling.c[input_j, outcome_k]) ** 2)
    if prob <= 1e-24:
        raise UndefinedConditionalError(
            f"outcome {outcome_k} has probability {prob:.3e} on input {input_j}; "
            "the conditional state is undefined"
        )
    return dilation.post_states[:, outcome_k].copy(), prob


def coupling_to_json(coupling: CouplingMatrix) -> dict:
    from ._serialize import matrix_obj

    return {"c": matrix_obj(coupling.c)}


def coupling_from_json(source: dict, ensemble: Ensemble) -> CouplingMatrix:
    from ._serialize import parse_matrix

    if not isinstance(source, dict) or "c" not in source:
        raise ValidationError('coupling JSON must be an object with a "c" matrix')
    return CouplingMatrix(parse_matrix(source["c"]), ensemble)
