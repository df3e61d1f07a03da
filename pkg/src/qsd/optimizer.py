"""Numerical maximization of the correct-identification probability.

Two routes to the same objective ``sum_j eta_j |c_jj|**2``:

* :func:`optimize_general` searches all feasible couplings ``C = B V``
  by Riemannian gradient ascent over row-orthonormal V, with a
  square-root-measurement warm start plus seeded random restarts.
* :func:`psk3_solve` / :func:`psk4_solve` exploit the circulant
  structure of phase-shift-keyed sets: the coupling is determined by a
  handful of real parameters tied together by the overlap constraints,
  so the problem reduces to polynomial root finding (plus, for n = 4,
  a one-dimensional outer maximization).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar, root

from .coupling import CouplingMatrix, _polar_orthonormal, success_probability
from .ensembles import Ensemble, gram_psk, spectral_factor
from .errors import InvalidIsometryError, NoSolutionError, ValidationError

logger = logging.getLogger(__name__)

MIN_STEP = 1e-18
# objective band (absolute, objective lies in [0, 1]) inside which a step
# counts as an objective tie and may be accepted on gradient-norm decrease
PLATEAU_BAND = 1e-14
ROOT_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the Riemannian ascent.  All fields have safe defaults."""

    max_iters: int = 2000
    grad_tol: float = 1e-10
    step_init: float = 0.1
    restarts: int = 8
    seed: int = 0
    rank_tol: float = 1e-12

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValidationError("max_iters must be positive")
        if self.grad_tol <= 0 or self.step_init <= 0 or self.rank_tol <= 0:
            raise ValidationError("grad_tol, step_init, rank_tol must be positive")
        if self.restarts < 1:
            raise ValidationError("restarts must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class PskParams:
    """Structured parameters of a circulant PSK coupling.

    The coupling's first row is ``(sqrt(p), u - i v, u + i v)`` for three
    states and ``(sqrt(p), u - i v, sqrt(r_prime) e^{i theta2}, u + i v)``
    for four, with ``u = sqrt(r) cos(theta1)``, ``v = sqrt(r) sin(theta1)``.
    ``r_prime`` and ``theta2`` are None for the ternary case.
    """

    p: float
    r: float
    theta1: float
    u: float
    v: float
    r_prime: float | None = None
    theta2: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0 and 0.0 <= self.r <= 1.0):
            raise ValidationError("p and r must be probabilities")
        if abs(self.u * self.u + self.v * self.v - self.r) > 1e-10:
            raise ValidationError("u**2 + v**2 must equal r")
        budget = self.p + 2.0 * self.r
        if self.r_prime is not None:
            if not 0.0 <= self.r_prime <= 1.0:
                raise ValidationError("r_prime must be a probability")
            budget += self.r_prime
        if abs(budget - 1.0) > 1e-10:
            raise ValidationError("row amplitudes must satisfy unit norm")


@dataclass(frozen=True)
class OptimizeResult:
    """Best coupling found, its error, and the winning restart's trace."""

    coupling: CouplingMatrix
    p_error: float
    objective_trace: tuple
    restarts_used: int
    converged: bool


def _objective(b: np.ndarray, priors: np.ndarray, v: np.ndarray) -> float:
    diag = np.einsum("ij,ji->i", b, v)
    return float(np.dot(priors, np.abs(diag) ** 2))


def _riemannian_grad(b: np.ndarray, priors: np.ndarray, v: np.ndarray) -> np.ndarray:
    diag = np.einsum("ij,ji->i", b, v)
    egrad = 2.0 * b.conj().T * (priors * diag)[None, :]
    x = egrad @ v.conj().T
    return egrad - 0.5 * (x + x.conj().T) @ v


def _retract(x: np.ndarray) -> np.ndarray:
    # polar factor of a near-isometry; eigh of the small r x r Gram is
    # cheap and stable here because x stays close to orthonormal rows
    lam, w = np.linalg.eigh(x @ x.conj().T)
    lam = np.clip(lam, 1e-30, None)
    inv_sqrt = (w / np.sqrt(lam)) @ w.conj().T
    return inv_sqrt @ x


def _random_isometry(rng: np.random.Generator, rank: int, n: int) -> np.ndarray:
    m = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    q, r_mat = np.linalg.qr(m)
    d = np.diag(r_mat)
    d = np.where(np.abs(d) < 1e-300, 1.0, d)
    q = q * (d / np.abs(d)).conj()
    return q.conj().T


def objective_gradient(ensemble: Ensemble, v: np.ndarray) -> np.ndarray:
    """Riemannian gradient of the success probability at isometry v.

    The tangent space at v consists of matrices d with
    ``d v^H + v d^H = 0``; the returned matrix is the projection of the
    (Wirtinger) Euclidean gradient onto it.  Zero at stationary points.
    """
    v = np.asarray(v, dtype=complex)
    sf = spectral_factor(ensemble)
    if v.shape != (sf.rank, ensemble.n):
        raise InvalidIsometryError(
            f"isometry must be {sf.rank}x{ensemble.n}, got {v.shape}"
        )
    ortho = float(np.max(np.abs(v @ v.conj().T - np.eye(sf.rank))))
    if ortho > 1e-8:
        raise InvalidIsometryError(f"rows are not orthonormal (residual {ortho:.3e})")
    return _riemannian_grad(sf.factor, ensemble.priors, v)


def _ascend(b, priors, v, config):
    """Riemannian ascent from one starting isometry.

    Each iteration first tries the full retraction of the Euclidean
    gradient direction, i.e. the polar factor of the gradient itself.
    That candidate maximizes the linearized objective over the whole
    manifold and never decreases the true objective (the objective is
    convex in v), so it replaces dozens of backtracking line searches
    with a single monotone fixed-point step whose fixed points are
    exactly the stationary points.  Backtracking along the Riemannian
    gradient remains as a fallback.

    Near the optimum the objective flattens out in float arithmetic
    long before the gradient norm reaches grad_tol, so candidates whose
    objective sits within an ulp-scale band of the current value are
    still accepted when they strictly shrink the gradient norm.  Those
    plateau moves are not recorded in the trace; the trace keeps only
    strict objective improvements and is therefore increasing.
    """
    f = _objective(b, priors, v)
    trace = [f]
    converged = False
    for _ in range(config.max_iters):
        grad = _riemannian_grad(b, priors, v)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= config.grad_tol:
            converged = True
            break
        diag = np.einsum("ij,ji->i", b, v)
        egrad = b.conj().T * (priors * diag)[None, :]
        v_mm = _polar_orthonormal(egrad)
        f_mm = _objective(b, priors, v_mm)
        if f_mm > f:
            v, f = v_mm, f_mm
            if f > trace[-1]:
                trace.append(f)
            continue
        if f_mm >= f - PLATEAU_BAND:
            g_mm = float(np.linalg.norm(_riemannian_grad(b, priors, v_mm)))
            if g_mm < gnorm:
                v, f = v_mm, f_mm
                continue
        step = config.step_init
        improved = False
        while step > MIN_STEP:
            v_new = _retract(v + step * grad)
            f_new = _objective(b, priors, v_new)
            if f_new > f:
                v, f = v_new, f_new
                if f > trace[-1]:
                    trace.append(f)
                improved = True
                break
            step *= 0.5
        if not improved:
            # no representable uphill step and no gradient contraction left
            converged = gnorm <= config.grad_tol
            break
    return f, v, trace, converged


def optimize_general(ensemble: Ensemble, config: SolverConfig | None = None) -> OptimizeResult:
    """Gradient ascent over all feasible couplings of an ensemble.

    Restart 0 starts from the square-root-measurement coupling (already
    optimal on symmetric and PSK sets); the remaining restarts use
    seeded random isometries.  The best restart wins, ties broken by
    lowest index.  Restarts stop early once the objective hits the
    global ceiling of 1.  A best-effort result with ``converged=False``
    is returned when no restart meets the gradient tolerance.
    """
    config = config or SolverConfig()
    sf = spectral_factor(ensemble, config.rank_tol)
    b = sf.factor
    priors = ensemble.priors
    n, rank = ensemble.n, sf.rank

    best = None
    restarts_used = 0
    for i in range(config.restarts):
        if i == 0:
            v0 = _polar_orthonormal(b.conj().T @ sf.sqrt)
        else:
            rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(i,)))
            v0 = _random_isometry(rng, rank, n)
        f, v, trace, converged = _ascend(b, priors, v0, config)
        restarts_used += 1
        if best is None or f > best[0] + 1e-12:
            best = (f, v, trace, converged)
        if best[0] >= 1.0 - 1e-14 and best[3]:
            break

    f, v, trace, converged = best
    coupling = CouplingMatrix(b @ v, ensemble)
    return OptimizeResult(
        coupling=coupling,
        p_error=1.0 - success_probability(coupling),
        objective_trace=tuple(trace),
        restarts_used=restarts_used,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# structured PSK solvers


def _accept_root(sol, residual_fn) -> np.ndarray | None:
    if not sol.success:
        return None
    if max(abs(f) for f in residual_fn(sol.x)) > ROOT_RESIDUAL_TOL:
        return None
    return sol.x


def _psk3_seeds():
    seeds = [(1.0, 0.0, 0.0), (1.0 / math.sqrt(3), 1.0 / math.sqrt(3), 0.0)]
    for q in np.linspace(0.55, 0.999, 8):
        amp = math.sqrt(max((1.0 - q * q) / 2.0, 0.0))
        for theta in np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False):
            seeds.append((q, amp * math.cos(theta), amp * math.sin(theta)))
    return seeds


def psk3_solve(alpha_sq: float) -> tuple[PskParams, float]:
    """Optimal circulant coupling for three phase-shift-keyed states.

    Solves the three real constraint equations (unit row norm plus the
    complex nearest-neighbour overlap) for ``(sqrt(p), u, v)`` from many
    deterministic seeds and keeps the admissible root with the largest
    p.  The sign ambiguity ``(q, u, v) -> (-q, -u, -v)`` is fixed by
    taking ``q >= 0``.
    """
    if alpha_sq == 0.0:
        # identical states: the constraint system has a double root there,
        # which costs root finders ~sqrt(eps) accuracy; the solution is exact
        q = 1.0 / math.sqrt(3.0)
        return PskParams(p=1.0 / 3.0, r=1.0 / 3.0, theta1=0.0, u=q, v=0.0), 2.0 / 3.0
    ensemble = gram_psk(3, alpha_sq)
    s = complex(ensemble.gram[0, 1])

    def residual(x):
        q, u, v = x
        return [
            2.0 * q * u + u * u - v * v - s.real,
            -2.0 * q * v + 2.0 * u * v - s.imag,
            q * q + 2.0 * (u * u + v * v) - 1.0,
        ]

    best = None
    for x0 in _psk3_seeds():
        found = _accept_root(root(residual, x0, method="hybr", tol=1e-12), residual)
        if found is None:
            continue
        q, u, v = found
        if q < 0.0:
            q, u, v = -q, -u, -v
        if best is None or q * q > best[0] * best[0]:
            best = (q, u, v)
    if best is None:
        raise NoSolutionError(
            f"no admissible ternary coupling root found at alpha_sq={alpha_sq!r}"
        )
    q, u, v = best
    p = q * q
    params = PskParams(p=p, r=u * u + v * v, theta1=math.atan2(v, u), u=u, v=v)
    return params, 1.0 - p


def _psk4_dense_seeds():
    seeds = [(1.0, 0.0, 0.0, 0.0), (0.5, 0.5, 0.0, 0.5)]
    for big in (0.55, 0.75, 0.95):
        for y in (0.08, 0.3, 0.55):
            amp = math.sqrt(max((1.0 - big * big - y * y) / 2.0, 0.0))
            for theta in np.linspace(0.0, 2.0 * math.pi, 6, endpoint=False):
                seeds.append((big, amp * math.cos(theta), amp * math.sin(theta), y))
    return seeds


_PSK4_LIGHT_SEEDS = [(1.0, 0.0, 0.0, 0.0), (0.5, 0.5, 0.0, 0.5)]


def psk4_solve(alpha_sq: float) -> tuple[PskParams, float]:
    """Optimal circulant coupling for four phase-shift-keyed states.

    For fixed ``kappa = cos(theta2)`` the four remaining real unknowns
    ``(sqrt(p), Re w, Im w, sqrt(r_prime))`` with ``w = u - i v`` solve a
    polynomial system (row norm, complex nearest-neighbour overlap, real
    opposite-state overlap); the outer problem maximizes p over kappa in
    [-1, 1] on a grid with continuation, then refines the best point by
    bounded scalar search.  Roots with negative sqrt(p) or sqrt(r_prime)
    are mirrors of roots at -kappa and are skipped.
    """
    if alpha_sq == 0.0:
        # identical states; see psk3_solve for why this is special-cased
        return (
            PskParams(p=0.25, r=0.25, theta1=0.0, u=0.5, v=0.0, r_prime=0.25, theta2=0.0),
            0.75,
        )
    ensemble = gram_psk(4, alpha_sq)
    g1 = complex(ensemble.gram[0, 1])
    g2 = float(ensemble.gram[0, 2].real)

    def solve_at(kappa, seeds):
        def residual(x):
            big, a, b, y = x
            return [
                big * big + 2.0 * (a * a + b * b) + y * y - 1.0,
                2.0 * a * (big + kappa * y) - g1.real,
                2.0 * b * (big - kappa * y) - g1.imag,
                2.0 * kappa * big * y + 2.0 * (a * a - b * b) - g2,
            ]

        best = None
        for x0 in seeds:
            found = _accept_root(root(residual, x0, method="hybr", tol=1e-12), residual)
            if found is None:
                continue
            big, a, b, y = found
            if big < -1e-12 or y < -1e-12:
                continue
            big, y = max(big, 0.0), max(y, 0.0)
            if best is None or big * big > best[0] * best[0]:
                best = (big, a, b, y)
        return best

    evaluated = {}  # kappa -> root tuple; best-p root at that kappa

    def eval_kappa(kappa, extra_seed=None):
        seeds = list(_PSK4_LIGHT_SEEDS)
        if extra_seed is not None:
            seeds.insert(0, tuple(extra_seed))
        found = solve_at(kappa, seeds)
        if found is None:
            found = solve_at(kappa, _psk4_dense_seeds())
        if found is None:
            logger.debug("no admissible root at kappa=%r, alpha_sq=%r", kappa, alpha_sq)
        else:
            evaluated[kappa] = found
        return found

    for kappa in (1.0, -1.0):
        found = solve_at(kappa, _psk4_dense_seeds())
        if found is not None:
            evaluated[kappa] = found

    prev = evaluated.get(1.0)
    for kappa in np.linspace(0.9, -0.9, 13):
        found = eval_kappa(float(kappa), extra_seed=prev)
        if found is not None:
            prev = found

    if not evaluated:
        raise NoSolutionError(
            f"no admissible quaternary coupling root found at alpha_sq={alpha_sq!r}"
        )

    kappa_star = max(evaluated, key=lambda k: evaluated[k][0])
    anchor = evaluated[kappa_star]

    def neg_p(kappa):
        kappa = float(kappa)
        found = solve_at(kappa, [tuple(anchor)] + _PSK4_LIGHT_SEEDS)
        if found is None:
            return 1.0
        cur = evaluated.get(kappa)
        if cur is None or found[0] > cur[0]:
            evaluated[kappa] = found
        return -found[0] * found[0]

    lo = max(-1.0, kappa_star - 0.15)
    hi = min(1.0, kappa_star + 0.15)
    minimize_scalar(neg_p, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})

    kappa_best = max(evaluated, key=lambda k: evaluated[k][0])
    big, a, b, y = evaluated[kappa_best]
    p = big * big
    params = PskParams(
        p=p,
        r=a * a + b * b,
        theta1=math.atan2(-b, a),
        u=a,
        v=-b,
        r_prime=y * y,
        theta2=math.acos(min(max(kappa_best, -1.0), 1.0)),
    )
    return params, 1.0 - p


def psk_coupling(n: int, alpha_sq: float, params: PskParams) -> CouplingMatrix:
    """Circulant coupling matrix realizing a PSK parameter set."""
    ensemble = gram_psk(n, alpha_sq)
    w = params.u - 1j * params.v
    if n == 3:
        first_row = np.array([math.sqrt(params.p), w, np.conj(w)])
    elif n == 4:
        if params.r_prime is None or params.theta2 is None:
            raise ValidationError("quaternary parameters require r_prime and theta2")
        z = math.sqrt(params.r_prime) * np.exp(1j * params.theta2)
        first_row = np.array([math.sqrt(params.p), w, z, np.conj(w)])
    else:
        raise ValidationError("structured PSK couplings exist only for n in {3, 4}")
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    c = first_row[(k - j) % n]
    return CouplingMatrix(c, ensemble)
