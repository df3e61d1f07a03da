"""Closed-form minimum-error probabilities and square-root-measurement oracles.

The binary and real-symmetric families admit exact expressions for the
minimum average error; the square-root measurement (SRM) supplies two
independent oracles (a generic Gram-coordinate one and a circulant/DFT
one) against which every numerical result in the package is checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import Ensemble, circulant_eigenvalues, is_circulant, spectral_factor
from .errors import NotCirculantError, UnsupportedPriorsError, ValidationError


@dataclass(frozen=True)
class BinarySolution:
    """Optimal binary discrimination data: minimum average error and the
    two individual error rates achieving it.

    Satisfies ``p_error == eta1*r1 + eta2*r2`` and the overlap constraint
    ``s == sqrt((1-r1)*r2) + sqrt((1-r2)*r1)``.
    """

    p_error: float
    r1: float
    r2: float


def _binary_args(eta1: float, overlap: complex) -> tuple[float, float]:
    eta1 = float(eta1)
    if not 0.0 <= eta1 <= 1.0:
        raise ValidationError(f"eta1 must lie in [0, 1], got {eta1!r}")
    s = abs(complex(overlap))
    if s > 1.0 + 1e-12:
        raise ValidationError(f"|overlap| must be <= 1, got {s!r}")
    return eta1, min(s, 1.0)


def helstrom_bound(eta1: float, overlap: complex) -> float:
    """Minimum average error probability for two pure states.

    Returns ``(1 - sqrt(1 - 4*eta1*eta2*s**2)) / 2`` with ``s = |overlap|``
    and ``eta2 = 1 - eta1``; always in [0, 1/2].
    """
    eta1, s = _binary_args(eta1, overlap)
    disc = 1.0 - 4.0 * eta1 * (1.0 - eta1) * s * s
    if disc < -1e-12:
        raise ValidationError("discriminant negative; inputs out of range")
    return 0.5 * (1.0 - math.sqrt(max(disc, 0.0)))


def binary_individual_errors(eta1: float, overlap: complex) -> BinarySolution:
    """Per-state error rates of the optimal binary measurement.

    ``r1 = (1 - (1 - 2*eta2*s**2)/sqrt(1 - 4*eta1*eta2*s**2)) / 2`` and
    symmetrically for r2; their prior-weighted average is the minimum
    error.  The degenerate point eta1 = eta2 = 1/2, s = 1 returns the
    continuous limit r1 = r2 = 1/2.
    """
    eta1, s = _binary_args(eta1, overlap)
    eta2 = 1.0 - eta1
    disc = 1.0 - 4.0 * eta1 * eta2 * s * s
    if disc <= 0.0:
        # only reachable at eta1 = eta2 = 1/2, s = 1
        return BinarySolution(p_error=0.5, r1=0.5, r2=0.5)
    root = math.sqrt(disc)
    r1 = 0.5 * (1.0 - (1.0 - 2.0 * eta2 * s * s) / root)
    r2 = 0.5 * (1.0 - (1.0 - 2.0 * eta1 * s * s) / root)
    r1 = min(max(r1, 0.0), 1.0)
    r2 = min(max(r2, 0.0), 1.0)
    return BinarySolution(p_error=eta1 * r1 + eta2 * r2, r1=r1, r2=r2)


def binary_constraint_residual(s: float, r1: float, r2: float) -> float:
    """Residual of the overlap-preservation constraint
    ``s = sqrt((1-r1)*r2) + sqrt((1-r2)*r1)``."""
    return abs(s - math.sqrt((1.0 - r1) * r2) - math.sqrt((1.0 - r2) * r1))


def _symmetric_args(n: int, s: float) -> tuple[int, float]:
    n = int(n)
    if n < 2:
        raise ValidationError("n must be at least 2")
    s = float(s)
    if not -1.0 / (n - 1) - 1e-12 <= s <= 1.0 + 1e-12:
        raise ValidationError(
            f"s={s!r} outside the positive-semidefinite range [{-1.0/(n-1)}, 1]"
        )
    return n, s


def symmetric_p_quadratic(n: int, s: float) -> tuple[float, float]:
    """Both roots of the success probability p for n equal-overlap states.

    p solves ``s = 2*sqrt(p*r) + (n-2)*r`` with ``r = (1-p)/(n-1)``; the
    two roots are ``((sqrt(1+s*(n-1)) +/- (n-1)*sqrt(1-s)) / n)**2``.
    Returns (p_plus, p_minus) with p_plus >= p_minus >= 0; the larger
    root is the optimum.
    """
    n, s = _symmetric_args(n, s)
    a = math.sqrt(max(1.0 + s * (n - 1), 0.0))
    b = (n - 1) * math.sqrt(max(1.0 - s, 0.0))
    p_plus = ((a + b) / n) ** 2
    p_minus = ((a - b) / n) ** 2
    return p_plus, p_minus


def symmetric_min_error(n: int, s: float) -> float:
    """Minimum error probability for n states with common real overlap s.

    Equals ``1 - (sqrt(1+s*(n-1)) + (n-1)*sqrt(1-s))**2 / n**2``, which
    lies in [0, 1 - 1/n].  At n = 2 this reduces to the equal-prior
    binary bound.
    """
    p_plus, _ = symmetric_p_quadratic(n, s)
    return max(1.0 - p_plus, 0.0)


def _require_equal_priors(ensemble: Ensemble) -> None:
    if not ensemble.equal_priors:
        raise UnsupportedPriorsError(
            "SRM oracles are only claimed optimal for equal priors; "
            "use the general optimizer for arbitrary priors"
        )


def srm_error_general(ensemble: Ensemble) -> float:
    """SRM error probability from the Gram square root (equal priors).

    The success probability is ``(1/n) * sum_j ((G^{1/2})_jj)**2``; the
    square root is taken on the rank support, so rank-deficient
    ensembles are handled without pseudo-inverse blowup.
    """
    _require_equal_priors(ensemble)
    sqrt = spectral_factor(ensemble).sqrt
    diag = np.abs(np.diag(sqrt))
    p_succ = float(np.sum(diag * diag)) / ensemble.n
    return max(1.0 - p_succ, 0.0)


def srm_error_circulant(ensemble: Ensemble) -> float:
    """SRM error probability via the DFT eigenvalues of a circulant Gram.

    Independent of :func:`srm_error_general`: the success probability is
    ``((1/n) * sum_k sqrt(lambda_k))**2`` with lambda_k the circulant
    eigenvalues of the Gram matrix.
    """
    _require_equal_priors(ensemble)
    if not is_circulant(ensemble.gram):
        raise NotCirculantError("ensemble Gram matrix is not circulant")
    lam = circulant_eigenvalues(ensemble.gram[0])
    p_succ = (float(np.sum(np.sqrt(lam))) / ensemble.n) ** 2
    return max(1.0 - p_succ, 0.0)
