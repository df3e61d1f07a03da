"""Monte Carlo simulation of the protocol and sequential binary discrimination.

Sampling touches only the coupling's row distributions (outcome k on
input j has probability ``|c[j, k]|**2``), never the joint unitary; a
separate cross-check recomputes those distributions from the dilation
and fails loudly on disagreement.  Shots are split into fixed-size
chunks with per-chunk substreams so results are bitwise identical for
any worker count.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .closed_form import helstrom_bound
from .coupling import (
    CouplingMatrix,
    build_dilation,
    outcome_amplitudes,
    success_probability,
)
from .ensembles import Ensemble, gram_binary
from .errors import InfeasibleSequentialError, ValidationError

CHUNK_SHOTS = 65536
ROW_SUM_TOL = 1e-8
DILATION_CHECK_TOL = 1e-10
# outcome probabilities below this are treated as an impossible branch
NEGLIGIBLE_PROB = 1e-15


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SimulationReport:
    shots: int
    seed: int
    counts: np.ndarray
    empirical_error: float
    analytic_error: float
    std_error: float
    elapsed: float

    def __post_init__(self):
        object.__setattr__(self, "counts", _frozen(np.array(self.counts, dtype=np.int64)))


def worker_count() -> int:
    """Worker cap: QSD_THREADS if set, else hardware parallelism."""
    env = os.environ.get("QSD_THREADS", "").strip()
    if env:
        try:
            cap = int(env)
        except ValueError as exc:
            raise ValidationError(f"QSD_THREADS must be an integer, got {env!r}") from exc
        if cap < 1:
            raise ValidationError("QSD_THREADS must be at least 1")
        return cap
    return os.cpu_count() or 1


def _chunk_counts(chunk_index, chunk_shots, seed, cum_priors, cum_rows, n):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk_index,)))
    u_in = rng.random(chunk_shots)
    u_out = rng.random(chunk_shots)
    j = np.minimum((u_in[:, None] > cum_priors[None, :]).sum(axis=1), n - 1)
    k = np.minimum((u_out[:, None] > cum_rows[j]).sum(axis=1), n - 1)
    return np.bincount(j * n + k, minlength=n * n).reshape(n, n)


def run_monte_carlo(coupling: CouplingMatrix, shots: int, seed: int) -> SimulationReport:
    """Simulate the protocol: draw an input by prior, draw an ancilla
    outcome from the input's row distribution, guess that outcome.

    Deterministic for fixed (coupling, shots, seed) at any worker count:
    shots are cut into 65536-shot chunks, chunk i uses the substream
    spawned at key (seed, i), and integer counts merge order-free.
    Long runs (>= 10^6 shots) first verify the row distributions against
    the explicit dilation.
    """
    shots = int(shots)
    if shots < 1:
        raise ValidationError("shots must be at least 1")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValidationError("seed must fit in 64 unsigned bits")
    n = coupling.n
    rows = np.abs(coupling.c) ** 2
    row_sums = rows.sum(axis=1)
    if float(np.max(np.abs(row_sums - 1.0))) > ROW_SUM_TOL:
        raise ValidationError("coupling row probabilities do not sum to 1")
    if shots >= 1_000_000:
        check_against_dilation(coupling)

    start = time.perf_counter()
    rows = rows / row_sums[:, None]
    cum_priors = np.cumsum(coupling.ensemble.priors)
    cum_rows = np.cumsum(rows, axis=1)
    n_chunks = (shots + CHUNK_SHOTS - 1) // CHUNK_SHOTS
    sizes = [min(CHUNK_SHOTS, shots - i * CHUNK_SHOTS) for i in range(n_chunks)]

    workers = min(worker_count(), n_chunks)
    if workers == 1:
        partials = [
            _chunk_counts(i, sizes[i], seed, cum_priors, cum_rows, n)
            for i in range(n_chunks)
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(
                pool.map(
                    lambda i: _chunk_counts(i, sizes[i], seed, cum_priors, cum_rows, n),
                    range(n_chunks),
                )
            )
    counts = np.sum(partials, axis=0, dtype=np.int64)
    elapsed = time.perf_counter() - start

    analytic = 1.0 - success_probability(coupling)
    return SimulationReport(
        shots=shots,
        seed=seed,
        counts=counts,
        empirical_error=1.0 - float(np.trace(counts)) / shots,
        analytic_error=analytic,
        std_error=float(np.sqrt(analytic * (1.0 - analytic) / shots)),
        elapsed=elapsed,
    )


def check_against_dilation(coupling: CouplingMatrix) -> float:
    """Recompute outcome probabilities from the joint unitary and compare
    with ``|c[j, k]|**2``.  Returns the max deviation; raises above 1e-10."""
    dilation = build_dilation(coupling)
    worst = 0.0
    for j in range(coupling.n):
        amps = outcome_amplitudes(dilation, j)
        worst = max(worst, float(np.max(np.abs(np.abs(amps) ** 2 - np.abs(coupling.c[j]) ** 2))))
    if worst > DILATION_CHECK_TOL:
        raise ValidationError(
            f"coupling rows disagree with the dilation (residual {worst:.3e})"
        )
    return worst


@dataclass(frozen=True)
class TwoStageParams:
    """First-measurement parameters for sequential binary discrimination.

    r1, r2 are the stage-one misidentification probabilities; t1, t2 the
    real overlaps of the post-measurement system states conditioned on
    outcomes 1 and 2.  Feasibility against a given overlap s (the
    preservation constraint) is checked by :func:`two_stage_binary`.
    """

    r1: float
    r2: float
    t1: float
    t2: float

    def __post_init__(self):
        if not (0.0 <= self.r1 <= 1.0 and 0.0 <= self.r2 <= 1.0):
            raise ValidationError("r1 and r2 must be probabilities")
        if not (-1.0 <= self.t1 <= 1.0 and -1.0 <= self.t2 <= 1.0):
            raise ValidationError("t1 and t2 must be overlaps in [-1, 1]")


@dataclass(frozen=True)
class TwoStageResult:
    first_stage_error: float
    conditional_ensembles: tuple
    combined_error: float


def preservation_residual(s: float, params: TwoStageParams) -> float:
    """Residual of the inner-product preservation law
    ``sqrt((1-r1) r2) t1 + sqrt(r1 (1-r2)) t2 = s``."""
    lhs = (
        np.sqrt((1.0 - params.r1) * params.r2) * params.t1
        + np.sqrt(params.r1 * (1.0 - params.r2)) * params.t2
    )
    return float(abs(lhs - s))


def two_stage_binary(eta1: float, s: float, params: TwoStageParams) -> TwoStageResult:
    """Measure, keep the system, then measure the conditional pair optimally.

    Stage one uses individual error rates (r1, r2) and leaves
    post-measurement states with overlap t1 (outcome 1) or t2 (outcome
    2); stage two applies the optimal binary measurement to each
    conditional ensemble.  The combined error can never beat the
    single-shot optimum, and reaches it at the two endpoint
    constructions (optimal first stage with t1 = t2 = 1, or a vacuous
    first stage deferring everything to stage two).
    """
    eta1 = float(eta1)
    if not 0.0 <= eta1 <= 1.0:
        raise ValidationError("eta1 must lie in [0, 1]")
    s = float(s)
    if not 0.0 <= s <= 1.0:
        raise ValidationError("s must lie in [0, 1]")
    if preservation_residual(s, params) > 1e-10:
        raise InfeasibleSequentialError(
            "stage-one parameters cannot preserve the states' inner product"
        )
    eta2 = 1.0 - eta1
    first_stage_error = eta1 * params.r1 + eta2 * params.r2

    # posterior weight and ensemble behind each outcome
    branches = (
        (eta1 * (1.0 - params.r1) + eta2 * params.r2, eta1 * (1.0 - params.r1), params.t1),
        (eta1 * params.r1 + eta2 * (1.0 - params.r2), eta1 * params.r1, params.t2),
    )
    conditionals = []
    combined = 0.0
    for prob, eta1_joint, t in branches:
        if prob <= NEGLIGIBLE_PROB:
            conditionals.append(None)
            continue
        posterior = min(max(eta1_joint / prob, 0.0), 1.0)
        conditionals.append(gram_binary(abs(t), posterior))
        combined += prob * helstrom_bound(posterior, abs(t))
    return TwoStageResult(
        first_stage_error=first_stage_error,
        conditional_ensembles=tuple(conditionals),
        combined_error=combined,
    )
