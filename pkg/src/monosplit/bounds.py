"""Closed-form rate-bound evaluators and trace assertion harnesses.

All evaluators are exact closed forms in ``(d0, lambda_floor, params, k)``;
:func:`assert_bounds` replays a recorded trace against them and fails loudly
on any violation (which signals an implementation bug, not bad luck: the
bounds are guaranteed).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, TheoremViolation


@dataclass(frozen=True)
class BoundInputs:
    """Everything the closed forms need besides the iteration index."""

    d0: float
    lambda_floor: float
    params: object

    def __post_init__(self):
        if self.d0 < 0.0:
            raise ParameterError(f"d0 must be nonnegative, got {self.d0}")
        if self.lambda_floor <= 0.0:
            raise ParameterError(
                f"lambda_floor must be positive, got {self.lambda_floor}")
        if self.params.q_alpha <= 0.0:
            raise ParameterError("q(alpha) <= 0")


def pointwise_bounds(inp, k):
    """Best-iterate bounds: ``(v_bound, eps_bound)`` at index ``k``.

    ``v_bound`` scales as 1/sqrt(k), ``eps_bound`` as 1/k (and is zero
    when sigma = 0, where every step is exact).
    """
    p = inp.params
    infl = p.energy_inflation()
    denom = inp.lambda_floor * p.tau
    v_bound = inp.d0 / (denom * math.sqrt(k)) * math.sqrt(infl / p.eta)
    if p.sigma == 0.0:
        eps_bound = 0.0
    else:
        eps_bound = (p.sigma * inp.d0 ** 2 * infl
                     / (2.0 * (1.0 - p.sigma ** 2) * denom * k))
    return v_bound, eps_bound


def ergodic_bounds(inp, k):
    """Averaged-sequence bounds ``(v_a_bound, eps_a_bound)`` at index ``k``.

    Valid for constant inertial schedules; both scale as 1/k.
    """
    p = inp.params
    infl = p.energy_inflation()
    denom = inp.lambda_floor * p.tau * k
    v_a = 2.0 * (1.0 + p.alpha) * inp.d0 / denom * math.sqrt(infl)
    spread = (1.0
              + p.sigma / math.sqrt((1.0 - p.sigma ** 2) * p.tau)
              + math.sqrt(4.0 + (1.0 - p.tau) ** 2 / (p.eta * p.tau ** 2)))
    eps_a = 2.0 * math.sqrt(2.0) * inp.d0 ** 2 / denom * infl * spread
    return v_a, eps_a


def iteration_budget(rho, eps_hat, inp):
    """Smallest k at which both pointwise bounds fall below ``(rho, eps_hat)``."""
    if rho <= 0.0 or eps_hat <= 0.0:
        raise ParameterError("tolerances must be positive")
    v1, e1 = pointwise_bounds(inp, 1)
    k = 1
    if v1 > rho:
        k = max(k, math.ceil((v1 / rho) ** 2))
    if e1 > 0.0 and math.isfinite(eps_hat) and e1 > eps_hat:
        k = max(k, math.ceil(e1 / eps_hat))
    return int(k)


def assert_bounds(trace, inp, tol=1e-8, eps_nonneg_tol=1e-9,
                  check_ergodic=True, prefixes=None):
    """Verify a trace against every rate bound; return a utilization report.

    The pointwise theorems promise one witness index per prefix; the proof's
    witness is the iterate minimizing the energy term ``s_k``, which is
    tracked in a streaming pass (with an exhaustive fallback before any
    violation is declared).

    Raises
    ------
    TheoremViolation
        Naming the iteration and the violated bound.
    """
    n = len(trace)
    if n == 0:
        return {"checked_prefixes": 0, "violations": []}
    norm_v = trace.column("norm_v")
    eps = trace.column("eps")
    s_k = trace.column("s_k")
    norm_v_a = trace.column("norm_v_a")
    eps_a = trace.column("eps_a")
    if prefixes is None:
        ks = np.arange(1, n + 1)
    else:
        ks = np.asarray(sorted(set(int(k) for k in prefixes if 1 <= k <= n)))

    # streaming witness: running argmin of the energy term s_j
    witness_idx = np.zeros(n, dtype=int)
    best = 0
    for j in range(1, n):
        if s_k[j] < s_k[best]:
            best = j
        witness_idx[j] = best

    worst = {"pointwise_v": 0.0, "pointwise_eps": 0.0,
             "ergodic_v": 0.0, "ergodic_eps": 0.0}
    eps_a_min = float(eps_a.min())
    if eps_a_min < -eps_nonneg_tol:
        k_bad = int(np.argmin(eps_a)) + 1
        raise TheoremViolation(
            f"aggregated error {eps_a_min} < -{eps_nonneg_tol} at k={k_bad}",
            k=k_bad, bound="eps_a >= 0")

    for k in ks:
        vb, eb = pointwise_bounds(inp, k)
        i = witness_idx[k - 1]
        ok = (norm_v[i] <= vb * (1.0 + tol)
              and eps[i] <= eb * (1.0 + tol) + 1e-300)
        if not ok:
            # exhaustive fallback over the whole prefix
            mask = ((norm_v[:k] <= vb * (1.0 + tol))
                    & (eps[:k] <= eb * (1.0 + tol) + 1e-300))
            if not mask.any():
                raise TheoremViolation(
                    f"no iterate in 1..{k} meets the pointwise bounds "
                    f"(v <= {vb}, eps <= {eb})", k=int(k), bound="pointwise")
            i = int(np.nonzero(mask)[0][0])
        if vb > 0.0:
            worst["pointwise_v"] = max(worst["pointwise_v"], norm_v[i] / vb)
        if eb > 0.0:
            worst["pointwise_eps"] = max(worst["pointwise_eps"], eps[i] / eb)

        if check_ergodic:
            vab, eab = ergodic_bounds(inp, k)
            if norm_v_a[k - 1] > vab * (1.0 + tol):
                raise TheoremViolation(
                    f"ergodic residual {norm_v_a[k - 1]} exceeds bound "
                    f"{vab}", k=int(k), bound="ergodic_v")
            if eps_a[k - 1] > eab * (1.0 + tol) + 1e-300:
                raise TheoremViolation(
                    f"aggregated error {eps_a[k - 1]} exceeds bound {eab}",
                    k=int(k), bound="ergodic_eps")
            if vab > 0.0:
                worst["ergodic_v"] = max(worst["ergodic_v"],
                                         norm_v_a[k - 1] / vab)
            if eab > 0.0:
                worst["ergodic_eps"] = max(worst["ergodic_eps"],
                                           eps_a[k - 1] / eab)

    return {
        "checked_prefixes": int(ks.shape[0]),
        "eps_a_min": eps_a_min,
        "worst_utilization": worst,
        "violations": [],
    }
