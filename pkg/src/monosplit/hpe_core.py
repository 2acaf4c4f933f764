"""Driver for the inertial under-relaxed inexact proximal framework.

One iteration: extrapolate with the inertial factor, ask the inner solver
for a certificate ``(z~, v, eps, lam)``, verify the relative-error
criterion

    ||lam v + z~ - w||^2 + 2 lam eps <= sigma^2 ||z~ - w||^2,

then take the relaxed step ``z_next = w - tau lam v``.  Every iteration is
recorded in a columnar trace; descent/summability/energy inequalities can
be re-checked from the trace alone.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .ergodic import ErgodicState
from .errors import CertificationError, ParameterError

# Round-off allowance for exactly-zero residuals (inner solvers that
# reconstruct v = (w - z~)/lam reassemble lam*v with a few ulp of error).
_ZERO_SLACK = 1e-18


@dataclass(frozen=True)
class Certificate:
    """One inner-solver output claimed to satisfy the error criterion."""

    z_tilde: np.ndarray
    v: np.ndarray
    eps: float
    lam: float


@dataclass(frozen=True)
class StoppingRule:
    """Pointwise stopping: ``||v|| <= rho`` and ``eps <= eps_hat``."""

    rho: float = 1e-8
    eps_hat: float = 1e-10
    max_iters: int = 10 ** 6


# Fixed export order; ergodic columns appended last.
TRACE_COLUMNS = ("k", "norm_v", "eps", "lam", "error_ratio", "step_norm",
                 "s_k", "dist_to_solution", "resid_sq", "norm_dz", "dist_w",
                 "aggregate_stepsize", "norm_v_a", "eps_a")
CSV_COLUMNS = ("k", "norm_v", "eps", "lambda", "error_ratio", "step_norm",
               "s_k", "dist_to_solution", "Lambda", "norm_v_a", "eps_a")

TRACE_SCHEMA_VERSION = 1


class IterationTrace:
    """Columnar per-iteration record of a run."""

    def __init__(self):
        self.columns = {name: [] for name in TRACE_COLUMNS if name != "k"}

    def __len__(self):
        return len(self.columns["norm_v"])

    def append(self, **values):
        for name, col in self.columns.items():
            col.append(values[name])

    def column(self, name):
        return np.asarray(self.columns[name], dtype=float)

    def rows(self):
        n = len(self)
        for i in range(n):
            row = {"k": i + 1}
            row.update({name: self.columns[name][i] for name in self.columns})
            yield row

    # -- export / import --------------------------------------------------

    def write_jsonl(self, path, header=None):
        with open(path, "w") as fh:
            meta = {"schema_version": TRACE_SCHEMA_VERSION}
            if header:
                meta.update(header)
            fh.write(json.dumps({"meta": meta}) + "\n")
            for row in self.rows():
                fh.write(json.dumps(row) + "\n")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in self.rows():
                writer.writerow([
                    row["k"], row["norm_v"], row["eps"], row["lam"],
                    row["error_ratio"], row["step_norm"], row["s_k"],
                    row["dist_to_solution"], row["aggregate_stepsize"],
                    row["norm_v_a"], row["eps_a"]])

    @classmethod
    def read_jsonl(cls, path):
        trace = cls()
        meta = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParameterError(
                        f"malformed trace line {lineno}: {exc}")
                if "meta" in row:
                    meta = row["meta"]
                    continue
                missing = [c for c in TRACE_COLUMNS if c not in row]
                if missing:
                    raise ParameterError(
                        f"trace line {lineno} missing columns {missing}")
                trace.append(**{name: row[name] for name in trace.columns})
        return trace, meta


@dataclass
class SolverState:
    """Final state of one run plus everything needed for re-verification."""

    k: int
    z_curr: np.ndarray
    z_prev: np.ndarray
    w: np.ndarray
    z0: np.ndarray
    verdict: str
    params: object
    lambda_floor: float
    z_star: np.ndarray
    ergodic: ErgodicState
    trace: IterationTrace
    z_history: list = None
    w_history: list = None
    certificates: list = None


# ---------------------------------------------------------------------------
# Single-step operations
# ---------------------------------------------------------------------------

def extrapolate(z_curr, z_prev, alpha_k, alpha_max=None):
    """Inertial extrapolation ``w = z_curr + alpha_k (z_curr - z_prev)``."""
    if alpha_max is not None and not (0.0 <= alpha_k <= alpha_max + 1e-15):
        raise ParameterError(
            f"alpha_k = {alpha_k} outside [0, {alpha_max}]")
    linalg.check_same_dim(z_curr, z_prev)
    return z_curr + alpha_k * (z_curr - z_prev)


def _error_ratio(resid_sq, lam, eps, dz_sq, sigma, tol, k=None):
    lhs = resid_sq + 2.0 * lam * eps
    rhs = sigma * sigma * dz_sq
    slack = _ZERO_SLACK * (1.0 + dz_sq)
    if lhs <= slack:
        return 0.0
    if rhs <= 0.0:
        raise CertificationError(
            f"criterion violated at k={k}: lhs={lhs} with sigma=0",
            k=k, ratio=math.inf)
    ratio = lhs / rhs
    if ratio > 1.0 + tol:
        raise CertificationError(
            f"criterion violated at k={k}: ratio={ratio}", k=k, ratio=ratio)
    return ratio


def certify(cert, w, sigma, tol=1e-9):
    """Check the relative-error criterion; return the lhs/rhs ratio.

    The convention 0/0 -> 0 covers exact fixed points.  Raises
    :class:`CertificationError` when the ratio exceeds ``1 + tol``.
    """
    if not (0.0 <= sigma < 1.0):
        raise ParameterError(f"sigma must lie in [0, 1), got {sigma}")
    resid = cert.lam * cert.v + cert.z_tilde - w
    return _error_ratio(linalg.norm_sq(resid), cert.lam, cert.eps,
                        linalg.norm_sq(cert.z_tilde - w), sigma, tol)


def relax_update(w, cert, tau):
    """Relaxed correction step ``z_next = w - tau lam v``."""
    if not (0.0 < tau <= 1.0):
        raise ParameterError(f"tau must lie in (0, 1], got {tau}")
    return w - tau * cert.lam * cert.v


# ---------------------------------------------------------------------------
# The driver
# ---------------------------------------------------------------------------

def run(problem, inner_solver, params, stop=None, z0=None, lambda_floor=0.0,
        record_vectors=False, certify_tol=1e-9, z_star=None):
    """Iterate the framework until the stopping rule fires or the cap hits.

    Parameters
    ----------
    problem : TestProblem or None
        Supplies the dimension, and the known solution for distance
        columns, when given.
    inner_solver : callable ``(w, k) -> Certificate``
    params : HpeParams
    stop : StoppingRule, optional
    z0 : starting point; defaults to the origin.
    lambda_floor : enforced lower bound on every certificate stepsize.
    record_vectors : keep per-iteration vectors (needed by post-hoc checks
        that go beyond the scalar trace; memory grows with k * dim).
    z_star : known solution override for the distance columns.

    Returns
    -------
    SolverState with ``verdict`` in {"solved", "max_iters"}.
    """
    stop = stop or StoppingRule()
    if z0 is None:
        if problem is None:
            raise ParameterError("need either a problem or an explicit z0")
        z0 = np.zeros(problem.dim)
    z0 = linalg.as_vector(z0)
    if z_star is None and problem is not None:
        z_star = problem.known_solution
    params.validate(horizon=1)

    sigma, tau, eta = params.sigma, params.tau, params.eta
    z_prev = z0.copy()
    z = z0.copy()
    trace = IterationTrace()
    erg = ErgodicState(dim=z0.shape[0])
    z_hist = [z0.copy()] if record_vectors else None
    w_hist = [] if record_vectors else None
    certs = [] if record_vectors else None

    verdict = "max_iters"
    w = z.copy()
    k = 0
    for k in range(1, stop.max_iters + 1):
        alpha_k = params.schedule.value(k)
        w = extrapolate(z, z_prev, alpha_k, params.alpha)

        cert = inner_solver(w, k)
        if cert.lam < lambda_floor - 1e-15 or cert.lam <= 0.0:
            raise ParameterError(
                f"stepsize {cert.lam} below the floor {lambda_floor} at k={k}")
        if cert.eps < 0.0:
            raise CertificationError(f"negative eps {cert.eps} at k={k}", k=k)

        resid = cert.lam * cert.v + cert.z_tilde - w
        resid_sq = linalg.norm_sq(resid)
        dz_sq = linalg.norm_sq(cert.z_tilde - w)
        ratio = _error_ratio(resid_sq, cert.lam, cert.eps, dz_sq, sigma,
                             certify_tol, k=k)

        z_next = relax_update(w, cert, tau)
        if not np.all(np.isfinite(z_next)):
            raise CertificationError(f"non-finite iterate at k={k}", k=k)

        step_sq = linalg.norm_sq(z_next - z)
        s_k = max(eta * linalg.norm_sq(z_next - w),
                  (1.0 - sigma * sigma) * tau * dz_sq)
        erg.update(cert)

        norm_v = math.sqrt(linalg.norm_sq(cert.v))
        if z_star is not None:
            dist = math.sqrt(linalg.norm_sq(z_next - z_star))
            dist_w = math.sqrt(linalg.norm_sq(w - z_star))
        else:
            dist = dist_w = math.nan
        trace.append(
            norm_v=norm_v, eps=cert.eps, lam=cert.lam, error_ratio=ratio,
            step_norm=math.sqrt(step_sq), s_k=s_k, dist_to_solution=dist,
            resid_sq=resid_sq, norm_dz=math.sqrt(dz_sq), dist_w=dist_w,
            aggregate_stepsize=erg.aggregate_stepsize,
            norm_v_a=math.sqrt(linalg.norm_sq(erg.v_avg)),
            eps_a=erg.eps_avg_raw)

        if record_vectors:
            z_hist.append(z_next.copy())
            w_hist.append(w.copy())
            certs.append(cert)

        z_prev, z = z, z_next
        if norm_v <= stop.rho and cert.eps <= stop.eps_hat:
            verdict = "solved"
            break

    return SolverState(
        k=k, z_curr=z, z_prev=z_prev, w=w, z0=z0, verdict=verdict,
        params=params, lambda_floor=lambda_floor, z_star=z_star,
        ergodic=erg, trace=trace, z_history=z_hist, w_history=w_hist,
        certificates=certs)


# ---------------------------------------------------------------------------
# Post-hoc inequality checks (scalar-trace based)
# ---------------------------------------------------------------------------

def _check_tol(values, scale=1.0):
    return np.maximum(1e-9, 1e-12 * np.abs(values) * scale)


def fejer_check(state, z_star=None):
    """Per-iteration descent residuals ``||w-z*||^2 - ||z-z*||^2 - s_k``.

    All residuals are nonnegative (up to round-off) on certified runs.
    """
    if z_star is None:
        dist_w = state.trace.column("dist_w")
        dist_z = state.trace.column("dist_to_solution")
        if np.any(np.isnan(dist_w)):
            raise ParameterError(
                "no solution recorded in the trace; pass z_star and run "
                "with record_vectors=True")
    else:
        if state.w_history is None:
            raise ParameterError(
                "explicit z_star needs a run with record_vectors=True")
        z_star = linalg.as_vector(z_star)
        dist_w = np.array([math.sqrt(linalg.norm_sq(w - z_star))
                           for w in state.w_history])
        dist_z = np.array([math.sqrt(linalg.norm_sq(z - z_star))
                           for z in state.z_history[1:]])
    s = state.trace.column("s_k")
    return dist_w ** 2 - dist_z ** 2 - s


def summability_check(state):
    """Step-sum bound, the monotone energy sequence and its diagnostics.

    Returns a dict with the partial sums of ``||z_k - z_{k-1}||^2``, the
    guaranteed bound ``2 d0^2 / ((1-alpha) q(alpha))``, the ``mu``
    sequence (nonincreasing), and the partial sums of
    ``alpha_k ||z_k - z_{k-1}||^2`` (the classical summability diagnostic).
    """
    p = state.params
    if state.z_star is None:
        raise ParameterError("summability check needs a known solution")
    steps_sq = state.trace.column("step_norm") ** 2
    k = steps_sq.shape[0]
    phi = np.empty(k + 1)
    phi[0] = linalg.norm_sq(state.z0 - state.z_star)
    phi[1:] = state.trace.column("dist_to_solution") ** 2

    lhs = np.cumsum(steps_sq)
    rhs = 2.0 * phi[0] / ((1.0 - p.alpha) * p.q_alpha)

    alphas = np.array([p.schedule.value(j) for j in range(1, k + 2)])
    gamma = (1.0 - p.eta) * alphas ** 2 + (1.0 + p.eta) * alphas
    mu = np.empty(k + 1)
    mu[0] = (1.0 - alphas[0]) * phi[0]
    for j in range(1, k + 1):
        # gamma index j uses alpha_j = schedule value at iteration j+1
        mu[j] = phi[j] - alphas[j - 1] * phi[j - 1] + gamma[j] * steps_sq[j - 1]

    cond16 = np.cumsum(alphas[:k] * steps_sq)
    return {
        "partial_sums": lhs,
        "bound": rhs,
        "mu": mu,
        "mu_increments": np.diff(mu),
        "condition16_partial_sums": cond16,
    }


def energy_check(state):
    """Telescoped prefix-energy inequality.

    Returns ``(lhs, rhs)`` where for every prefix k

        lhs_k = ||z_k - z*||^2 + sum_{j<=k} s_j  <=  rhs = inflation * d0^2.
    """
    p = state.params
    if state.z_star is None:
        raise ParameterError("energy check needs a known solution")
    d0_sq = linalg.norm_sq(state.z0 - state.z_star)
    dist_sq = state.trace.column("dist_to_solution") ** 2
    lhs = dist_sq + np.cumsum(state.trace.column("s_k"))
    rhs = p.energy_inflation() * d0_sq
    return lhs, rhs
