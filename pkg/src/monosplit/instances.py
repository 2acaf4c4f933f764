"""Concrete inner solvers: proximal-point, forward-backward-forward,
and forward-backward certificate producers.

Each step function maps an extrapolated point ``w`` to a
:class:`~monosplit.hpe_core.Certificate` that provably satisfies the
relative-error criterion for its stepsize range:

* ``ppm_step``: exact resolvent of the full operator; zero residual and
  zero error (the sigma = 0 instance).
* ``tseng_step``: resolvent of ``B`` after a forward step at the
  projected point; needs ``lam <= sigma / L`` (Lipschitz).
* ``fb_step``: resolvent of ``B`` after a forward step at ``w`` itself;
  needs ``lam <= 2 sigma^2 / L`` (cocoercive) and carries the error
  ``eps = L ||z~ - w||^2 / 4``.
"""

from dataclasses import dataclass

from . import hpe_core, linalg
from .errors import ParameterError
from .hpe_core import Certificate

INSTANCE_KINDS = ("ppm", "tseng_fbf", "forward_backward")


@dataclass(frozen=True)
class InstanceConfig:
    """Inner-solver selection and stepsize rule (constant with a floor)."""

    kind: str
    lam: float = None          # constant stepsize; None = cap/default
    lambda_floor: float = None  # defaults to the constant stepsize

    def __post_init__(self):
        if self.kind not in INSTANCE_KINDS:
            raise ParameterError(
                f"unknown instance kind {self.kind!r}; "
                f"choose from {INSTANCE_KINDS}")


def ppm_step(B, w, lam):
    """One exact proximal step on the full operator via its resolvent."""
    z_tilde, v = B.resolve(lam, w)
    return Certificate(z_tilde=z_tilde, v=v, eps=0.0, lam=lam)


def tseng_step(F, B, w, lam, sigma):
    """One forward-backward-forward step.

    ``v = F(z~) - F(P(w)) + (w - z~)/lam`` lies in ``(F+B)(z~)`` exactly;
    the Lipschitz bound plus projection nonexpansiveness give the error
    criterion with ``eps = 0``.
    """
    if not (0.0 < sigma < 1.0):
        raise ParameterError(f"tseng needs sigma in (0, 1), got {sigma}")
    cap = sigma / F.lipschitz_L
    if lam > cap * (1.0 + 1e-12):
        raise ParameterError(
            f"stepsize {lam} exceeds the cap sigma/L = {cap}")
    w_proj = F.project_domain(w)
    f_w = F(w_proj)
    z_tilde, _ = B.resolve(lam, w - lam * f_w)
    v = F(z_tilde) - f_w + (w - z_tilde) / lam
    return Certificate(z_tilde=z_tilde, v=v, eps=0.0, lam=lam)


def fb_step(F, B, w, lam, sigma):
    """One forward-backward step.

    The residual ``lam v + z~ - w`` vanishes identically; cocoercivity
    certifies ``F(w) in F^eps(z~)`` with ``eps = L ||z~ - w||^2 / 4``,
    and the stepsize cap makes ``2 lam eps <= sigma^2 ||z~ - w||^2``.
    """
    if not (0.0 < sigma < 1.0):
        raise ParameterError(f"forward-backward needs sigma in (0, 1), "
                             f"got {sigma}")
    if not F.cocoercive:
        raise ParameterError("forward-backward needs a cocoercive map")
    L = F.lipschitz_L
    cap = 2.0 * sigma * sigma / L
    if lam > cap * (1.0 + 1e-12):
        raise ParameterError(
            f"stepsize {lam} exceeds the cap 2 sigma^2/L = {cap}")
    z_tilde, _ = B.resolve(lam, w - lam * F(w))
    v = (w - z_tilde) / lam
    eps = L * linalg.norm_sq(z_tilde - w) / 4.0
    return Certificate(z_tilde=z_tilde, v=v, eps=eps, lam=lam)


def default_stepsize(kind, problem, params):
    """Constant stepsize at the instance cap (1.0 for the proximal point)."""
    if kind == "ppm":
        return 1.0
    L = problem.lipschitz_L
    if L is None:
        raise ParameterError(f"{kind} needs a forward map with known L")
    if kind == "tseng_fbf":
        return params.sigma / L
    return 2.0 * params.sigma ** 2 / L


def make_inner_solver(problem, config, params):
    """Bind a step function to a problem; returns ``(solver, lambda_floor)``."""
    lam = config.lam
    if lam is None:
        lam = default_stepsize(config.kind, problem, params)
    if lam <= 0.0:
        raise ParameterError(f"stepsize must be positive, got {lam}")
    floor = config.lambda_floor if config.lambda_floor is not None else lam

    if config.kind == "ppm":
        if params.sigma != 0.0:
            raise ParameterError("ppm is the sigma = 0 instance")
        B = problem.resolvent

        def solver(w, k):
            return ppm_step(B, w, lam)
    elif config.kind == "tseng_fbf":
        if problem.forward is None:
            raise ParameterError("tseng_fbf needs a structured (F, B) problem")

        def solver(w, k):
            return tseng_step(problem.forward, problem.resolvent, w, lam,
                              params.sigma)
    else:
        if problem.forward is None:
            raise ParameterError(
                "forward_backward needs a structured (F, B) problem")

        def solver(w, k):
            return fb_step(problem.forward, problem.resolvent, w, lam,
                           params.sigma)

    return solver, floor


def solve(problem, config, params, stop=None, z0=None, record_vectors=False):
    """Run the driver on a problem with one of the bundled instances."""
    solver, floor = make_inner_solver(problem, config, params)
    return hpe_core.run(problem, solver, params, stop=stop, z0=z0,
                        lambda_floor=floor, record_vectors=record_vectors)
