"""Population-level oracle for the log-growth cost.

Everything here is deterministic quadrature and root-finding: the cost
J(K) = E[log|1+BK|], its Cauchy-regularized family, the principal-value
gradient evaluated by parity-shell quadrature around the moving pole
b_sing(K) = -1/K, the Hessian decomposition with its Hadamard
finite-part limit, and the local curvature constants used by the
learning algorithms.

The parity-shell scheme splits the integration domain at a shell of
radius r = (pole-to-nearest-endpoint distance)/2 around the pole.  The
far region is ordinary adaptive quadrature; on the shell the odd part of
the Cauchy kernel cancels exactly under the subtraction

    PV int_{-r}^{r} f(pole+s)/(K s) ds
        = int_0^r [f(pole+s) - f(pole-s)]/(K s) ds,

whose integrand extends continuously to s = 0 with value 2 f'(pole)/K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .densities import NoiseDensity, eval_d2pdf, eval_dpdf, eval_pdf
from .errors import (
    ConfigurationError,
    DomainError,
    IllConditionedError,
    NumericalError,
    PersistenceError,
    RootNotFoundError,
)

__all__ = [
    "GainPoint",
    "HessianParts",
    "LocalConstants",
    "b_sing",
    "gain_bracket",
    "cost_J",
    "reg_cost",
    "pv_gradient",
    "reg_gradient",
    "hessian_decomposition",
    "find_Kstar",
    "find_Kstar_eps",
    "local_constants",
    "pv_gradient_symmetric_cutoff",
    "pv_gradient_no_pole_info",
]

_ENDPOINT_GUARD = 1e-12     # pole this close to a support endpoint is hopeless
_SHELL_FLOOR = 1e-8         # fraction of the shell radius below which the
                            # subtracted integrand switches to its s=0 limit


def b_sing(K: float) -> float:
    """Location of the moving pole: the noise value where 1 + bK vanishes."""
    if K == 0.0:
        raise DomainError("K = 0 has no pole (closed loop is open loop)")
    return -1.0 / K


@dataclass(frozen=True)
class GainPoint:
    """A feedback gain together with its derived pole location."""

    K: float

    def __post_init__(self):
        if self.K == 0.0:
            raise ConfigurationError("gain K must be nonzero")

    @property
    def pole(self) -> float:
        return b_sing(self.K)


@dataclass(frozen=True)
class HessianParts:
    """Integration-by-parts split of the regularized second derivative."""

    boundary_term: float
    integral_term: float

    @property
    def total(self) -> float:
        return self.boundary_term + self.integral_term


@dataclass(frozen=True)
class LocalConstants:
    """Curvature and geometry constants on the basin [K* - delta, K* + delta]."""

    mu0: float
    L0: float
    tau: float
    delta: float
    cbar_b: float
    basin: tuple[float, float]

    def __post_init__(self):
        if not (0.0 < self.mu0 <= self.L0):
            raise NumericalError(
                f"curvature bounds violated: mu0={self.mu0:.4g}, L0={self.L0:.4g}"
            )
        if self.tau <= 0.0 or not math.isfinite(self.tau):
            raise NumericalError(f"pole-to-edge margin must be positive, got {self.tau}")


def gain_bracket(d: NoiseDensity) -> tuple[float, float]:
    """Open interval of gains whose pole lies inside the support."""
    return (-1.0 / d.support_lo, -1.0 / d.support_hi)


_ROUNDOFF_ACCEPT = 1e-8   # flagged results better than this are roundoff-limited,
                          # not divergent (peaks of height 1/eps floor the error
                          # estimate near eps_machine/eps regardless of subdivision)


def _quad(f, lo, hi, points=(), epsabs=1e-12, limit=200):
    pts = sorted(p for p in points if lo < p < hi)
    out = quad(f, lo, hi, points=pts or None, epsabs=epsabs, epsrel=1e-13,
               limit=limit, full_output=1)
    # QUADPACK may set a warning flag (roundoff, subdivision limit) while the
    # achieved error estimate still meets the requested absolute accuracy.
    if len(out) > 3 and out[1] > max(epsabs, _ROUNDOFF_ACCEPT):
        raise NumericalError(
            f"quadrature on [{lo:.6g}, {hi:.6g}] did not converge: "
            f"achieved abs error {out[1]:.3e} (target {epsabs:.1e})"
        )
    return out[0]


def _pole_interior(d: NoiseDensity, K: float) -> bool:
    pole = b_sing(K)
    return d.support_lo < pole < d.support_hi


def _pole_points(d: NoiseDensity, K: float, eps: float) -> list[float]:
    """Panel points for regularized integrands: the pole plus flanking nodes.

    The smooth near-pole feature lives on the scale eps/|K|; seeding panel
    edges at geometric offsets keeps the adaptive refinement from stalling
    at small eps.
    """
    if not _pole_interior(d, K):
        return []
    pole = b_sing(K)
    pts = [pole]
    if eps > 0.0:
        scale = eps / abs(K)
        for mult in (1.0, 10.0, 100.0, 1000.0):
            pts.extend((pole - mult * scale, pole + mult * scale))
    return pts


def _guard_pole(d: NoiseDensity, K: float) -> float:
    pole = b_sing(K)
    margin = min(abs(pole - d.support_lo), abs(pole - d.support_hi))
    if margin < _ENDPOINT_GUARD:
        raise IllConditionedError(
            f"pole {pole:.12g} within {_ENDPOINT_GUARD:g} of a support endpoint"
        )
    return pole


def _dpdf_onesided(d: NoiseDensity, b: float) -> float:
    try:
        return eval_dpdf(d, b)
    except DomainError:
        return eval_dpdf(d, b, side="left")


def _d2pdf_onesided(d: NoiseDensity, b: float) -> float:
    try:
        return eval_d2pdf(d, b)
    except DomainError:
        return eval_d2pdf(d, b, side="left")


def _pv_integral(f, fprime_pole, d: NoiseDensity, K: float, epsabs=1e-12) -> float:
    """PV integral of f(b)/(1+bK) over the support, pole strictly interior.

    ``f`` is evaluated at scalar points; ``fprime_pole`` is f'(pole), used
    for the continuous extension of the subtracted shell integrand.
    """
    lo, hi = d.support_lo, d.support_hi
    pole = _guard_pole(d, K)
    r = 0.5 * min(pole - lo, hi - pole)

    def kernel(b):
        return f(b) / (1.0 + b * K)

    far = _quad(kernel, lo, pole - r, points=d.breakpoints, epsabs=epsabs)
    far += _quad(kernel, pole + r, hi, points=d.breakpoints, epsabs=epsabs)

    floor = _SHELL_FLOOR * r
    limit_value = 2.0 * fprime_pole / K

    def subtracted(s):
        if s < floor:
            return limit_value
        return (f(pole + s) - f(pole - s)) / (K * s)

    shell_pts = [abs(p - pole) for p in d.breakpoints if abs(p - pole) < r]
    near = _quad(subtracted, 0.0, r, points=shell_pts, epsabs=epsabs)
    return far + near


def cost_J(d: NoiseDensity, K: float, epsabs: float = 1e-10) -> float:
    """Log-growth cost J(K) = E[log|1+BK|] by pole-aware adaptive quadrature."""
    if K == 0.0:
        raise DomainError("cost is defined for nonzero K (J(0) = 0 trivially)")

    def integrand(b):
        return eval_pdf(d, b) * math.log(abs(1.0 + b * K))

    points = list(d.breakpoints)
    if _pole_interior(d, K):
        points.append(b_sing(K))
    return _quad(integrand, d.support_lo, d.support_hi, points=points, epsabs=epsabs)


def reg_cost(d: NoiseDensity, K: float, eps: float, epsabs: float = 1e-10) -> float:
    """Cauchy-regularized cost E[log((1+BK)^2 + eps^2)] / 2."""
    if eps <= 0.0:
        raise ConfigurationError(f"eps must be positive, got {eps}")

    def integrand(b):
        v = 1.0 + b * K
        return eval_pdf(d, b) * 0.5 * math.log(v * v + eps * eps)

    points = list(d.breakpoints) + _pole_points(d, K, eps)
    return _quad(integrand, d.support_lo, d.support_hi, points=points, epsabs=epsabs)


def pv_gradient(d: NoiseDensity, K: float, epsabs: float = 1e-12) -> float:
    """dJ/dK in the principal-value sense (parity-shell quadrature at the pole)."""
    if K == 0.0:
        raise DomainError("gradient is undefined at K = 0")

    def h(b):
        return b * eval_pdf(d, b)

    if not _pole_interior(d, K):
        _guard_pole(d, K)

        def integrand(b):
            return h(b) / (1.0 + b * K)

        return _quad(integrand, d.support_lo, d.support_hi,
                     points=d.breakpoints, epsabs=epsabs)

    pole = b_sing(K)
    hprime = eval_pdf(d, pole) + pole * _dpdf_onesided(d, pole)
    return _pv_integral(h, hprime, d, K, epsabs=epsabs)


def reg_gradient(d: NoiseDensity, K: float, eps: float, epsabs: float = 1e-12) -> float:
    """dJ_eps/dK: smooth integrand, ordinary quadrature with pole as a panel edge."""
    if eps <= 0.0:
        raise ConfigurationError(f"eps must be positive, got {eps}")

    def integrand(b):
        v = 1.0 + b * K
        return eval_pdf(d, b) * b * v / (v * v + eps * eps)

    points = list(d.breakpoints) + _pole_points(d, K, eps)
    return _quad(integrand, d.support_lo, d.support_hi, points=points, epsabs=epsabs)


def _g(d: NoiseDensity, b: float) -> float:
    """g(b) = d/db [rho(b) b^2] = 2 b rho(b) + b^2 rho'(b)."""
    return 2.0 * b * eval_pdf(d, b) + b * b * _dpdf_onesided(d, b)


def _g_prime(d: NoiseDensity, b: float) -> float:
    return (
        2.0 * eval_pdf(d, b)
        + 4.0 * b * _dpdf_onesided(d, b)
        + b * b * _d2pdf_onesided(d, b)
    )


def hessian_decomposition(d: NoiseDensity, K: float, eps: float) -> HessianParts:
    """Second derivative of J_eps split into boundary and integral terms.

    At eps = 0 the integral term is the Hadamard finite-part value,
    evaluated with the same parity-shell scheme as the gradient; density
    breakpoints are registered as quadrature panel edges throughout.
    """
    if K == 0.0:
        raise DomainError("Hessian is undefined at K = 0")
    if eps < 0.0:
        raise ConfigurationError(f"eps must be >= 0, got {eps}")
    lo, hi = d.support_lo, d.support_hi

    def edge(b):
        v = 1.0 + b * K
        return eval_pdf(d, b) * b * b * v / (v * v + eps * eps)

    boundary = (edge(hi) - edge(lo)) / K

    if eps == 0.0:
        if _pole_interior(d, K):
            pole = _guard_pole(d, K)
            pv = _pv_integral(lambda b: _g(d, b), _g_prime(d, pole), d, K)
            integral = -pv / K
        else:
            _guard_pole(d, K)
            integral = -_quad(lambda b: _g(d, b) / (1.0 + b * K), lo, hi,
                              points=d.breakpoints) / K
    else:
        def integrand(b):
            v = 1.0 + b * K
            return _g(d, b) * v / (v * v + eps * eps)

        points = list(d.breakpoints) + _pole_points(d, K, eps)
        # the near-pole feature narrows with eps; 1e-10 absolute is ample for
        # every curvature consumer and keeps small-eps evaluations convergent
        integral = -_quad(integrand, lo, hi, points=points, epsabs=1e-10,
                          limit=400) / K

    return HessianParts(boundary_term=boundary, integral_term=integral)


def find_Kstar(d: NoiseDensity, xtol: float = 1e-10) -> float:
    """Unique root of the PV gradient on the pole-interior gain interval."""
    a, b = gain_bracket(d)
    pad = 1e-6 * abs(b - a)
    lo, hi = a + pad, b - pad
    f_lo, f_hi = pv_gradient(d, lo), pv_gradient(d, hi)
    if f_lo * f_hi > 0.0:
        raise RootNotFoundError(
            f"no sign change of dJ/dK on padded bracket [{lo:.6g}, {hi:.6g}]"
        )
    root = brentq(lambda K: pv_gradient(d, K), lo, hi, xtol=xtol)
    pole = b_sing(root)
    if not (d.support_lo < pole < d.support_hi):
        raise NumericalError(
            f"optimal gain {root:.10g} has pole {pole:.10g} outside the open support"
        )
    return float(root)


def find_Kstar_eps(d: NoiseDensity, eps: float, basin: tuple[float, float],
                   xtol: float = 1e-12) -> float:
    """Minimizer of J_eps on the basin, as the root of the regularized gradient."""
    lo, hi = basin
    f_lo, f_hi = reg_gradient(d, lo, eps), reg_gradient(d, hi, eps)
    if f_lo * f_hi > 0.0:
        raise PersistenceError(
            f"dJ_eps/dK has no sign change on [{lo:.6g}, {hi:.6g}] at eps={eps:g}; "
            "the regularized minimizer left the basin (eps too large)"
        )
    return float(brentq(lambda K: reg_gradient(d, K, eps), lo, hi, xtol=xtol))


def local_constants(d: NoiseDensity, Kstar: float, delta: float,
                    eps0: float = 0.05, grid_size: int = 41) -> LocalConstants:
    """Curvature bounds and geometry constants on [K* - delta, K* + delta].

    mu0 / L0 are the min / max of the finite-part Hessian over a gain
    grid; positivity of the regularized Hessian is additionally checked
    over the same grid crossed with eps in {eps0/2, eps0}, which is the
    uniform-in-eps content of the curvature bound.  tau is the
    pole-to-edge margin at K*; cbar_b is the largest bias coefficient
    pi rho(pole)/|K| seen on the grid.
    """
    if delta <= 0.0:
        raise ConfigurationError(f"delta must be positive, got {delta}")
    if grid_size < 2:
        raise ConfigurationError(f"grid_size must be >= 2, got {grid_size}")
    basin = (Kstar - delta, Kstar + delta)
    grid = np.linspace(basin[0], basin[1], grid_size)

    poles = -1.0 / grid
    if np.any(poles <= d.support_lo) or np.any(poles >= d.support_hi):
        raise DomainError(
            f"pole exits the open support for some K in [{basin[0]:.6g}, {basin[1]:.6g}]; "
            "shrink delta"
        )

    pole_star = b_sing(Kstar)
    tau = min(pole_star - d.support_lo, d.support_hi - pole_star)

    totals = [hessian_decomposition(d, float(K), 0.0).total for K in grid]
    mu0, L0 = min(totals), max(totals)
    for e in (eps0 / 2.0, eps0):
        reg = min(hessian_decomposition(d, float(K), e).total for K in grid)
        if reg <= 0.0:
            raise NumericalError(
                f"regularized curvature loses positivity at eps={e:g} "
                f"(min {reg:.4g}); shrink delta or eps0"
            )

    cbar = max(
        math.pi * eval_pdf(d, float(p)) / abs(float(K)) for K, p in zip(grid, poles)
    )
    return LocalConstants(mu0=mu0, L0=L0, tau=tau, delta=delta, cbar_b=cbar,
                          basin=basin)


# --- reference / ablation quadrature schemes ---------------------------------


def pv_gradient_symmetric_cutoff(d: NoiseDensity, K: float, h: float,
                                 epsabs: float = 1e-12) -> float:
    """Symmetric-cutoff evaluation: excise [pole - h, pole + h] and integrate.

    First-order accurate in h (error 2 h h'(pole)/K); used as the
    fixed-cutoff scheme in the quadrature ablation.
    """
    if not _pole_interior(d, K):
        return pv_gradient(d, K, epsabs=epsabs)
    pole = _guard_pole(d, K)
    lo, hi = d.support_lo, d.support_hi
    if h <= 0 or pole - h <= lo or pole + h >= hi:
        raise ConfigurationError(f"cutoff h={h:g} does not fit inside the support")

    def integrand(b):
        return b * eval_pdf(d, b) / (1.0 + b * K)

    left = _quad(integrand, lo, pole - h, points=d.breakpoints, epsabs=epsabs)
    right = _quad(integrand, pole + h, hi, points=d.breakpoints, epsabs=epsabs)
    return left + right


def pv_gradient_symmetric_cutoff_limit(d: NoiseDensity, K: float,
                                       h: float = 1e-6) -> float:
    """Richardson-extrapolated symmetric-cutoff limit (reference value).

    The plain cutoff has error c*h + O(h^3); combining h and h/2
    eliminates the linear term.
    """
    v_h = pv_gradient_symmetric_cutoff(d, K, h)
    v_h2 = pv_gradient_symmetric_cutoff(d, K, h / 2.0)
    return 2.0 * v_h2 - v_h


def pv_gradient_no_pole_info(d: NoiseDensity, K: float,
                             limit: int = 50) -> float:
    """Adaptive quadrature of the raw gradient integrand with the pole withheld.

    Stands in for an off-the-shelf black-box integrator: density
    breakpoints are still registered, the pole is not.  On a
    pole-interior gain the integrand is not Lebesgue integrable, so the
    returned value is whatever the adaptive scheme settles on; failures
    are recorded as the achieved value rather than raised.
    """
    import warnings
    from scipy.integrate import IntegrationWarning

    def integrand(b):
        v = 1.0 + b * K
        if v == 0.0:
            return 0.0   # epsilon-guard a black box would need to not crash
        return b * eval_pdf(d, b) / v

    pts = sorted(p for p in d.breakpoints if d.support_lo < p < d.support_hi)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        val, _ = quad(integrand, d.support_lo, d.support_hi,
                      points=pts or None, limit=limit)
    return val
