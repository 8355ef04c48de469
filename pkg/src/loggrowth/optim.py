"""Learning algorithms for the optimal stabilizing gain.

* ``pg_density_known`` -- projected mini-batch SGD with the oracle
  symmetric-pairing estimator, constant step 1/L0, and the accuracy-driven
  parameter schedule (eps, N, n*) that delivers E[J(K) - J*] <= eta.
* ``pg_density_unknown`` -- the two-phase KDE plug-in variant: an
  independent density-estimation batch (sample split), then projected SGD
  with the plug-in pairing estimator at the radius/batch scalings tied to
  the kernel order.
* ``pg_robbins_monro`` -- diminishing-step single-sample variant
  (alpha_n = 2/(mu0 (n+50))) with Polyak-Ruppert tail averaging.
* ``preliminary_phase`` -- SGD on the fixed-regularization cost (eps = 1)
  that drives any stabilizing initialization into the local basin at a
  sample cost independent of the target accuracy.
* ``plug_and_solve`` -- deterministic Newton on the PV first-order
  condition, for an exact density or a KDE surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .densities import NoiseDensity, eval_pdf, sample
from .errors import (
    ConfigurationError,
    IllConditionedError,
    NumericalError,
    PhaseFailureError,
)
from .estimators import EstimatorSpec, mc_variance, psi_naive, psi_paired, psi_plugin
from .kde import KdeModel, build_kde, kde_pv_gradient
from .pvcore import (
    LocalConstants,
    _quad,
    b_sing,
    find_Kstar,
    hessian_decomposition,
    pv_gradient,
)

__all__ = [
    "Alg2Params",
    "PgConfig",
    "PgTrace",
    "PhaseResult",
    "project",
    "pg_density_known",
    "pg_density_unknown",
    "pg_robbins_monro",
    "preliminary_phase",
    "plug_and_solve",
    "quadratic_gap",
    "default_delta",
]


def project(K, basin):
    """Clamp onto the closed basin interval (1-Lipschitz)."""
    lo, hi = basin
    if lo > hi:
        raise ConfigurationError(f"empty basin [{lo}, {hi}]")
    out = np.clip(K, lo, hi)
    return float(out) if np.ndim(K) == 0 else out


def quadratic_gap(K, Kstar: float, hess: float):
    """Local cost-gap proxy J(K) - J* ~= (H/2)(K - K*)^2."""
    diff = np.asarray(K, dtype=float) - Kstar
    out = 0.5 * hess * diff * diff
    return float(out) if np.ndim(K) == 0 else out


def default_delta(d: NoiseDensity, Kstar: float, margin: float = 0.05,
                  choices=None) -> float:
    """Largest basin half-width in {0.05, ..., 0.20} keeping the pole margin.

    The pole must stay at least ``margin`` inside the support for every
    gain in the basin.
    """
    if choices is None:
        choices = np.round(np.arange(0.05, 0.2001, 0.01), 4)
    best = None
    for delta in choices:
        ks = np.array([Kstar - delta, Kstar + delta])
        if np.any(ks >= 0.0):
            continue
        poles = -1.0 / ks
        m = min(poles.min() - d.support_lo, d.support_hi - poles.max())
        if m >= margin:
            best = float(delta)
    if best is None:
        raise ConfigurationError(
            f"no admissible basin half-width keeps the pole {margin:g} inside "
            f"the support around K*={Kstar:.4g}"
        )
    return best


@dataclass(frozen=True)
class Alg2Params:
    """Constants of the density-unknown schedule (kernel order and c-constants)."""

    s: int = 2
    c_R: float = 0.6
    c_1: float = 0.5
    c_h: float = 1.0
    C_sigma: float = 1.0

    def __post_init__(self):
        if self.s not in (2, 4):
            raise ConfigurationError(f"kernel order s must be 2 or 4, got {self.s}")


@dataclass
class PgConfig:
    """Configuration shared by the policy-gradient runs."""

    eta: float
    K0: float
    basin: tuple[float, float]
    consts: LocalConstants
    mode: str
    seed: int = 0
    eps: float | None = None                 # robbins_monro regularization
    alg2_params: Alg2Params | None = None
    kde_seed: int | None = None              # density-phase branch (alg2)

    def __post_init__(self):
        if self.mode not in ("alg1", "alg2", "robbins_monro"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.eta <= 0.0:
            raise ConfigurationError(f"target accuracy eta must be positive, got {self.eta}")
        lo, hi = self.basin
        if self.mode in ("alg1", "alg2") and not (lo <= self.K0 <= hi):
            raise ConfigurationError(
                f"K0={self.K0:.4g} outside basin [{lo:.4g}, {hi:.4g}]; "
                "run the preliminary phase first"
            )


@dataclass
class PgTrace:
    """Per-iteration record of one policy-gradient run."""

    steps: np.ndarray
    gains: np.ndarray
    grads: np.ndarray
    samples_used: dict
    tail_average: float | None = None
    final_gap_estimate: float | None = None
    params: dict = field(default_factory=dict)

    @property
    def iterates(self):
        return list(zip(self.steps.tolist(), self.gains.tolist(), self.grads.tolist()))

    @property
    def final_gain(self) -> float:
        return float(self.gains[-1])

    @property
    def returned_gain(self) -> float:
        return self.tail_average if self.tail_average is not None else self.final_gain


def _seed_key(seed) -> list[int]:
    return list(seed) if isinstance(seed, (list, tuple)) else [seed]


def _gap_reference(d: NoiseDensity, gap_ref=None) -> tuple[float, float]:
    if gap_ref is not None:
        return gap_ref
    Kstar = find_Kstar(d)
    return Kstar, hessian_decomposition(d, Kstar, 0.0).total


def _measured_sigma_star2(d: NoiseDensity, basin, eps: float, seed,
                          grid_points: int = 9, M: int = 40_000) -> float:
    """Empirical variance bound for the paired estimator over the basin."""
    worst = 0.0
    for j, K in enumerate(np.linspace(basin[0], basin[1], grid_points)):
        spec = EstimatorSpec("paired_oracle", eps, d)
        mv = mc_variance(spec, float(K), M, 2, seed_base=_seed_key(seed) + [55_579, j])
        worst = max(worst, mv.mean_var)
    return worst


def pg_density_known(d: NoiseDensity, cfg: PgConfig, gap_ref=None) -> PgTrace:
    """Projected mini-batch SGD with oracle pairing, constant step 1/L0."""
    if cfg.mode != "alg1":
        raise ConfigurationError(f"pg_density_known requires mode='alg1', got {cfg.mode!r}")
    c = cfg.consts
    eta = cfg.eta
    eps = eta / (3.0 * c.cbar_b)
    sigma2 = _measured_sigma_star2(d, cfg.basin, eps, cfg.seed)
    N = math.ceil(3.0 * sigma2 / (2.0 * c.mu0 * eta))
    n_star = math.ceil((c.L0 / c.mu0) * math.log(3.0 * c.L0 * c.delta**2 / (2.0 * eta)))

    root = np.random.SeedSequence(_seed_key(cfg.seed) + [88_001])
    children = root.spawn(n_star)
    K = float(cfg.K0)
    gains = np.empty(n_star)
    grads = np.empty(n_star)
    for n in range(n_star):
        B = sample(d, N, children[n])
        g = float(np.mean(psi_paired(B, K, eps, d)))
        K = project(K - g / c.L0, cfg.basin)
        gains[n] = K
        grads[n] = g

    Kstar, hess = _gap_reference(d, gap_ref)
    return PgTrace(
        steps=np.arange(1, n_star + 1),
        gains=gains,
        grads=grads,
        samples_used={"kde_phase": 0, "iteration_phase": n_star * N,
                      "total": n_star * N},
        tail_average=None,
        final_gap_estimate=quadratic_gap(K, Kstar, hess),
        params={"eta": eta, "eps": eps, "N": N, "n_star": n_star,
                "sigma_star2": sigma2},
    )


def pg_density_unknown(d: NoiseDensity, cfg: PgConfig, gap_ref=None) -> PgTrace:
    """Two-phase KDE plug-in policy gradient at the accuracy-driven scalings."""
    if cfg.mode != "alg2":
        raise ConfigurationError(f"pg_density_unknown requires mode='alg2', got {cfg.mode!r}")
    p = cfg.alg2_params if cfg.alg2_params is not None else Alg2Params()
    c = cfg.consts
    eta = cfg.eta
    s = p.s

    R = min(p.c_R * eta ** (1.0 / (2 * s)), c.tau / 2.0)
    eps = eta / (4.0 * c.cbar_b)
    K_min = min(abs(cfg.basin[0]), abs(cfg.basin[1]))
    if eps > K_min * R:
        raise ConfigurationError(
            f"eta={eta:g} too large: regularization eps={eps:.3g} exceeds "
            f"K_min*R={K_min * R:.3g}"
        )
    n1 = math.ceil(p.c_1 * eta ** (-(2 * s + 1) / (2 * s)))
    N = math.ceil(2.0 * p.C_sigma / (c.mu0 * R * eta))
    delta_bar = c.L0 * c.delta**2 / 2.0
    n_star = math.ceil((c.L0 / c.mu0) * math.log(4.0 * delta_bar / eta))

    kde_key = (_seed_key(cfg.kde_seed) if cfg.kde_seed is not None
               else _seed_key(cfg.seed) + [7_919])
    kde_samples = sample(d, n1, np.random.SeedSequence(kde_key))
    # bare rate-optimal bandwidth: the plug-in bias budget of the schedule
    # is calibrated against it (the sd-rescaled variant over-localizes at
    # these sample sizes and blows the bias floor)
    kde = build_kde(kde_samples, order_s=s, c_h=p.c_h, scale_by_sd=False)

    root = np.random.SeedSequence(_seed_key(cfg.seed) + [104_729])
    children = root.spawn(n_star)
    K = float(cfg.K0)
    gains = np.empty(n_star)
    grads = np.empty(n_star)
    for n in range(n_star):
        B = sample(d, N, children[n])
        g = float(np.mean(psi_plugin(B, K, eps, kde, R)))
        K = project(K - g / c.L0, cfg.basin)
        gains[n] = K
        grads[n] = g

    tail = float(np.mean(gains[n_star // 2:]))
    Kstar, hess = _gap_reference(d, gap_ref)
    return PgTrace(
        steps=np.arange(1, n_star + 1),
        gains=gains,
        grads=grads,
        samples_used={"kde_phase": n1, "iteration_phase": n_star * N,
                      "total": n1 + n_star * N},
        tail_average=tail,
        final_gap_estimate=quadratic_gap(tail, Kstar, hess),
        params={"eta": eta, "eps": eps, "R": R, "n1": n1, "N": N,
                "n_star": n_star, "s": s},
    )


def _rm_gains(d: NoiseDensity, n_iter: int, K0: float, basin, mu0: float,
              eps: float, seeds, store_grads: bool = False,
              estimator: str = "paired"):
    """Seed-vectorized Robbins-Monro core; returns gains (n_iter, n_seeds)."""
    n_seeds = len(seeds)
    draws = np.empty((n_seeds, n_iter))
    for i, s in enumerate(seeds):
        draws[i] = sample(d, n_iter, s)
    K = np.full(n_seeds, float(K0))
    gains = np.empty((n_iter, n_seeds))
    grads = np.empty((n_iter, n_seeds)) if store_grads else None
    lo, hi = basin
    for n in range(1, n_iter + 1):
        if estimator == "paired":
            g = psi_paired(draws[:, n - 1], K, eps, d)
        else:
            g = psi_naive(draws[:, n - 1], K, eps)
        K = np.clip(K - (2.0 / (mu0 * (n + 50))) * g, lo, hi)
        gains[n - 1] = K
        if store_grads:
            grads[n - 1] = g
    return gains, grads


def pg_robbins_monro(d: NoiseDensity, n_iter: int, cfg: PgConfig,
                     gap_ref=None) -> PgTrace:
    """Diminishing-step single-sample SGD with Polyak-Ruppert tail averaging."""
    if cfg.mode != "robbins_monro":
        raise ConfigurationError(
            f"pg_robbins_monro requires mode='robbins_monro', got {cfg.mode!r}"
        )
    if n_iter < 1:
        raise ConfigurationError(f"n_iter must be >= 1, got {n_iter}")
    eps = cfg.eps if cfg.eps is not None else 1e-5
    gains, grads = _rm_gains(d, n_iter, cfg.K0, cfg.basin, cfg.consts.mu0, eps,
                             [np.random.SeedSequence(_seed_key(cfg.seed))],
                             store_grads=True)
    gains = gains[:, 0]
    tail = float(np.mean(gains[n_iter // 2:]))
    Kstar, hess = _gap_reference(d, gap_ref)
    return PgTrace(
        steps=np.arange(1, n_iter + 1),
        gains=gains,
        grads=grads[:, 0],
        samples_used={"kde_phase": 0, "iteration_phase": n_iter, "total": n_iter},
        tail_average=tail,
        final_gap_estimate=quadratic_gap(tail, Kstar, hess),
        params={"eps": eps, "n_iter": n_iter},
    )


@dataclass(frozen=True)
class PhaseResult:
    K: float
    samples: int


def _single_sample_variance(d: NoiseDensity, K: float, eps: float) -> float:
    """Exact Var[psi(B; K, eps)] by quadrature (smooth integrand at eps ~ 1)."""
    def base(b):
        v = 1.0 + b * K
        return b * v / (v * v + eps * eps)

    pts = list(d.breakpoints) + [b_sing(K)]
    m1 = _quad(lambda b: base(b) * eval_pdf(d, b), d.support_lo, d.support_hi,
               points=pts, epsabs=1e-10)
    m2 = _quad(lambda b: base(b) ** 2 * eval_pdf(d, b), d.support_lo, d.support_hi,
               points=pts, epsabs=1e-10)
    return m2 - m1 * m1


def preliminary_phase(d: NoiseDensity, K0: float, K_set: tuple[float, float],
                      target_basin: tuple[float, float], seed: int = 0) -> PhaseResult:
    """Drive a stabilizing initialization into the target basin via SGD on J_1.

    Uses the fixed regularization eps = 1 (no cusp, bounded estimator);
    curvature constants come from Hessian sweeps over ``K_set`` and the
    batch size from the exact single-sample variance bound, so the total
    sample cost never depends on any target accuracy.
    """
    lo_t, hi_t = target_basin
    if lo_t <= K0 <= hi_t:
        return PhaseResult(K=float(K0), samples=0)
    lo_s, hi_s = K_set
    if not (lo_s <= K0 <= hi_s):
        raise ConfigurationError(f"K0={K0:.4g} outside the search set [{lo_s}, {hi_s}]")

    grid = np.linspace(lo_s, hi_s, 21)
    hess = [hessian_decomposition(d, float(K), 1.0).total for K in grid]
    mu1, L1 = min(hess), max(hess)
    if mu1 <= 0.0:
        raise ConfigurationError(
            f"J_1 is not strictly convex on [{lo_s}, {hi_s}] (min curvature {mu1:.3g})"
        )
    sigma1_sq = max(_single_sample_variance(d, float(K), 1.0) for K in grid)

    delta = 0.5 * (hi_t - lo_t)
    N0 = math.ceil(sigma1_sq / (mu1**2 * delta**4))
    T_max = math.ceil(4.0 * (L1 / mu1) * math.log((hi_s - lo_s) / delta))

    root = np.random.SeedSequence(_seed_key(seed) + [15_485_863])
    children = root.spawn(T_max)
    K = float(K0)
    for t in range(1, T_max + 1):
        B = sample(d, N0, children[t - 1])
        g = float(np.mean(psi_naive(B, K, 1.0)))
        K = project(K - g / L1, K_set)
        if lo_t <= K <= hi_t:
            return PhaseResult(K=K, samples=t * N0)
    raise PhaseFailureError(
        f"warm-up did not reach [{lo_t:.4g}, {hi_t:.4g}] in {T_max} iterations; "
        f"final K = {K:.6g}"
    )


def _kde_pv_gradient_deriv(m: KdeModel, K: float, step: float = 1e-6) -> float:
    # the segment-sum gradient is exact, so a central difference of it is the
    # best available Newton derivative for the tabulated surface
    return (kde_pv_gradient(m, K + step) - kde_pv_gradient(m, K - step)) / (2 * step)


def plug_and_solve(source, K_warm: float, basin: tuple[float, float],
                   mu0: float | None = None, tol: float = 1e-12,
                   max_iter: int = 20, return_trace: bool = False):
    """Newton on the PV first-order condition, projected to the basin.

    ``source`` is an exact :class:`NoiseDensity` (parity-shell quadrature,
    finite-part Hessian as the derivative) or a :class:`KdeModel`
    (closed-form principal values of the tabulated surface).  Stops when
    |gradient| <= tol; pure Newton, no line search.
    """
    if isinstance(source, KdeModel):
        grad = lambda K: kde_pv_gradient(source, K)
        deriv = lambda K: _kde_pv_gradient_deriv(source, K)
    elif isinstance(source, NoiseDensity):
        grad = lambda K: pv_gradient(source, K)
        deriv = lambda K: hessian_decomposition(source, K, 0.0).total
    else:
        raise ConfigurationError(f"unsupported source type {type(source).__name__}")

    K = project(float(K_warm), basin)
    residuals = []
    for _ in range(max_iter):
        g = grad(K)
        residuals.append(abs(g))
        if abs(g) <= tol:
            break
        h = deriv(K)
        floor = (mu0 / 2.0) if mu0 is not None else 0.0
        if h <= max(floor, 0.0):
            raise IllConditionedError(
                f"Newton derivative {h:.4g} at K={K:.6g} below the admissible floor"
            )
        K = project(K - g / h, basin)
    else:
        g = grad(K)
        residuals.append(abs(g))

    if residuals[-1] > tol:
        raise NumericalError(
            f"Newton did not converge: residual {residuals[-1]:.3e} after "
            f"{max_iter} iterations (trace: "
            + ", ".join(f"{r:.2e}" for r in residuals) + ")"
        )
    if return_trace:
        return float(K), np.asarray(residuals)
    return float(K)
