"""Noise densities for the multiplicative actuation channel.

Four built-in test densities live on the common support [0.5, 1.5]:

* ``D1`` -- uniform,
* ``D2`` -- Beta(2,2) rescaled affinely onto the support,
* ``D3`` -- Gaussian N(1, 0.3^2) truncated and renormalized,
* ``D4`` -- symmetric triangular with apex at b = 1 (C^0 only; its
  derivative jumps at the apex, which is recorded as a breakpoint).

All densities carry exact closed-form pdf / derivative / inverse-CDF
surfaces, so sampling is deterministic given a seed and derivative
evaluation needs no finite differencing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigurationError, DomainError

__all__ = [
    "NoiseDensity",
    "make_builtin",
    "uniform",
    "eval_pdf",
    "eval_dpdf",
    "eval_d2pdf",
    "sample",
    "BUILTIN_IDS",
]

BUILTIN_IDS = ("D1", "D2", "D3", "D4")


@dataclass(frozen=True)
class NoiseDensity:
    """Immutable closed-form density on a compact positive support.

    ``breakpoints`` lists interior points where the derivative of the pdf
    jumps; quadrature routines register them as panel boundaries and
    derivative evaluation there requires an explicit side flag.
    """

    name: str
    support_lo: float
    support_hi: float
    smoothness: int
    breakpoints: tuple[float, ...]
    _pdf: Callable = field(repr=False)
    _dpdf: Callable = field(repr=False)       # (b, side) -> rho'(b)
    _d2pdf: Callable = field(repr=False)      # (b, side) -> rho''(b)
    _ppf: Callable = field(repr=False)        # u in [0,1] -> b

    def __post_init__(self):
        if not (0.0 < self.support_lo < self.support_hi):
            raise ConfigurationError(
                f"support must satisfy 0 < lo < hi, got [{self.support_lo}, {self.support_hi}]"
            )

    @property
    def width(self) -> float:
        return self.support_hi - self.support_lo

    def contains(self, b) -> bool:
        b = np.asarray(b)
        return bool(np.all((b >= self.support_lo) & (b <= self.support_hi)))


def _check_in_support(d: NoiseDensity, b) -> np.ndarray:
    arr = np.asarray(b, dtype=float)
    if np.any(arr < d.support_lo) or np.any(arr > d.support_hi):
        bad = arr[(arr < d.support_lo) | (arr > d.support_hi)]
        raise DomainError(
            f"{d.name}: evaluation point {float(np.atleast_1d(bad)[0]):.6g} outside "
            f"support [{d.support_lo}, {d.support_hi}]"
        )
    return arr


def eval_pdf(d: NoiseDensity, b):
    """Evaluate the pdf at ``b`` (scalar or array); raises outside the support."""
    arr = _check_in_support(d, b)
    out = d._pdf(arr)
    return float(out) if np.isscalar(b) or np.ndim(b) == 0 else out


def eval_dpdf(d: NoiseDensity, b, side: str | None = None):
    """One-sided derivative of the pdf.

    At a breakpoint the caller must pass ``side`` ("left" or "right"); away
    from breakpoints the flag is ignored.
    """
    arr = _check_in_support(d, b)
    if side not in (None, "left", "right"):
        raise ConfigurationError(f"side must be 'left' or 'right', got {side!r}")
    scalar = np.isscalar(b) or np.ndim(b) == 0
    if side is None and d.breakpoints:
        hits = np.isin(arr, np.asarray(d.breakpoints))
        if np.any(hits):
            raise DomainError(
                f"{d.name}: derivative at breakpoint requires an explicit side flag"
            )
    out = d._dpdf(arr, side)
    return float(out) if scalar else out


def eval_d2pdf(d: NoiseDensity, b, side: str | None = None):
    """Second derivative of the pdf, one-sided at breakpoints."""
    arr = _check_in_support(d, b)
    scalar = np.isscalar(b) or np.ndim(b) == 0
    if side is None and d.breakpoints:
        hits = np.isin(arr, np.asarray(d.breakpoints))
        if np.any(hits):
            raise DomainError(
                f"{d.name}: second derivative at breakpoint requires a side flag"
            )
    out = d._d2pdf(arr, side)
    return float(out) if scalar else out


def sample(d: NoiseDensity, n: int, seed) -> np.ndarray:
    """Draw ``n`` i.i.d. values by inverse CDF; deterministic given ``seed``.

    ``seed`` may be anything accepted by :func:`numpy.random.default_rng`
    (an int, a SeedSequence, or an existing Generator).
    """
    if n < 1:
        raise ConfigurationError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    u = rng.random(int(n))
    return d._ppf(u)


# --- built-in catalog --------------------------------------------------------


def uniform(lo: float, hi: float, name: str | None = None) -> NoiseDensity:
    """Uniform density on [lo, hi] (also used by the quadrature ablation)."""
    lo, hi = float(lo), float(hi)
    height = 1.0 / (hi - lo)

    def pdf(b):
        return np.full_like(np.asarray(b, dtype=float), height)

    def dpdf(b, side):
        return np.zeros_like(np.asarray(b, dtype=float))

    def ppf(u):
        return lo + (hi - lo) * u

    return NoiseDensity(
        name=name or f"uniform[{lo:g},{hi:g}]",
        support_lo=lo,
        support_hi=hi,
        smoothness=2,
        breakpoints=(),
        _pdf=pdf,
        _dpdf=dpdf,
        _d2pdf=dpdf,
        _ppf=ppf,
    )


def _make_d1() -> NoiseDensity:
    d = uniform(0.5, 1.5, name="D1")
    return d


def _make_d2() -> NoiseDensity:
    # Beta(2,2) on [0,1] has pdf 6x(1-x); affine rescale to [0.5, 1.5].
    def pdf(b):
        b = np.asarray(b, dtype=float)
        return 6.0 * (b - 0.5) * (1.5 - b)

    def dpdf(b, side):
        b = np.asarray(b, dtype=float)
        return 12.0 * (1.0 - b)

    def d2pdf(b, side):
        return np.full_like(np.asarray(b, dtype=float), -12.0)

    def ppf(u):
        # Trigonometric root of 3x^2 - 2x^3 = u on [0,1], shifted to [0.5, 1.5].
        u = np.asarray(u, dtype=float)
        phi = np.arccos(np.clip(1.0 - 2.0 * u, -1.0, 1.0)) / 3.0
        return 1.0 + 2.0 * np.cos(phi + 4.0 * np.pi / 3.0) * 0.5

    return NoiseDensity(
        name="D2",
        support_lo=0.5,
        support_hi=1.5,
        smoothness=2,
        breakpoints=(),
        _pdf=pdf,
        _dpdf=dpdf,
        _d2pdf=d2pdf,
        _ppf=ppf,
    )


_D3_SIGMA = 0.3
_D3_A = (0.5 - 1.0) / _D3_SIGMA
_D3_B = (1.5 - 1.0) / _D3_SIGMA
_D3_MASS = float(ndtr(_D3_B) - ndtr(_D3_A))   # erf-based, accurate to ~1e-16
_D3_NORM = 1.0 / (_D3_SIGMA * math.sqrt(2.0 * math.pi) * _D3_MASS)


def _make_d3() -> NoiseDensity:
    sig2 = _D3_SIGMA**2

    def pdf(b):
        b = np.asarray(b, dtype=float)
        return _D3_NORM * np.exp(-0.5 * (b - 1.0) ** 2 / sig2)

    def dpdf(b, side):
        b = np.asarray(b, dtype=float)
        return pdf(b) * (-(b - 1.0) / sig2)

    def d2pdf(b, side):
        b = np.asarray(b, dtype=float)
        return pdf(b) * (((b - 1.0) / sig2) ** 2 - 1.0 / sig2)

    def ppf(u):
        u = np.asarray(u, dtype=float)
        p = ndtr(_D3_A) + u * _D3_MASS
        return 1.0 + _D3_SIGMA * ndtri(p)

    return NoiseDensity(
        name="D3",
        support_lo=0.5,
        support_hi=1.5,
        smoothness=2,
        breakpoints=(),
        _pdf=pdf,
        _dpdf=dpdf,
        _d2pdf=d2pdf,
        _ppf=ppf,
    )


def _make_d4() -> NoiseDensity:
    def pdf(b):
        b = np.asarray(b, dtype=float)
        return np.where(b <= 1.0, 4.0 * (b - 0.5), 4.0 * (1.5 - b))

    def dpdf(b, side):
        b = np.asarray(b, dtype=float)
        if side == "left":
            return np.where(b <= 1.0, 4.0, -4.0)
        if side == "right":
            return np.where(b < 1.0, 4.0, -4.0)
        return np.where(b < 1.0, 4.0, -4.0)

    def d2pdf(b, side):
        return np.zeros_like(np.asarray(b, dtype=float))

    def ppf(u):
        u = np.asarray(u, dtype=float)
        lower = 0.5 + np.sqrt(np.maximum(u, 0.0) / 2.0)
        upper = 1.5 - np.sqrt(np.maximum(1.0 - u, 0.0) / 2.0)
        return np.where(u <= 0.5, lower, upper)

    return NoiseDensity(
        name="D4",
        support_lo=0.5,
        support_hi=1.5,
        smoothness=0,
        breakpoints=(1.0,),
        _pdf=pdf,
        _dpdf=dpdf,
        _d2pdf=d2pdf,
        _ppf=ppf,
    )


_BUILTINS = {"D1": _make_d1, "D2": _make_d2, "D3": _make_d3, "D4": _make_d4}


def make_builtin(name: str) -> NoiseDensity:
    """Construct one of the built-in test densities D1..D4."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown density id {name!r}; expected one of {', '.join(BUILTIN_IDS)}"
        ) from None
    return factory()
