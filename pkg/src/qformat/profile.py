"""Distribution profiling: normal vs. Student's t fits and the KS-delta score.

Both fits are maximum likelihood: the normal fit uses the sample mean and
standard deviation, the t fit estimates location, scale and nu together.
``ks_delta = ks(normal) - ks(t)`` is positive when the t-distribution fits
better.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import betaln

from .tdist import normal_cdf, t_cdf

__all__ = [
    "TDistFit",
    "NormalFit",
    "ProfileRow",
    "ks_distance",
    "fit_normal",
    "fit_student_t",
    "t_loglik",
    "ks_delta",
    "profile_tensor_set",
    "NU_MIN",
    "NU_MAX",
]

NU_MIN = 0.5
NU_MAX = 200.0
NU_GRID = np.geomspace(NU_MIN, NU_MAX, 25)
MIN_SAMPLES = 30
DOWNSAMPLE_CAP = 1_000_000

_EM_RTOL = 1e-12
_EM_MAXITER = 2000


@dataclass(frozen=True)
class TDistFit:
    nu: float
    scale: float
    loc: float
    loglik: float
    ks: float


@dataclass(frozen=True)
class NormalFit:
    sigma: float
    loc: float
    loglik: float
    ks: float


@dataclass(frozen=True)
class ProfileRow:
    """One CSV row. Per-tensor rows carry that tensor's fits; the aggregate
    row carries the mean over tensors and the population variance of nu."""

    tensor: str
    nu: float
    scale: float
    ks_t: float
    sigma: float
    ks_normal: float
    ks_delta: float
    nu_var: float = 0.0


def ks_distance(samples, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Two-sided sup distance between the empirical CDF of sorted
    ``samples`` and ``cdf``."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    n = x.size
    if n < 1:
        raise ValueError("ks_distance needs at least one sample")
    if np.any(x[1:] < x[:-1]):
        raise ValueError("samples must be sorted ascending")
    f = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, n + 1, dtype=np.float64)
    d = max(np.max(np.abs(f - i / n)), np.max(np.abs(f - (i - 1) / n)))
    return float(min(max(d, 0.0), 1.0))


def _prepare(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite values")
    return x


def fit_normal(samples) -> NormalFit:
    x = _prepare(samples)
    loc = float(np.mean(x))
    sigma = float(np.std(x))
    if not sigma > 0:
        raise ValueError("degenerate data: zero variance")
    z = (x - loc) / sigma
    loglik = float(-x.size * (math.log(sigma) + 0.5 * math.log(2 * math.pi)) - 0.5 * np.sum(z * z))
    ks = ks_distance(np.sort(x), lambda v: normal_cdf((v - loc) / sigma))
    return NormalFit(sigma=sigma, loc=loc, loglik=loglik, ks=ks)


def t_loglik(y2: np.ndarray, nu: float, scale: float) -> float:
    """Log-likelihood of centred squared samples under ``scale * T(nu)``."""
    n = y2.size
    const = -betaln(0.5 * nu, 0.5) - 0.5 * math.log(nu) - math.log(scale)
    return float(n * const - 0.5 * (nu + 1) * np.sum(np.log1p(y2 / (nu * scale * scale))))


def _loc_scale_mle(x: np.ndarray, nu: float, loc: float, scale: float) -> tuple[float, float]:
    # EM for fixed nu: w = (nu + 1) / (nu + r^2 / s^2), loc = sum(w x) / sum(w),
    # s^2 = mean(w r^2). Monotone in likelihood from any start.
    s2 = scale * scale
    for _ in range(_EM_MAXITER):
        r = x - loc
        w = (nu + 1.0) / (nu + r * r / s2)
        new_loc = float(np.dot(w, x) / np.sum(w))
        r = x - new_loc
        new_s2 = float(np.mean(w * r * r))
        done = abs(new_s2 - s2) <= _EM_RTOL * s2 and abs(new_loc - loc) <= _EM_RTOL * math.sqrt(new_s2)
        loc, s2 = new_loc, new_s2
        if done:
            break
    return loc, math.sqrt(s2)


def fit_student_t(samples) -> TDistFit:
    """Maximum-likelihood location-scale t fit.

    A 25-point log-spaced grid over nu in [0.5, 200] with location and scale
    profiled out at each point, then a bounded 1-D refinement of log(nu)
    between the neighbours of the best grid point. Location starts at the
    median, so heavy-tailed data whose mean is unstable still fits.
    """
    x = _prepare(samples)
    med = float(np.median(x))
    mad = float(np.median(np.abs(x - med)))
    if not float(np.std(x)) > 0:
        raise ValueError("degenerate data: zero variance")
    start = mad / 0.6745 if mad > 0 else float(np.std(x))

    def profile_ll(nu: float) -> tuple[float, float, float]:
        loc, s = _loc_scale_mle(x, nu, med, start)
        r = x - loc
        return t_loglik(r * r, nu, s), loc, s

    lls = [profile_ll(nu)[0] for nu in NU_GRID]
    best = int(np.argmax(lls))
    lo = math.log(NU_GRID[max(best - 1, 0)])
    hi = math.log(NU_GRID[min(best + 1, len(NU_GRID) - 1)])
    # xatol on log(nu) is a relative tolerance on nu
    res = minimize_scalar(lambda lnu: -profile_ll(math.exp(lnu))[0], bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-4})
    nu = float(math.exp(res.x))
    loglik, loc, scale = profile_ll(nu)
    # the bounded search never evaluates its end points; keep a grid point if it wins
    if lls[best] > loglik:
        nu = float(NU_GRID[best])
        loglik, loc, scale = profile_ll(nu)
    ks = ks_distance(np.sort(x), lambda v: t_cdf((v - loc) / scale, nu))
    return TDistFit(nu=nu, scale=scale, loc=loc, loglik=loglik, ks=ks)


def ks_delta(samples) -> float:
    """``ks(normal fit) - ks(t fit)``; positive favours the t-distribution."""
    return fit_normal(samples).ks - fit_student_t(samples).ks


def _downsample(x: np.ndarray, cap: int, seed: int) -> np.ndarray:
    if x.size <= cap:
        return x
    rng = np.random.default_rng(seed)
    return x[np.sort(rng.choice(x.size, size=cap, replace=False))]


def profile_tensor_set(tensors: Sequence[tuple[str, np.ndarray]], seed: int = 0,
                       cap: int = DOWNSAMPLE_CAP) -> list[ProfileRow]:
    """Fit every tensor and append an aggregate row named ``"ALL"``.

    Tensors larger than ``cap`` elements are uniformly downsampled without
    replacement using ``seed``.
    """
    if not tensors:
        raise ValueError("profile_tensor_set needs at least one tensor")
    rows = []
    for name, data in tensors:
        x = _downsample(np.asarray(data, dtype=np.float64).ravel(), cap, seed)
        nf = fit_normal(x)
        tf = fit_student_t(x)
        rows.append(ProfileRow(name, tf.nu, tf.scale, tf.ks, nf.sigma, nf.ks, nf.ks - tf.ks))
    nus = np.array([r.nu for r in rows])
    rows.append(ProfileRow(
        "ALL",
        nu=float(nus.mean()),
        scale=float(np.mean([r.scale for r in rows])),
        ks_t=float(np.mean([r.ks_t for r in rows])),
        sigma=float(np.mean([r.sigma for r in rows])),
        ks_normal=float(np.mean([r.ks_normal for r in rows])),
        ks_delta=float(np.mean([r.ks_delta for r in rows])),
        nu_var=float(nus.var()),
    ))
    return rows
