"""Closed forms for the two solvable expert-information models.

Normal observations with normal expert spread, and exponential observations
with moment-matched gamma expert spread. Both admit explicit limits, slope
and score-moment constants, asymptotic variances and mean square errors,
which drive the efficiency solvers behind the precision/sample-size
trade-off surfaces.

Where two closed-form candidates circulate for the same constant (they
differ in the sign of a variance interaction term), both are exposed:
the ``*_variant`` fields hold the alternative, while the main fields hold
the value confirmed by direct differentiation and by simulation (see the
simulation harness, which discriminates between the candidates). All
downstream consumers use the confirmed values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize


@dataclass(frozen=True)
class NormalNormalSpec:
    """Normal location model with normal expert spread around noisy centers.

    The expert centers are the observation plus a noise variable with mean
    ``noise_mean``, standard deviation ``noise_sd`` and correlation
    ``noise_corr`` with the observation.
    """

    true_location: float
    model_sd: float = 1.0
    noise_mean: float = 0.0
    noise_sd: float = 0.0
    expert_sd: float = 0.0
    noise_corr: float = 0.0

    def __post_init__(self) -> None:
        if self.model_sd <= 0:
            raise ValueError("model_sd must be positive")
        if self.noise_sd < 0 or self.expert_sd < 0:
            raise ValueError("standard deviations must be nonnegative")
        if not -1.0 <= self.noise_corr <= 1.0:
            raise ValueError("noise_corr must lie in [-1, 1]")


@dataclass(frozen=True)
class ExpGammaSpec:
    """Exponential rate model with gamma expert spread scaling with the draw."""

    true_rate: float
    expert_var: float = 0.0

    def __post_init__(self) -> None:
        if self.true_rate <= 0:
            raise ValueError("true_rate must be positive")
        if self.expert_var < 0:
            raise ValueError("expert_var must be nonnegative")
        if self.expert_var * self.true_rate >= 1.0:
            raise ValueError(
                "expert_var * true_rate must stay below 1 for a finite limit"
            )


@dataclass(frozen=True)
class ModelCharacteristics:
    """Population-level constants of an expert-information model.

    ``variance`` is the asymptotic variance of the estimator (score second
    moment over squared slope). ``slope_variant`` / ``variance_variant``
    hold the alternative closed-form candidates where two circulate; the
    main fields are the derivative-verified ones that simulation matches.
    """

    limit: float
    bias: float
    slope: float
    score_moment: float
    variance: float
    slope_variant: float | None = None
    variance_variant: float | None = None

    def amse(self, n: float) -> float:
        """Asymptotic mean square error at sample size n (real n allowed)."""
        if n < 1:
            raise ValueError("n must be at least 1")
        return self.variance / n + self.bias**2


def nn_characteristics(spec: NormalNormalSpec) -> ModelCharacteristics:
    """Limit, slope, score moment and variance for the normal model.

    The limit is the true location shifted by the noise mean; the variance
    equals the variance of observation-plus-noise and does not depend on
    the expert spread. ``variance_variant`` records an alternative
    Gaussian-vector expansion of that variance which does not match
    Var(X + Y); it is exposed for comparison only.
    """
    s1, s2 = spec.model_sd, spec.noise_sd
    rho = spec.noise_corr
    denom = s1**2 + spec.expert_sd**2
    var_sum = s1**2 + s2**2 + 2.0 * rho * s1 * s2
    slope = 1.0 / denom
    return ModelCharacteristics(
        limit=spec.true_location + spec.noise_mean,
        bias=spec.noise_mean,
        slope=slope,
        score_moment=var_sum / denom**2,
        variance=var_sum,
        slope_variant=None,
        variance_variant=s1**2 + 2.0 * s2**2 + rho * s1 * s2,
    )


@dataclass(frozen=True)
class OptimalNoise:
    """Noise parameters minimizing the normal-model mean square error.

    ``noise_sd_sq_formula`` is the quoted closed-form candidate for the
    optimal squared noise spread; ``noise_sd_numeric`` is the numerical
    minimizer of Var(X + Y) over the noise spread. The two disagree for
    negative correlation, which ``agrees`` records; consumers should use
    the numeric value.
    """

    noise_mean: float
    noise_sd_sq_formula: float
    noise_sd_numeric: float
    agrees: bool


def nn_optimal_noise(spec: NormalNormalSpec) -> OptimalNoise:
    """Noise mean and spread minimizing the asymptotic mean square error.

    The mean square error is Var(X + Y)/n plus the squared noise mean, so
    the optimal mean is zero and the optimal spread minimizes the variance
    of the sum for the given correlation.
    """
    s1, rho = spec.model_sd, spec.noise_corr
    formula = max(-rho * s1**2 / 4.0, 0.0)
    var_sum = lambda s2: s1**2 + s2**2 + 2.0 * rho * s1 * s2
    res = optimize.minimize_scalar(
        var_sum, bounds=(0.0, 10.0 * s1 * (1.0 + abs(rho)) + 1.0), method="bounded",
        options={"xatol": 1e-12},
    )
    numeric = float(res.x) if res.x > 1e-9 else 0.0
    return OptimalNoise(
        noise_mean=0.0,
        noise_sd_sq_formula=formula,
        noise_sd_numeric=numeric,
        agrees=math.isclose(formula, numeric**2, rel_tol=1e-6, abs_tol=1e-9),
    )


def eg_characteristics(spec: ExpGammaSpec) -> ModelCharacteristics:
    """Limit, slope, score moment and variance for the exponential model.

    Derivation sketch: with rate limit xi solving the mean estimating
    equation, the per-draw score at xi is (1 - s2*r0) * (X - 1/r0) for true
    rate r0 and expert variance scale s2, so the score moment is
    (1/r0 - s2)^2 and the slope of the mean score is
    (1/r0 - s2)^2 * (1 - r0*s2). The variance follows as
    r0^2 / (1 - s2*r0)^4 and is confirmed both by the delta method on the
    explicit root 1/(mean - s2) and by simulation. The ``*_variant``
    fields carry the circulating alternative (slope factor 1 + r0*s2 with
    a negative sign, variance 1/(1/r0 - r0*s2^2)^2), which simulation
    rejects.
    """
    r0, s2 = spec.true_rate, spec.expert_var
    limit = 1.0 / (1.0 / r0 - s2)
    base = (1.0 / r0 - s2) ** 2
    slope = base * (1.0 - r0 * s2)
    score_moment = base
    variance = r0**2 / (1.0 - s2 * r0) ** 4
    return ModelCharacteristics(
        limit=limit,
        bias=limit - r0,
        slope=slope,
        score_moment=score_moment,
        variance=variance,
        slope_variant=-base * (1.0 + r0 * s2),
        variance_variant=1.0 / (1.0 / r0 - r0 * s2**2) ** 2,
    )


# ---------------------------------------------------------------------------
# efficiency relative to an oracle expert


def efficiency(spec: ExpGammaSpec, n: float) -> float:
    """Mean square error ratio against an exact-information oracle at the same n.

    Equals 1 only for a perfect expert and grows without bound as either
    the expert variance approaches its feasibility limit or n grows with a
    fixed bias.
    """
    ch = eg_characteristics(spec)
    oracle = spec.true_rate**2 / n
    return ch.amse(n) / oracle


def solve_sigma(e: float, n: float, true_rate: float) -> float:
    """Expert spread achieving a prescribed efficiency at sample size n.

    Root of efficiency(sigma; n) = e over sigma in [0, sqrt(1/true_rate));
    e = 1 corresponds to the oracle itself.
    """
    if e < 1.0:
        raise ValueError("efficiency targets below 1 are unattainable")
    if n < 1:
        raise ValueError("n must be at least 1")
    if e == 1.0:
        return 0.0
    sigma_max = math.sqrt(1.0 / true_rate)

    def gap(sigma: float) -> float:
        return efficiency(ExpGammaSpec(true_rate, sigma * sigma), n) - e

    hi = sigma_max * (1.0 - 1e-12)
    if gap(hi) < 0:
        raise ValueError(f"no expert spread below {sigma_max:g} reaches efficiency {e:g}")
    return float(optimize.brentq(gap, 0.0, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps))


def solve_n(n0: float, sigma: float, true_rate: float) -> float:
    """Sample size at which the expert matches an oracle of size n0.

    Solves AMSE_expert(n) = true_rate^2 / n0 for real n (real n0 allowed,
    the matching equation being continuous). Infeasible when the squared
    bias alone already exceeds the oracle mean square error, in which case
    no finite sample size helps.
    """
    if n0 < 1:
        raise ValueError("n0 must be at least 1")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0.0:
        return float(n0)
    ch = eg_characteristics(ExpGammaSpec(true_rate, sigma * sigma))
    oracle = true_rate**2 / n0
    headroom = oracle - ch.bias**2
    if headroom <= 0:
        raise ValueError(
            f"squared bias {ch.bias**2:.3e} exceeds the oracle mean square error "
            f"{oracle:.3e}; no finite sample size matches the oracle"
        )
    return float(ch.variance / headroom)


@dataclass(frozen=True)
class EfficiencySurface:
    """Grid of solver outputs with per-cell diagnostics.

    ``values[i, j]`` solves the cell (row_axis[i], col_axis[j]); infeasible
    cells hold NaN and their messages are listed in ``failures``.
    """

    kind: str
    row_name: str
    col_name: str
    row_axis: np.ndarray
    col_axis: np.ndarray
    values: np.ndarray
    failures: list[tuple[int, int, str]]


def _check_axis(name: str, values) -> np.ndarray:
    axis = np.asarray(values, dtype=float)
    if axis.ndim != 1 or axis.size < 1:
        raise ValueError(f"{name} axis must be a nonempty 1-d grid")
    if axis.size > 1 and not np.all(np.diff(axis) > 0):
        raise ValueError(f"{name} axis must be strictly increasing")
    return axis


def surface_grid(kind: str, row_axis, col_axis, true_rate: float) -> EfficiencySurface:
    """Apply an efficiency solver cell-wise over a grid.

    ``kind="sigma_of_e_n"`` solves the required spread over (efficiency,
    sample size) cells; ``kind="n_of_n0_sigma"`` solves the required sample
    size over (oracle size, spread) cells.
    """
    if kind == "sigma_of_e_n":
        rows = _check_axis("efficiency", row_axis)
        cols = _check_axis("n", col_axis)
        solver: Callable[[float, float], float] = \
            lambda e, n: solve_sigma(e, n, true_rate)
        row_name, col_name = "efficiency", "n"
    elif kind == "n_of_n0_sigma":
        rows = _check_axis("n0", row_axis)
        cols = _check_axis("sigma", col_axis)
        solver = lambda n0, s: solve_n(n0, s, true_rate)
        row_name, col_name = "n0", "sigma"
    else:
        raise ValueError(f"unknown surface kind {kind!r}")
    values = np.full((rows.size, cols.size), np.nan)
    failures: list[tuple[int, int, str]] = []
    for i, r in enumerate(rows):
        for j, cval in enumerate(cols):
            try:
                values[i, j] = solver(r, cval)
            except ValueError as exc:
                failures.append((i, j, str(exc)))
    return EfficiencySurface(kind, row_name, col_name, rows, cols, values, failures)
