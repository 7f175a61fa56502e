"""Sample-size planning and per-configuration summary statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


class InsufficientDataError(ValueError):
    """Raised when a statistic needs more observations than were given."""


# Wichura (1988), algorithm AS 241 / PPND16: relative accuracy about 1e-16.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _ratio(num: tuple[float, ...], den: tuple[float, ...], x: float) -> float:
    top = bot = 0.0
    for a, b in zip(reversed(num), reversed(den)):
        top = top * x + a
        bot = bot * x + b
    return top / bot


def normal_quantile(p: float) -> float:
    """Inverse of the standard normal CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in the open interval (0, 1), got {p!r}")
    q = p - 0.5
    if abs(q) <= 0.425:
        return q * _ratio(_A, _B, 0.180625 - q * q)
    r = math.sqrt(-math.log(min(p, 1.0 - p)))
    if r <= 5.0:
        z = _ratio(_C, _D, r - 1.6)
    else:
        z = _ratio(_E, _F, r - 5.0)
    return -z if q < 0 else z


Z_975 = normal_quantile(0.975)


@dataclass(frozen=True)
class PowerParams:
    alpha: float = 0.05
    power: float = 0.8
    effect_size: float = 0.5
    variance: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.power < 1.0:
            raise ValueError(f"power must lie in (0, 1), got {self.power}")
        if not self.effect_size > 0.0:
            raise ValueError(f"effect_size must be > 0, got {self.effect_size}")
        if not self.variance >= 0.0:
            raise ValueError(f"variance must be >= 0, got {self.variance}")


def sample_size_exact(params: PowerParams) -> float:
    """n = 2 * ((z_{1-alpha/2} + z_{power}) / effect)^2 * variance, before rounding."""
    z_alpha = normal_quantile(1.0 - params.alpha / 2.0)
    z_beta = normal_quantile(params.power)
    return 2.0 * ((z_alpha + z_beta) / params.effect_size) ** 2 * params.variance


def required_sample_size(params: PowerParams) -> int:
    """Rounded-up sample size, never below 2."""
    return max(2, math.ceil(sample_size_exact(params)))


@dataclass(frozen=True)
class Summary:
    n: int
    mean: float
    variance: float
    std_dev: float
    min: float
    max: float
    ci95_half_width: float


def summarize(samples: Sequence[float]) -> Summary:
    xs = [float(x) for x in samples]
    n = len(xs)
    if n < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {n}")
    lo, hi = min(xs), max(xs)
    mean = min(max(math.fsum(xs) / n, lo), hi)
    variance = math.fsum((x - mean) ** 2 for x in xs) / (n - 1)
    std_dev = math.sqrt(variance)
    return Summary(
        n=n,
        mean=mean,
        variance=variance,
        std_dev=std_dev,
        min=lo,
        max=hi,
        ci95_half_width=Z_975 * std_dev / math.sqrt(n),
    )
