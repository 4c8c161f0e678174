"""Closed-form high-dimensional limits of the GMV estimators.

``c`` is the limiting concentration ratio ``p/n`` and ``r_b`` the limiting
relative loss of the target portfolio. Every function excludes ``c == 1``,
where the limits are singular.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import ConfigurationError


@dataclass(frozen=True)
class LimitInputs:
    c: float
    r_b: float

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise ConfigurationError(f"c must be positive and finite, got {self.c}")
        if self.c == 1:
            raise ConfigurationError("c = 1 is a singular point of every limit")
        if not (math.isfinite(self.r_b) and self.r_b >= 0):
            raise ConfigurationError(f"r_b must be finite and non-negative, got {self.r_b}")


def _check_c(c: float, lo: float = 0.0, hi: float = math.inf) -> float:
    c = float(c)
    if not (lo < c < hi) or c == 1:
        raise ConfigurationError(f"c={c} outside the domain ({lo}, {hi}) \\ {{1}}")
    return c


def alpha_star_limit(inp: LimitInputs) -> float:
    """Limit of the oracle intensity for ``c < 1``."""
    c = _check_c(inp.c, 0.0, 1.0)
    num = (1.0 - c) * inp.r_b
    return num / (c + num)


def alpha_plus_limit(inp: LimitInputs) -> float:
    """Limit of the oracle intensity for ``c > 1`` (generalized-inverse estimator)."""
    c = _check_c(inp.c, 1.0)
    num = (c - 1.0) * inp.r_b
    return num / ((c - 1.0) ** 2 + c + num)


def alpha_limit(inp: LimitInputs) -> float:
    return alpha_star_limit(inp) if inp.c < 1 else alpha_plus_limit(inp)


def rel_loss_traditional(c: float) -> float:
    c = _check_c(c, 0.0, 1.0)
    return c / (1.0 - c)


def rel_loss_traditional_super(c: float) -> float:
    c = _check_c(c, 1.0)
    return (c * c - c + 1.0) / (c - 1.0)


def rel_loss_traditional_any(c: float) -> float:
    return rel_loss_traditional(c) if c < 1 else rel_loss_traditional_super(c)


def rel_loss_gse_limit(inp: LimitInputs) -> float:
    """Limiting relative loss of the oracle shrinkage estimator."""
    a = alpha_limit(inp)
    return a * a * rel_loss_traditional_any(inp.c) + (1.0 - a) ** 2 * inp.r_b


def variance_ratio_traditional(c: float) -> float:
    """Limit of (out-of-sample variance of the sample GMV portfolio) / sigma2_gmv."""
    c = _check_c(c)
    if c < 1:
        return 1.0 / (1.0 - c)
    return c * c / (c - 1.0)


def stieltjes_x(z: complex, c: float) -> complex:
    """Root of ``(1 - x)/x = c/(x - z)`` given by ``(1-c+z + sqrt((1-c+z)^2 - 4z)) / 2``.

    For ``Im z > 0`` the root with positive imaginary part is returned. For
    real ``z`` the square root must be real; a negative discriminant lies on
    the branch cut and raises. When the two terms of the sum nearly cancel
    (``c > 1``, ``z`` near 0) the root is evaluated as ``2z / (a - sqrt(d))``
    to keep full relative precision.
    """
    if not (c > 0 and math.isfinite(c)):
        raise ConfigurationError(f"c must be positive, got {c}")
    z = complex(z)
    a = 1.0 - c + z
    d = a * a - 4.0 * z
    if z.imag == 0:
        if d.real < 0:
            raise ConfigurationError(f"z={z.real} lies on the branch cut for c={c}")
        s = complex(math.sqrt(d.real))
    else:
        s = cmath.sqrt(d)
        if z.imag > 0 and (a + s).imag <= 0:
            s = -s
    plus = a + s
    minus = a - s
    if abs(plus) < 0.5 * abs(minus) and minus != 0:
        x = 2.0 * z / minus
    else:
        x = 0.5 * plus
    return complex(x)


def fixed_point_residual(z: complex, c: float) -> float:
    x = complex(stieltjes_x(z, c))
    return abs((1.0 - x) / x - c / (x - z))


def theta(z: float, c: float) -> float:
    """``z / (x(z) - z)``; finite near ``z = 0`` for ``c > 1``."""
    x = stieltjes_x(z, c).real
    return z / (x - z)


def theta_derivatives(c: float) -> tuple[float, float, float]:
    """``theta(0), theta'(0), theta''(0)`` in closed form for ``c > 1``."""
    c = _check_c(c, 1.0)
    return -(c - 1.0) / c, 1.0 / (c * (c - 1.0)), 2.0 / (c - 1.0) ** 3


def theta_derivatives_numeric(c: float, h: float = 1e-5) -> tuple[float, float]:
    """Central-difference ``theta'(0)`` and ``theta''(0)`` built from :func:`stieltjes_x`.

    The stencil uses the points ``+-h`` and ``+-3h`` so the removable
    singularity at ``z = 0`` is never evaluated; the wide outer pair keeps
    cancellation error in the second difference near ``1e-5`` relative.
    """
    c = _check_c(c, 1.0)
    near = (theta(h, c), theta(-h, c))
    far = (theta(3 * h, c), theta(-3 * h, c))
    first = (near[0] - near[1]) / (2.0 * h)
    second = (sum(far) - sum(near)) / (8.0 * h * h)
    return first, second


def curves(c_grid, r_b: float) -> list[dict]:
    """Limit curves over a grid of concentration ratios (one row per ``c``)."""
    rows = []
    for c in c_grid:
        inp = LimitInputs(float(c), float(r_b))
        rows.append(
            {
                "c": inp.c,
                "alpha": alpha_limit(inp),
                "rel_loss_traditional": rel_loss_traditional_any(inp.c),
                "rel_loss_gse": rel_loss_gse_limit(inp),
                "variance_ratio": variance_ratio_traditional(inp.c),
            }
        )
    return rows
