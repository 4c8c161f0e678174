"""Rolling-window out-of-sample evaluation on a returns panel.

For an estimation window of length ``n`` over ``T`` observations, the
weights fitted on observations ``t-n .. t-1`` are applied to the returns of
observation ``t``, for ``t = n .. T-1``. Each random sub-portfolio yields one
out-of-sample variance and one Sharpe ratio per estimator.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple

import numpy as np

from .ecdf import ECDF
from .errors import ConfigurationError, DataError
from .estimators import bona_fide_shrinkage, check_frahm_memmel, frahm_memmel, traditional_estimator
from .linalg import as_returns

BACKTEST_ESTIMATORS = ("traditional", "bona_fide", "frahm_memmel")


def _bona_fide_weights(Y):
    return bona_fide_shrinkage(Y).weights


ESTIMATOR_FUNCS: dict[str, Callable] = {
    "traditional": traditional_estimator,
    "bona_fide": _bona_fide_weights,
    "frahm_memmel": frahm_memmel,
}


def check_estimator(name: str, p: int, window_n: int) -> None:
    if name not in ESTIMATOR_FUNCS:
        raise ConfigurationError(
            f"estimator {name!r} cannot be backtested; choose from {BACKTEST_ESTIMATORS}"
        )
    if name == "frahm_memmel":
        check_frahm_memmel(p, window_n)


def rolling_returns(returns, estimator, window_n: int, return_weights: bool = False):
    """Realized returns of ``estimator`` refitted on a sliding window.

    ``returns`` is ``assets x T``; ``estimator`` is a name from
    :data:`BACKTEST_ESTIMATORS` or a callable mapping a ``p x n`` window to
    weights. The result has length ``T - window_n``.
    """
    R = as_returns(returns)
    p, T = R.shape
    if window_n < 2:
        raise ConfigurationError(f"window_n must be >= 2, got {window_n}")
    if T <= window_n:
        raise DataError(f"need more than window_n={window_n} observations, got T={T}")
    if isinstance(estimator, str):
        check_estimator(estimator, p, window_n)
        fit = ESTIMATOR_FUNCS[estimator]
    else:
        fit = estimator
    realized = np.empty(T - window_n)
    weights = np.empty((T - window_n, p)) if return_weights else None
    for k, t in enumerate(range(window_n, T)):
        w = fit(R[:, t - window_n : t])
        realized[k] = w @ R[:, t]
        if return_weights:
            weights[k] = w
    return (realized, weights) if return_weights else realized


class OOSStatistics(NamedTuple):
    variance: float
    sharpe: float
    sharpe_infinite: bool


def oos_statistics(realized) -> OOSStatistics:
    """Out-of-sample variance (divisor ``len - 1``) and Sharpe ratio ``mean / std``.

    With zero variance the Sharpe ratio is ``+-inf`` (``nan`` for a zero mean)
    and ``sharpe_infinite`` is set.
    """
    r = np.asarray(realized, dtype=float).ravel()
    if r.size < 2:
        raise DataError("need at least two realized returns")
    mu = r.sum() / r.size
    var = float(np.sum((r - mu) ** 2) / (r.size - 1))
    if var == 0.0:
        return OOSStatistics(0.0, float(np.sign(mu) * np.inf) if mu else float("nan"), True)
    return OOSStatistics(var, float(mu / np.sqrt(var)), False)


@dataclass
class BacktestConfig:
    window_n: int
    portfolio_p: int
    num_portfolios: int = 1000
    estimators: tuple = BACKTEST_ESTIMATORS
    seed: int = None

    def __post_init__(self):
        if self.seed is None:
            raise ConfigurationError("a seed is required")
        self.seed = int(self.seed)
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must fit in an unsigned 64-bit integer")
        self.window_n, self.portfolio_p = int(self.window_n), int(self.portfolio_p)
        self.num_portfolios = int(self.num_portfolios)
        if self.window_n < 2 or self.portfolio_p < 2:
            raise ConfigurationError("window_n and portfolio_p must both be >= 2")
        if self.num_portfolios < 1:
            raise ConfigurationError("num_portfolios must be >= 1")
        self.estimators = tuple(self.estimators)
        if not self.estimators:
            raise ConfigurationError("no estimators selected")
        for name in self.estimators:
            check_estimator(name, self.portfolio_p, self.window_n)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["estimators"] = list(self.estimators)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BacktestConfig":
        extra = set(d) - set(cls.__dataclass_fields__)
        if extra:
            raise ConfigurationError(f"unknown backtest config keys: {sorted(extra)}")
        return cls(**d)


@dataclass
class BacktestReport:
    config: BacktestConfig
    draws: np.ndarray  # num_portfolios x portfolio_p asset indices
    oos_variance: dict  # estimator -> array over draws
    oos_sharpe: dict
    sharpe_infinite: dict

    def ecdf(self, metric: str, estimator: str) -> ECDF:
        values = getattr(self, metric)[estimator]
        return ECDF(values[np.isfinite(values)] if metric == "oos_sharpe" else values)


def draw_subsets(universe: int, size: int, count: int, seed: int) -> np.ndarray:
    """Independent uniform subsets; draw ``d`` uses its own seeded stream."""
    out = np.empty((count, size), dtype=int)
    for d in range(count):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(d,)))
        out[d] = np.sort(rng.choice(universe, size=size, replace=False))
    return out


def run_backtest(returns, config: BacktestConfig, threads: int = 1) -> BacktestReport:
    R = as_returns(returns)
    universe, T = R.shape
    if universe < config.portfolio_p:
        raise DataError(f"universe has {universe} assets, fewer than portfolio_p={config.portfolio_p}")
    if T <= config.window_n:
        raise DataError(f"need more than window_n={config.window_n} observations, got T={T}")
    draws = draw_subsets(universe, config.portfolio_p, config.num_portfolios, config.seed)

    def one(d):
        sub = R[draws[d]]
        return {
            name: oos_statistics(rolling_returns(sub, name, config.window_n))
            for name in config.estimators
        }

    workers = threads if threads and threads > 0 else None
    if workers == 1:
        results = [one(d) for d in range(len(draws))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(len(draws))))

    def collect(field):
        return {
            name: np.array([getattr(res[name], field) for res in results])
            for name in config.estimators
        }

    return BacktestReport(
        config=config,
        draws=draws,
        oos_variance=collect("variance"),
        oos_sharpe=collect("sharpe"),
        sharpe_infinite=collect("sharpe_infinite"),
    )
