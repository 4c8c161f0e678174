"""Monte Carlo comparison of GMV estimators under a known population covariance.

Data follow ``Y = mu 1' + Sigma^{1/2} X`` with i.i.d. standardized innovations
``X``. Each (p, n) cell draws one population covariance (fixed across
repetitions unless ``redraw_sigma`` is set), then every repetition draws a
fresh sample and scores each estimator by its relative out-of-sample loss.

Random streams are derived from the master seed with
``SeedSequence(seed, spawn_key=...)``, so results do not depend on the order
in which repetitions execute or on the number of worker threads.
"""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .ecdf import ECDF
from .errors import ConfigurationError, DegenerateError
from .estimators import (
    as_target,
    bona_fide_from_covariance,
    check_frahm_memmel,
    frahm_memmel_from_covariance,
    oracle_shrinkage,
    traditional_gmv,
)
from .linalg import (
    CovarianceModel,
    build_covariance,
    haar_orthogonal,
    oracle_generalized_inverse,
    pseudo_inverse,
    sample_covariance,
)

log = logging.getLogger(__name__)

SCENARIOS = ("bounded_spectrum", "unbounded_spectrum", "fig1_spectrum", "custom")
ESTIMATORS = ("traditional", "bona_fide", "frahm_memmel", "oracle_shrinkage", "oracle_traditional")
DEFAULT_ESTIMATORS = ("traditional", "bona_fide", "frahm_memmel", "oracle_shrinkage")
SCHEDULE_BASE = {"bounded_spectrum": 9, "unbounded_spectrum": 9, "fig1_spectrum": 5}


@dataclass(frozen=True)
class Distribution:
    kind: str = "gaussian"
    df: int | None = None

    def __post_init__(self):
        if self.kind == "gaussian":
            if self.df is not None:
                raise ConfigurationError("gaussian innovations take no degrees of freedom")
        elif self.kind == "student_t":
            if self.df is None or int(self.df) != self.df or self.df < 3:
                raise ConfigurationError(
                    f"student_t needs an integer df >= 3 (finite variance), got {self.df}"
                )
        else:
            raise ConfigurationError(f"unknown distribution {self.kind!r}")

    @classmethod
    def parse(cls, spec) -> "Distribution":
        """Accept ``"gaussian"``, ``"student_t(5)"``, ``"t5"`` or a mapping."""
        if isinstance(spec, Distribution):
            return spec
        if isinstance(spec, dict):
            return cls(spec.get("kind", "gaussian"), spec.get("df"))
        text = str(spec).strip().lower()
        if text in ("gaussian", "normal"):
            return cls()
        m = re.fullmatch(r"(?:student_t|t)\(?\s*(\d+)\s*\)?", text)
        if m:
            return cls("student_t", int(m.group(1)))
        raise ConfigurationError(f"cannot parse distribution {spec!r}")

    def __str__(self):
        return "gaussian" if self.kind == "gaussian" else f"student_t({self.df})"


def draw_innovations(p: int, n: int, distribution: Distribution, rng: np.random.Generator):
    """``p x n`` i.i.d. entries with zero mean and unit variance."""
    if distribution.kind == "gaussian":
        return rng.standard_normal((p, n))
    df = distribution.df
    return rng.standard_t(df, size=(p, n)) * np.sqrt((df - 2) / df)


def generate_returns(Sigma: CovarianceModel, mu, n: int, distribution="gaussian", rng=None):
    """Draw ``Y = mu 1' + Sigma^{1/2} X`` (assets in rows)."""
    if n < 2:
        raise ConfigurationError(f"need n >= 2, got {n}")
    distribution = Distribution.parse(distribution)
    rng = np.random.default_rng() if rng is None else rng
    mu = np.broadcast_to(np.asarray(0.0 if mu is None else mu, dtype=float), (Sigma.p,))
    X = draw_innovations(Sigma.p, n, distribution, rng)
    return mu[:, None] + Sigma.sqrt @ X


def scenario_spectrum(scenario: str, p: int, custom_spectrum=None) -> np.ndarray:
    if scenario in ("bounded_spectrum", "unbounded_spectrum"):
        if p % 9:
            raise ConfigurationError(f"{scenario} needs p divisible by 9, got p={p}")
        k = p // 9
        spec = [2.0] * k + [5.0] * (4 * k) + [10.0] * (4 * k)
        if scenario == "unbounded_spectrum":
            spec[-1] = float(p)
        return np.array(spec)
    if scenario == "fig1_spectrum":
        if p % 5:
            raise ConfigurationError(f"fig1_spectrum needs p divisible by 5, got p={p}")
        k = p // 5
        return np.array([3.0] * k + [1.0] * (2 * k) + [0.5] * (2 * k))
    if scenario == "custom":
        if not custom_spectrum:
            raise ConfigurationError("custom scenario needs custom_spectrum: [[fraction, eigenvalue], ...]")
        spec = []
        for frac, value in custom_spectrum:
            count = frac * p
            if abs(count - round(count)) > 1e-9:
                raise ConfigurationError(f"fraction {frac} of p={p} is not an integer count")
            spec += [float(value)] * int(round(count))
        if len(spec) != p:
            raise ConfigurationError(f"custom_spectrum fractions cover {len(spec)} of {p} eigenvalues")
        return np.array(spec)
    raise ConfigurationError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")


def build_scenario(scenario: str, p: int, rng: np.random.Generator, custom_spectrum=None):
    """Population covariance for a named design with Haar-distributed eigenvectors."""
    spectrum = scenario_spectrum(scenario, p, custom_spectrum)
    return build_covariance(spectrum, haar_orthogonal(p, rng))


def default_schedule(scenario: str, c: float, levels: int = 6) -> list[tuple[int, int]]:
    """Geometric schedule ``p = base * 2^j`` with ``n = round(p / c)``.

    Pairs whose realized ratio misses ``c`` by more than 1% are dropped.
    """
    base = SCHEDULE_BASE.get(scenario, 9)
    out = []
    for j in range(levels):
        p = base * 2**j
        n = int(round(p / c))
        if n >= 2 and abs(p / n - c) <= 0.01 * c:
            out.append((p, n))
    if not out:
        raise ConfigurationError(f"no (p, n) pair in the default schedule matches c={c}")
    return out


@dataclass
class SimulationConfig:
    scenario: str = "bounded_spectrum"
    c_target: float | None = 0.5
    p_schedule: list = None
    distribution: Distribution = field(default_factory=Distribution)
    repetitions: int = 1000
    estimators: tuple = DEFAULT_ESTIMATORS
    target: str = "naive"
    seed: int = None
    redraw_sigma: bool = False
    custom_spectrum: list = None
    mean: float = 0.0

    def __post_init__(self):
        self.distribution = Distribution.parse(self.distribution)
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.seed is None:
            raise ConfigurationError("a seed is required")
        self.seed = int(self.seed)
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must fit in an unsigned 64-bit integer")
        if int(self.repetitions) != self.repetitions or self.repetitions < 1:
            raise ConfigurationError("repetitions must be a positive integer")
        self.repetitions = int(self.repetitions)
        self.estimators = tuple(self.estimators)
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown or not self.estimators:
            raise ConfigurationError(f"unknown estimators {sorted(unknown)}; choose from {ESTIMATORS}")
        if self.target not in ("naive", "gmv"):
            raise ConfigurationError("target must be 'naive' or 'gmv' (population GMV weights)")
        if self.c_target is not None and not self.c_target > 0:
            raise ConfigurationError("c_target must be positive")
        if self.p_schedule is None:
            if self.c_target is None:
                raise ConfigurationError("give either c_target or p_schedule")
            self.p_schedule = default_schedule(self.scenario, self.c_target)
        self.p_schedule = [(int(p), int(n)) for p, n in self.p_schedule]
        for p, n in self.p_schedule:
            if p < 2 or n < 2:
                raise ConfigurationError(f"(p, n) = ({p}, {n}): need p >= 2 and n >= 2")
            if self.c_target is not None and self.scenario != "custom":
                if abs(p / n - self.c_target) > 0.01 * self.c_target:
                    raise ConfigurationError(
                        f"(p, n) = ({p}, {n}) has p/n={p / n:.4g}, not within 1% of c={self.c_target}"
                    )
            scenario_spectrum(self.scenario, p, self.custom_spectrum)
            if "frahm_memmel" in self.estimators:
                check_frahm_memmel(p, n)
        if self.distribution.kind == "student_t" and self.distribution.df == 3:
            log.warning("student_t(3) has no fourth moment; results are experimental")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["distribution"] = str(self.distribution)
        d["estimators"] = list(self.estimators)
        d["p_schedule"] = [list(x) for x in self.p_schedule]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown simulation config keys: {sorted(extra)}")
        return cls(**d)


@dataclass
class CellResult:
    p: int
    n: int
    losses: dict  # estimator -> array of per-repetition relative losses

    def mean_loss(self, estimator: str) -> float:
        return float(np.mean(self.losses[estimator]))

    def ecdf(self, estimator: str) -> ECDF:
        return ECDF(self.losses[estimator])


@dataclass
class MonteCarloReport:
    config: SimulationConfig
    cells: list

    def cell(self, p: int, n: int) -> CellResult:
        for cell in self.cells:
            if (cell.p, cell.n) == (p, n):
                return cell
        raise KeyError((p, n))

    def summary_rows(self) -> list[tuple]:
        return [
            (est, cell.p, cell.n, cell.mean_loss(est))
            for cell in self.cells
            for est in self.config.estimators
        ]


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def score_estimators(
    Sigma: CovarianceModel, X: np.ndarray, estimators, target="naive", mean=0.0
) -> dict:
    """Relative loss of each estimator on one sample generated from innovations ``X``."""
    p, n = X.shape
    b = Sigma.gmv_weights if target == "gmv" else as_target(None, p).weights
    Y = Sigma.sqrt @ X
    if np.any(mean):
        Y = Y + np.broadcast_to(np.asarray(mean, dtype=float), (p,))[:, None]
    S = sample_covariance(Y)
    S_pinv, rank = pseudo_inverse(S, return_rank=True)
    S_oracle = None
    if {"oracle_shrinkage", "oracle_traditional"} & set(estimators):
        if rank == p:
            S_oracle = S_pinv
        else:
            S_oracle = oracle_generalized_inverse(Sigma, X - X.mean(axis=1, keepdims=True))
    out = {}
    for name in estimators:
        if name == "traditional":
            w = traditional_gmv(S_pinv)
        elif name == "bona_fide":
            w = bona_fide_from_covariance(S, S_pinv, n, b).weights
        elif name == "frahm_memmel":
            w = frahm_memmel_from_covariance(S, S_pinv, n, rank)
        elif name == "oracle_shrinkage":
            w = oracle_shrinkage(S_oracle, Sigma, b)
        elif name == "oracle_traditional":
            w = traditional_gmv(S_oracle)
        else:
            raise ConfigurationError(f"unknown estimator {name!r}")
        out[name] = Sigma.relative_loss(w)
    return out


def run_monte_carlo(config: SimulationConfig, threads: int = 1) -> MonteCarloReport:
    """Run every (p, n) cell of ``config``; deterministic given ``config.seed``."""
    cells = []
    workers = threads if threads and threads > 0 else None
    for i, (p, n) in enumerate(config.p_schedule):
        fixed_sigma = None
        if not config.redraw_sigma:
            fixed_sigma = build_scenario(config.scenario, p, _stream(config.seed, i, 0), config.custom_spectrum)

        def one(r, i=i, p=p, n=n, fixed_sigma=fixed_sigma):
            Sigma = fixed_sigma
            if Sigma is None:
                Sigma = build_scenario(
                    config.scenario, p, _stream(config.seed, i, 2, r), config.custom_spectrum
                )
            X = draw_innovations(p, n, config.distribution, _stream(config.seed, i, 1, r))
            try:
                return score_estimators(Sigma, X, config.estimators, config.target, config.mean)
            except DegenerateError as exc:
                raise DegenerateError(f"cell (p={p}, n={n}) repetition {r}: {exc}") from exc

        if workers == 1:
            results = [one(r) for r in range(config.repetitions)]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(one, range(config.repetitions)))
        losses = {
            est: np.array([res[est] for res in results]) for est in config.estimators
        }
        log.info("cell p=%d n=%d done: %s", p, n,
                 {k: round(float(v.mean()), 4) for k, v in losses.items()})
        cells.append(CellResult(p, n, losses))
    return MonteCarloReport(config, cells)


def population_relative_loss(Sigma: CovarianceModel, b) -> float:
    """``R_b`` of a target portfolio under the true covariance."""
    return Sigma.relative_loss(as_target(b, Sigma.p).weights)


__all__ = [
    "Distribution",
    "SimulationConfig",
    "MonteCarloReport",
    "CellResult",
    "generate_returns",
    "draw_innovations",
    "build_scenario",
    "scenario_spectrum",
    "default_schedule",
    "run_monte_carlo",
    "score_estimators",
    "population_relative_loss",
]
