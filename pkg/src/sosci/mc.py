"""Monte-Carlo coverage engine.

Replicates are drawn in fixed-size blocks, and block b always comes from the
generator `seeded_rng(seed, _STREAM_REPS, b)`.  Counts are integers summed
over blocks, so results are byte-identical on replay and independent of
execution order: running blocks across a thread pool (`n_jobs > 1`) gives
exactly the sequential answer.

Three dedicated streams are derived from one scenario seed: the covariance
realization (for models with random parameters), the parameter draw, and the
replicate blocks.  Everything downstream is a pure function of the scenario.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .baselines import MethodLabel, fcw_constants, method_tail_levels
from .bivariate import c_plus
from .dist import (
    NORMAL,
    CovarianceModel,
    ShiftFamily,
    cholesky,
    seeded_rng,
    student_t_family,
)

__all__ = [
    "Scenario",
    "CoverageReport",
    "build_covariance",
    "resolve_theta",
    "run_coverage",
    "estimate_b_probability",
    "scenario_from_dict",
    "load_scenario",
]

_BLOCK = 4096
_STREAM_COV, _STREAM_THETA, _STREAM_REPS = 1, 2, 3

_PANELS = ("all_normal", "half_normal_half_t5")
_THETA_RULES = ("uniform", "fixed")


@dataclass(frozen=True)
class Scenario:
    """One simulation cell: dimension, dependence, signal, and noise panel.

    theta_rule "uniform" draws theta ~ Uniform(-1, 1) * eta once per scenario
    from the dedicated parameter stream; "fixed" uses `theta` as given and
    ignores eta.  Panel "half_normal_half_t5" gives the first m/2 coordinates
    normal errors and the last m/2 Student-t(t_df) errors, the two halves
    independent with covariance taken from the matching diagonal blocks.
    """

    m: int
    covariance: CovarianceModel
    reps: int
    seed: int
    eta: float = 0.0
    theta_rule: str = "uniform"
    theta: tuple[float, ...] | None = None
    panel: str = "all_normal"
    t_df: int = 5

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.covariance.dimension != self.m:
            raise ValueError(
                f"covariance dimension {self.covariance.dimension} != m {self.m}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.theta_rule not in _THETA_RULES:
            raise ValueError(f"unknown theta_rule {self.theta_rule!r}")
        if self.theta_rule == "fixed":
            if self.theta is None or len(self.theta) != self.m:
                raise ValueError("theta_rule='fixed' needs a theta of length m")
        elif self.theta is not None:
            raise ValueError("theta is only accepted with theta_rule='fixed'")
        if not math.isfinite(self.eta) or self.eta < 0.0:
            raise ValueError(f"eta must be finite and >= 0, got {self.eta!r}")
        if self.panel not in _PANELS:
            raise ValueError(f"unknown panel {self.panel!r}")
        if self.panel == "half_normal_half_t5" and self.m % 2:
            raise ValueError("the mixed panel needs an even m")
        if self.t_df < 1:
            raise ValueError("t_df must be >= 1")


def build_covariance(model: CovarianceModel, seed) -> np.ndarray:
    """Realize a covariance matrix; random ingredients come from the model
    stream of `seed`, so the same seed always gives the same matrix."""
    m = model.dimension
    idx = np.arange(m)
    dist_ij = np.abs(np.subtract.outer(idx, idx))
    if model.kind == "ar":
        # integer-valued float exponents keep negative rho exact (pow, not exp*log)
        sigma = model.rho ** dist_ij.astype(float) if model.rho != 0.0 else np.eye(m)
    elif model.kind == "time_decay":
        with np.errstate(divide="ignore"):
            base = 0.5 * dist_ij.astype(float) ** -5.0
        np.fill_diagonal(base, 1.0)
        rng = seeded_rng(seed, _STREAM_COV) if not isinstance(seed, np.random.Generator) else seed
        scale = np.sqrt(rng.uniform(1.0, 3.0, m))
        sigma = base * np.outer(scale, scale)
    else:  # block
        blocks = m // model.block_size
        sigma = np.kron(np.eye(blocks), np.full((model.block_size,) * 2, model.rho))
        sigma += (1.0 - model.rho) * np.eye(m)
    cholesky(sigma)  # fail fast on a non-PD construction
    return sigma


def resolve_theta(scenario: Scenario) -> np.ndarray:
    if scenario.theta_rule == "fixed":
        theta = np.asarray(scenario.theta, dtype=float)
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        return theta
    rng = seeded_rng(scenario.seed, _STREAM_THETA)
    return rng.uniform(-1.0, 1.0, scenario.m) * scenario.eta


@dataclass(frozen=True)
class CoverageReport:
    """Counts and rates from one coverage run.

    sos_rate is the fraction of replicates in which at least one selected
    interval missed its parameter; fcr_rate is the fraction of selected
    intervals (k per replicate) that missed; the lower/upper rates split
    sos-misses by which side failed (a replicate can count toward both).
    """

    method: str
    k: int
    alpha: float
    reps: int
    seed: int
    sos_misses: int
    lower_events: int
    upper_events: int
    missed_intervals: int

    @property
    def sos_rate(self) -> float:
        return self.sos_misses / self.reps

    @property
    def fcr_rate(self) -> float:
        return self.missed_intervals / (self.k * self.reps)

    @property
    def lower_miss_rate(self) -> float:
        return self.lower_events / self.reps

    @property
    def upper_miss_rate(self) -> float:
        return self.upper_events / self.reps

    @property
    def se(self) -> float:
        p = self.sos_rate
        return math.sqrt(p * (1.0 - p) / self.reps)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "k": self.k,
            "alpha": self.alpha,
            "reps": self.reps,
            "seed": self.seed,
            "sos_misses": self.sos_misses,
            "lower_events": self.lower_events,
            "upper_events": self.upper_events,
            "missed_intervals": self.missed_intervals,
            "sos_rate": self.sos_rate,
            "fcr_rate": self.fcr_rate,
            "lower_miss_rate": self.lower_miss_rate,
            "upper_miss_rate": self.upper_miss_rate,
            "se": self.se,
        }


def _panel_families(scenario: Scenario) -> list[ShiftFamily]:
    if scenario.panel == "all_normal":
        return [NORMAL] * scenario.m
    half = scenario.m // 2
    return [NORMAL] * half + [student_t_family(scenario.t_df)] * (scenario.m - half)


def _offset_vectors(method: str, scenario: Scenario, k: int, alpha: float,
                    scales: np.ndarray, families: list[ShiftFamily]):
    label = MethodLabel(method)
    if label in (MethodLabel.FCW_SYMMETRIC, MethodLabel.FCW_SHORTEST):
        if scenario.panel != "all_normal":
            raise ValueError(f"{label.value} is defined for normal estimates only")
        mode = "symmetric" if label is MethodLabel.FCW_SYMMETRIC else "shortest"
        c, d = fcw_constants(scenario.m, k, alpha, mode)
        return scales * c, scales * d
    p_lo, p_up = method_tail_levels(label, scenario.m, k, alpha)
    c_lo = scales * np.array([f.quantile(1.0 - p_lo) for f in families])
    c_up = scales * np.array([f.quantile(1.0 - p_up) for f in families])
    return c_lo, c_up


def _block_sizes(reps: int) -> list[int]:
    sizes = [_BLOCK] * (reps // _BLOCK)
    if reps % _BLOCK:
        sizes.append(reps % _BLOCK)
    return sizes


def _draw_block(scenario: Scenario, theta: np.ndarray, chol_parts, block: int,
                size: int) -> np.ndarray:
    rng = seeded_rng(scenario.seed, _STREAM_REPS, block)
    if scenario.panel == "all_normal":
        (lower,) = chol_parts
        z = rng.standard_normal((size, scenario.m))
        return theta + z @ lower.T
    lower_n, lower_t = chol_parts
    half = scenario.m // 2
    y = np.empty((size, scenario.m))
    z_n = rng.standard_normal((size, half))  # fixed draw order: normal, t, mixing
    z_t = rng.standard_normal((size, scenario.m - half))
    w = rng.chisquare(scenario.t_df, size)
    y[:, :half] = theta[:half] + z_n @ lower_n.T
    y[:, half:] = theta[half:] + (z_t @ lower_t.T) / np.sqrt(w / scenario.t_df)[:, None]
    return y


def _count_topk(y: np.ndarray, theta: np.ndarray, k: int,
                c_lo: np.ndarray, c_up: np.ndarray) -> tuple[int, int, int, int]:
    order = np.argsort(-y, axis=1, kind="stable")[:, :k]
    y_sel = np.take_along_axis(y, order, axis=1)
    th_sel = theta[order]
    low_miss = (y_sel - c_lo[order]) > th_sel
    up_miss = (y_sel + c_up[order]) < th_sel
    any_low = low_miss.any(axis=1)
    any_up = up_miss.any(axis=1)
    return (
        int((any_low | any_up).sum()),
        int(any_low.sum()),
        int(any_up.sum()),
        int((low_miss | up_miss).sum()),
    )


def _count_absmax(y: np.ndarray, theta: np.ndarray, c_at_theta: np.ndarray
                  ) -> tuple[int, int, int, int]:
    # coverage of the inverted region: theta in [mu_minus, mu_plus] iff
    # |y_sel - theta_sel| <= scale * c_plus(|theta_sel| / scale)
    sel = (np.abs(y[:, 1]) > np.abs(y[:, 0])).astype(np.intp)
    rows = np.arange(y.shape[0])
    resid = y[rows, sel] - theta[sel]
    low = resid > c_at_theta[sel]
    up = -resid > c_at_theta[sel]
    miss = int((low | up).sum())
    return miss, int(low.sum()), int(up.sum()), miss


def run_coverage(scenario: Scenario, k: int, method: str, alpha: float = 0.05,
                 n_jobs: int = 1) -> CoverageReport:
    """Estimate miss rates for one method on one scenario.

    `method` is a MethodLabel value or "abs_max" (the latter needs m == 2 and
    covariance s^2 * I, the setting the abs-max construction is built for).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if n_jobs < 1:
        raise ValueError("n_jobs must be >= 1")
    sigma = build_covariance(scenario.covariance, scenario.seed)
    theta = resolve_theta(scenario)
    scales = np.sqrt(np.diag(sigma))

    if method == "abs_max":
        if scenario.m != 2:
            raise ValueError("abs_max coverage needs m == 2")
        if scenario.panel != "all_normal":
            raise ValueError("abs_max coverage is defined for normal errors")
        s = float(scales[0])
        if not np.allclose(sigma, s * s * np.eye(2), atol=1e-12):
            raise ValueError("abs_max coverage needs covariance s^2 * I")
        c_at_theta = s * np.array([c_plus(abs(t) / s, alpha) for t in theta])
        chol_parts = (cholesky(sigma),)
        label = "abs_max"
        k = 1

        def count(y):
            return _count_absmax(y, theta, c_at_theta)
    else:
        if not 1 <= k <= scenario.m:
            raise ValueError(f"k must lie in 1..{scenario.m}, got {k}")
        families = _panel_families(scenario)
        c_lo, c_up = _offset_vectors(method, scenario, k, alpha, scales, families)
        if scenario.panel == "all_normal":
            chol_parts = (cholesky(sigma),)
        else:
            half = scenario.m // 2
            chol_parts = (cholesky(sigma[:half, :half]), cholesky(sigma[half:, half:]))
        label = MethodLabel(method).value

        def count(y):
            return _count_topk(y, theta, k, c_lo, c_up)

    def run_block(args) -> tuple[int, int, int, int]:
        block, size = args
        return count(_draw_block(scenario, theta, chol_parts, block, size))

    jobs = list(enumerate(_block_sizes(scenario.reps)))
    if n_jobs == 1:
        results = [run_block(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run_block, jobs))

    sos, low, up, missed = (sum(col) for col in zip(*results))
    return CoverageReport(method=label, k=k, alpha=alpha, reps=scenario.reps,
                          seed=scenario.seed, sos_misses=sos, lower_events=low,
                          upper_events=up, missed_intervals=missed)


def estimate_b_probability(mu, c: float, reps: int, seed: int) -> float:
    """Monte-Carlo check of `b_region_probability`: fraction of N(mu, I_2)
    draws whose abs-max coordinate lands within c of its own mean."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (2,):
        raise ValueError("mu must have two coordinates")
    if c < 0.0:
        raise ValueError("c must be >= 0")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    hits = 0
    for block, size in enumerate(_block_sizes(reps)):
        rng = seeded_rng(seed, _STREAM_REPS, block)
        y = mu + rng.standard_normal((size, 2))
        sel = (np.abs(y[:, 1]) > np.abs(y[:, 0])).astype(np.intp)
        rows = np.arange(size)
        hits += int((np.abs(y[rows, sel] - mu[sel]) <= c).sum())
    return hits / reps


_COV_KEYS = {"kind", "dimension", "rho", "block_size"}
_SCENARIO_KEYS = {"m", "covariance", "reps", "seed", "eta", "theta_rule",
                  "theta", "panel", "t_df"}


def scenario_from_dict(cfg: dict) -> Scenario:
    """Build a Scenario from a plain dict (the simulate config file format).

    Required: m, reps, seed, covariance {kind, rho?, block_size?, dimension?}.
    Optional: eta, theta_rule, theta, panel, t_df.  Unknown keys are errors so
    that typos do not silently change a study.
    """
    if not isinstance(cfg, dict):
        raise ValueError("scenario config must be a JSON object")
    unknown = set(cfg) - _SCENARIO_KEYS
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    missing = {"m", "covariance", "reps", "seed"} - set(cfg)
    if missing:
        raise ValueError(f"missing scenario keys: {sorted(missing)}")
    cov_cfg = cfg["covariance"]
    if not isinstance(cov_cfg, dict) or "kind" not in cov_cfg:
        raise ValueError("covariance must be an object with a 'kind'")
    unknown = set(cov_cfg) - _COV_KEYS
    if unknown:
        raise ValueError(f"unknown covariance keys: {sorted(unknown)}")
    model = CovarianceModel(
        kind=cov_cfg["kind"],
        dimension=int(cov_cfg.get("dimension", cfg["m"])),
        rho=float(cov_cfg.get("rho", 0.0)),
        block_size=int(cov_cfg.get("block_size", 10)),
    )
    theta = cfg.get("theta")
    return Scenario(
        m=int(cfg["m"]),
        covariance=model,
        reps=int(cfg["reps"]),
        seed=int(cfg["seed"]),
        eta=float(cfg.get("eta", 0.0)),
        theta_rule=str(cfg.get("theta_rule", "uniform")),
        theta=None if theta is None else tuple(float(t) for t in theta),
        panel=str(cfg.get("panel", "all_normal")),
        t_df=int(cfg.get("t_df", 5)),
    )


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))
