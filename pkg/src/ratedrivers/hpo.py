"""Tree-structured Parzen estimator search over (K, alpha, eta), maximizing coherence.

Good and bad trials (split at the gamma quantile of the objective) get separate
density models per dimension: truncated Gaussians on the log scale for alpha
and eta, smoothed categorical counts for K.  Candidates are drawn from the
good-trial densities and ranked by the density ratio.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

STATUS_OK = "ok"
STATUS_FAILED = "failed"


class HpoError(ValueError):
    pass


@dataclass(frozen=True)
class SearchSpace:
    k_min: int = 3
    k_max: int = 15
    alpha_lo: float = 0.01
    alpha_hi: float = 5.0
    eta_lo: float = 0.01
    eta_hi: float = 5.0

    def __post_init__(self):
        if self.k_min < 2:
            raise HpoError(f"k_min must be >= 2, got {self.k_min}")
        if self.k_max < self.k_min:
            raise HpoError(f"empty K range [{self.k_min}, {self.k_max}]")
        if not (0 < self.alpha_lo < self.alpha_hi):
            raise HpoError("alpha range must satisfy 0 < lo < hi")
        if not (0 < self.eta_lo < self.eta_hi):
            raise HpoError("eta range must satisfy 0 < lo < hi")


@dataclass(frozen=True)
class TrialParams:
    k: int
    alpha: float
    eta: float


@dataclass
class Trial:
    params: TrialParams
    objective: float | None
    status: str
    seed: int

    def __post_init__(self):
        if (self.status == STATUS_OK) != (self.objective is not None):
            raise HpoError("objective must be present exactly when status is ok")


@dataclass(frozen=True)
class TpeConfig:
    gamma: float = 0.25
    n_startup: int = 5
    n_candidates: int = 24
    min_bandwidth: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise HpoError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.n_startup < 1:
            raise HpoError("n_startup must be >= 1")
        if self.n_candidates < 1:
            raise HpoError("n_candidates must be >= 1")


class _LogParzen:
    """Kernel density over log-scaled values, truncated Gaussian kernels.

    A range-wide prior kernel at mid-range joins the observations (keeping
    global exploration mass, as in canonical adaptive-Parzen estimators).
    Observed kernels get the larger gap to a neighboring center as bandwidth
    (spacing rule), floored at min_bandwidth and capped at the range width.
    """

    def __init__(self, values, lo: float, hi: float, min_bandwidth: float):
        self.lo = math.log(lo)
        self.hi = math.log(hi)
        width = self.hi - self.lo
        mid = 0.5 * (self.lo + self.hi)
        observed = np.log(np.asarray(values, dtype=float))
        centers = np.concatenate([observed, [mid]])
        order = np.argsort(centers)
        centers = centers[order]
        m = centers.size
        if m == 1:
            bw = np.array([width])
        else:
            gaps = np.diff(centers)
            left = np.concatenate([[gaps[0]], gaps])
            right = np.concatenate([gaps, [gaps[-1]]])
            bw = np.maximum(left, right)
        # spacing floor shrinks only as observations accumulate; 1e-3 is absolute
        floor = max(min_bandwidth, width / min(100.0, m + 1.0))
        bw = np.clip(bw, floor, width)
        bw[order == observed.size] = width  # the prior kernel spans the range
        self.centers = centers
        self.bw = bw
        self._cdf_lo = ndtr((self.lo - self.centers) / self.bw)
        self._cdf_hi = ndtr((self.hi - self.centers) / self.bw)

    def log_pdf(self, x: float) -> float:
        z = (math.log(x) - self.centers) / self.bw
        norm = np.maximum(self._cdf_hi - self._cdf_lo, 1e-300)
        dens = np.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * self.bw * norm)
        return math.log(max(float(np.mean(dens)), 1e-300))

    def sample(self, rng: np.random.Generator) -> float:
        i = int(rng.integers(self.centers.size))
        u = rng.uniform()
        q = self._cdf_lo[i] + u * (self._cdf_hi[i] - self._cdf_lo[i])
        q = min(max(q, 1e-12), 1.0 - 1e-12)
        x = self.centers[i] + self.bw[i] * float(ndtri(q))
        return math.exp(min(max(x, self.lo), self.hi))


class _SmoothedCategorical:
    """Add-one-smoothed counts over the integer range [lo, hi]."""

    def __init__(self, values, lo: int, hi: int):
        counts = np.ones(hi - lo + 1, dtype=float)
        for v in values:
            counts[int(v) - lo] += 1.0
        self.lo = lo
        self.probs = counts / counts.sum()

    def log_pdf(self, k: int) -> float:
        return math.log(self.probs[int(k) - self.lo])

    def sample(self, rng: np.random.Generator) -> int:
        return self.lo + int(rng.choice(self.probs.size, p=self.probs))


@dataclass
class _TpeModel:
    good_k: _SmoothedCategorical
    bad_k: _SmoothedCategorical
    good_alpha: _LogParzen
    bad_alpha: _LogParzen
    good_eta: _LogParzen
    bad_eta: _LogParzen

    def sample(self, rng: np.random.Generator) -> TrialParams:
        return TrialParams(
            k=self.good_k.sample(rng),
            alpha=self.good_alpha.sample(rng),
            eta=self.good_eta.sample(rng),
        )

    def score(self, params: TrialParams) -> float:
        """log(l(x)) - log(g(x)), summed over the three dimensions."""
        return (
            self.good_k.log_pdf(params.k)
            - self.bad_k.log_pdf(params.k)
            + self.good_alpha.log_pdf(params.alpha)
            - self.bad_alpha.log_pdf(params.alpha)
            + self.good_eta.log_pdf(params.eta)
            - self.bad_eta.log_pdf(params.eta)
        )


def sample_uniform(space: SearchSpace, rng: np.random.Generator) -> TrialParams:
    """Warm-up draw: uniform integer K, log-uniform alpha and eta."""
    k = int(rng.integers(space.k_min, space.k_max + 1))
    alpha = math.exp(rng.uniform(math.log(space.alpha_lo), math.log(space.alpha_hi)))
    eta = math.exp(rng.uniform(math.log(space.eta_lo), math.log(space.eta_hi)))
    return TrialParams(k=k, alpha=alpha, eta=eta)


def fit_tpe_model(ok_trials: list[Trial], space: SearchSpace, config: TpeConfig) -> _TpeModel | None:
    """Split ok trials at the gamma quantile (top fraction is good) and fit densities."""
    ranked = sorted(ok_trials, key=lambda t: -t.objective)
    n_good = max(1, math.ceil(config.gamma * len(ranked)))
    good, bad = ranked[:n_good], ranked[n_good:]
    if not bad:
        return None
    return _TpeModel(
        good_k=_SmoothedCategorical([t.params.k for t in good], space.k_min, space.k_max),
        bad_k=_SmoothedCategorical([t.params.k for t in bad], space.k_min, space.k_max),
        good_alpha=_LogParzen(
            [t.params.alpha for t in good], space.alpha_lo, space.alpha_hi, config.min_bandwidth
        ),
        bad_alpha=_LogParzen(
            [t.params.alpha for t in bad], space.alpha_lo, space.alpha_hi, config.min_bandwidth
        ),
        good_eta=_LogParzen(
            [t.params.eta for t in good], space.eta_lo, space.eta_hi, config.min_bandwidth
        ),
        bad_eta=_LogParzen(
            [t.params.eta for t in bad], space.eta_lo, space.eta_hi, config.min_bandwidth
        ),
    )


def suggest(
    history: list[Trial],
    space: SearchSpace,
    config: TpeConfig,
    rng: np.random.Generator,
) -> TrialParams:
    """Propose the next parameter point: uniform during warm-up, density-ratio after."""
    ok = [t for t in history if t.status == STATUS_OK]
    if len(ok) < config.n_startup:
        return sample_uniform(space, rng)
    model = fit_tpe_model(ok, space, config)
    if model is None:
        return sample_uniform(space, rng)
    candidates = [model.sample(rng) for _ in range(config.n_candidates)]
    scores = [model.score(c) for c in candidates]
    return candidates[int(np.argmax(scores))]


def trial_seed(config_seed: int, index: int) -> int:
    payload = f"{config_seed}:{index}".encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=4).digest(), "big")


def optimize(
    objective,
    space: SearchSpace,
    budget: int,
    config: TpeConfig,
) -> tuple[Trial, list[Trial]]:
    """Run exactly `budget` evaluations of `objective(params, seed)`; maximize.

    Failing evaluations (exception or non-finite value) are kept in the history
    as failed trials and the loop continues.
    """
    if budget < 1:
        raise HpoError(f"budget must be >= 1, got {budget}")
    rng = np.random.default_rng(config.seed)
    history: list[Trial] = []
    best: Trial | None = None
    for i in range(budget):
        params = suggest(history, space, config, rng)
        seed = trial_seed(config.seed, i)
        try:
            value = float(objective(params, seed))
            if not math.isfinite(value):
                raise HpoError(f"objective returned non-finite value {value}")
            trial = Trial(params=params, objective=value, status=STATUS_OK, seed=seed)
        except Exception:
            trial = Trial(params=params, objective=None, status=STATUS_FAILED, seed=seed)
        history.append(trial)
        if trial.status == STATUS_OK and (best is None or trial.objective > best.objective):
            best = trial
    if best is None:
        raise HpoError("every trial failed; no best parameters to report")
    return best, history


def history_to_csv(history: list[Trial], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "K", "alpha", "eta", "coherence", "status", "seed"])
        for i, t in enumerate(history):
            obj = "" if t.objective is None else f"{t.objective:.6f}"
            writer.writerow(
                [i, t.params.k, f"{t.params.alpha:.6g}", f"{t.params.eta:.6g}", obj, t.status, t.seed]
            )


def best_trial_to_json(trial: Trial, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "K": trial.params.k,
                "alpha": trial.params.alpha,
                "eta": trial.params.eta,
                "coherence": trial.objective,
                "seed": trial.seed,
            },
            fh,
            indent=2,
        )
