import math

import numpy as np
import pytest

from ratedrivers.hpo import (
    STATUS_FAILED,
    STATUS_OK,
    HpoError,
    SearchSpace,
    TpeConfig,
    Trial,
    TrialParams,
    best_trial_to_json,
    fit_tpe_model,
    history_to_csv,
    optimize,
    sample_uniform,
    suggest,
    trial_seed,
)

SPACE = SearchSpace(k_min=3, k_max=15, alpha_lo=0.01, alpha_hi=5.0, eta_lo=0.01, eta_hi=5.0)


def in_space(params, space=SPACE):
    return (
        space.k_min <= params.k <= space.k_max
        and space.alpha_lo <= params.alpha <= space.alpha_hi
        and space.eta_lo <= params.eta <= space.eta_hi
    )


def ok_trial(k, alpha, eta, objective, seed=0):
    return Trial(TrialParams(k, alpha, eta), objective, STATUS_OK, seed)


# ------------------------------------------------------------ types


def test_space_validation():
    with pytest.raises(HpoError):
        SearchSpace(k_min=1)
    with pytest.raises(HpoError):
        SearchSpace(k_min=5, k_max=4)
    with pytest.raises(HpoError):
        SearchSpace(alpha_lo=0.0)
    with pytest.raises(HpoError):
        SearchSpace(eta_lo=2.0, eta_hi=1.0)


def test_trial_objective_presence_matches_status():
    with pytest.raises(HpoError):
        Trial(TrialParams(3, 0.1, 0.1), None, STATUS_OK, 0)
    with pytest.raises(HpoError):
        Trial(TrialParams(3, 0.1, 0.1), 1.0, STATUS_FAILED, 0)


def test_tpe_config_validation():
    with pytest.raises(HpoError):
        TpeConfig(gamma=0.0)
    with pytest.raises(HpoError):
        TpeConfig(n_startup=0)
    with pytest.raises(HpoError):
        TpeConfig(n_candidates=0)


# ------------------------------------------------------------ suggest


def test_warmup_when_too_few_ok_trials():
    history = [ok_trial(5, 0.1, 0.1, 0.5), ok_trial(6, 0.2, 0.2, 0.6)]
    config = TpeConfig(n_startup=5, seed=0)
    rng = np.random.default_rng(0)
    params = suggest(history, SPACE, config, rng)
    assert in_space(params)
    # with the same rng state the draw is exactly the warm-up sampler's
    assert params == sample_uniform(SPACE, np.random.default_rng(0))


def test_all_failed_history_behaves_as_warmup():
    history = [
        Trial(TrialParams(4, 0.1, 0.1), None, STATUS_FAILED, i) for i in range(8)
    ]
    params = suggest(history, SPACE, TpeConfig(n_startup=3), np.random.default_rng(1))
    assert params == sample_uniform(SPACE, np.random.default_rng(1))


def test_warmup_draws_stay_in_bounds():
    rng = np.random.default_rng(7)
    for _ in range(500):
        assert in_space(sample_uniform(SPACE, rng))


def test_suggested_alpha_concentrates_near_optimum():
    # quadratic objective in log-alpha; K and eta pinned by near-degenerate ranges
    space = SearchSpace(k_min=3, k_max=3, alpha_lo=0.01, alpha_hi=5.0, eta_lo=0.499, eta_hi=0.501)
    target = 0.15
    rng = np.random.default_rng(42)
    history = []
    for i in range(20):
        params = sample_uniform(space, rng)
        value = -((math.log(params.alpha) - math.log(target)) ** 2)
        history.append(ok_trial(params.k, params.alpha, params.eta, value, seed=i))
    config = TpeConfig(gamma=0.25, n_startup=5, n_candidates=24, seed=0)
    tpe_dist, unif_dist = [], []
    for seed in range(20):
        sugg = suggest(history, space, config, np.random.default_rng(seed))
        unif = sample_uniform(space, np.random.default_rng(seed + 1000))
        tpe_dist.append(abs(math.log(sugg.alpha) - math.log(target)))
        unif_dist.append(abs(math.log(unif.alpha) - math.log(target)))
    assert np.median(tpe_dist) < np.median(unif_dist)


def test_acquisition_returns_max_ratio_candidate():
    rng = np.random.default_rng(3)
    history = []
    for i in range(12):
        params = sample_uniform(SPACE, rng)
        history.append(ok_trial(params.k, params.alpha, params.eta, float(-i), seed=i))
    config = TpeConfig(gamma=0.25, n_startup=5, n_candidates=16, seed=0)
    model = fit_tpe_model([t for t in history if t.status == STATUS_OK], SPACE, config)
    draw_rng = np.random.default_rng(99)
    candidates = [model.sample(draw_rng) for _ in range(config.n_candidates)]
    scores = [model.score(c) for c in candidates]
    expected = candidates[int(np.argmax(scores))]
    assert suggest(history, SPACE, config, np.random.default_rng(99)) == expected


# ------------------------------------------------------------ optimize


def test_budget_one_returns_single_random_trial():
    calls = []

    def objective(params, seed):
        calls.append(params)
        return 1.0

    best, history = optimize(objective, SPACE, budget=1, config=TpeConfig(seed=5))
    assert len(history) == 1
    assert len(calls) == 1
    assert best is history[0]


def test_evaluation_count_is_exact_even_with_failures():
    calls = {"n": 0}

    def objective(params, seed):
        calls["n"] += 1
        if calls["n"] % 3 == 0:
            raise RuntimeError("synthetic failure")
        return -abs(math.log(params.alpha))

    best, history = optimize(objective, SPACE, budget=20, config=TpeConfig(seed=2))
    assert calls["n"] == 20
    assert len(history) == 20
    assert sum(t.status == STATUS_FAILED for t in history) == 6
    ok_values = [t.objective for t in history if t.status == STATUS_OK]
    assert best.objective == max(ok_values)


def test_optimize_deterministic():
    def objective(params, seed):
        return -((params.alpha - 1.0) ** 2) - ((params.eta - 1.0) ** 2)

    r1 = optimize(objective, SPACE, budget=12, config=TpeConfig(seed=8))
    r2 = optimize(objective, SPACE, budget=12, config=TpeConfig(seed=8))
    assert [t.params for t in r1[1]] == [t.params for t in r2[1]]
    assert r1[0].params == r2[0].params


def test_optimize_rejects_bad_budget_and_all_failures():
    with pytest.raises(HpoError):
        optimize(lambda p, s: 0.0, SPACE, budget=0, config=TpeConfig())

    def always_fails(params, seed):
        raise RuntimeError("nope")

    with pytest.raises(HpoError):
        optimize(always_fails, SPACE, budget=3, config=TpeConfig())


def test_non_finite_objective_marks_failure():
    def objective(params, seed):
        return float("nan") if params.alpha > 0.05 else 0.5

    _, history = optimize(objective, SPACE, budget=10, config=TpeConfig(seed=1))
    assert any(t.status == STATUS_FAILED for t in history)
    assert all((t.objective is None) == (t.status == STATUS_FAILED) for t in history)


def test_trial_seeds_are_stable():
    assert trial_seed(7, 3) == trial_seed(7, 3)
    assert trial_seed(7, 3) != trial_seed(7, 4)


# ------------------------------------------------------------ serialization


def test_history_csv_and_best_json(tmp_path):
    def objective(params, seed):
        return params.alpha

    best, history = optimize(objective, SPACE, budget=6, config=TpeConfig(seed=0))
    csv_path = tmp_path / "history.csv"
    history_to_csv(history, csv_path)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "trial,K,alpha,eta,coherence,status,seed"
    assert len(lines) == 7

    json_path = tmp_path / "best.json"
    best_trial_to_json(best, json_path)
    import json

    data = json.loads(json_path.read_text())
    assert data["K"] == best.params.k
    assert data["coherence"] == best.objective
