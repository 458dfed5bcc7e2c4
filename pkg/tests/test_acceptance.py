"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report. Tolerances are pinned here, not configurable.
"""

import json
import math
import time

import numpy as np
import pytest
from scipy import stats as sstats

from genlab.agents import baseline_agent
from genlab.envs import default_config, env_reset, make_env
from genlab.envs.predator_prey import lv_integrate, lv_integrate_raw
from genlab.evaluation import (
    design_hash,
    ei_regret,
    eig_nmc,
    eig_oracle_small,
    prior_grid,
    prior_predictive_stats,
    standardized_error,
)
from genlab.harness import agent_handle, replay_trial, run_trial, run_trials
from genlab.protocol import EngineSettings
from genlab.records import PriorPredictiveStats, canonical_json
from genlab.rng import RngState

FAST = EngineSettings(prior_stats_samples=1000)


def report(name: str, ok: bool, detail: str = "") -> None:
    print(f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip(), flush=True)


# -------------------------------------------------------------------------
# 1. EIG correctness: NMC (N=M=2000) vs exact oracle on 10 fixed designs,
#    hyperbolic + death(N=5), within max(0.02 nats, 3 s.e.), < 60 s total.

def test_eig_correctness_vs_oracle():
    t0 = time.monotonic()
    failures = []
    worst = 0.0

    death = default_config("death_process", params={"population": 5})
    dgrid = prior_grid(death, {"theta": 500})
    for i, t in enumerate((0.25, 0.5, 1.0, 1.5, 2.0)):
        oracle = eig_oracle_small(death, {"t": t}, dgrid, list(range(6)))
        est = eig_nmc(death, {"t": t}, 2000, 2000, RngState(5).substream("a1d", i))
        diff = abs(est.value - oracle)
        worst = max(worst, diff)
        if diff > max(0.02, 3 * est.std_error):
            failures.append(("death", t, diff))

    hyp = default_config("hyperbolic_discounting")
    hgrid = prior_grid(hyp, {"log_k": 50, "alpha": 40})
    designs = [{"iR": 1.0, "dR": 2.0, "D": 1.0}, {"iR": 5.0, "dR": 50.0, "D": 30.0},
               {"iR": 10.0, "dR": 100.0, "D": 365.0}, {"iR": 40.0, "dR": 100.0, "D": 10.0},
               {"iR": 20.0, "dR": 25.0, "D": 60.0}]
    for i, d in enumerate(designs):
        oracle = eig_oracle_small(hyp, d, hgrid, [0, 1])
        est = eig_nmc(hyp, d, 2000, 2000, RngState(5).substream("a1h", i))
        diff = abs(est.value - oracle)
        worst = max(worst, diff)
        if diff > max(0.02, 3 * est.std_error):
            failures.append(("hyperbolic", i, diff))

    elapsed = time.monotonic() - t0
    ok = not failures and elapsed < 60.0
    report("eig-nmc-vs-oracle", ok,
           f"(10 designs, worst |diff|={worst:.4f} nats, {elapsed:.1f}s)")
    assert not failures, failures
    assert elapsed < 60.0


# -------------------------------------------------------------------------
# 2. Zero-information design: eig_nmc(death, t=0) within 2 s.e. of 0.

def test_zero_information_design():
    est = eig_nmc(default_config("death_process"), {"t": 0.0}, 2000, 2000,
                  RngState(5).substream("a2"))
    ok = abs(est.value) <= 2 * max(est.std_error, 1e-12)
    report("zero-information-design", ok,
           f"(eig={est.value:.2e}, se={est.std_error:.2e})")
    assert ok


# -------------------------------------------------------------------------
# 3. Simulator moments: all ten environments, 1e4 samples at 3 fixed
#    designs, empirical mean within 4 s.e. of the analytic likelihood mean,
#    < 2 minutes.

def _likert_mean_var(mu: float, sigma: float) -> tuple[float, float]:
    edges = np.arange(1.5, 9.0)
    cdf = sstats.norm.cdf((edges - mu) / sigma)
    p = np.diff(np.concatenate([[0.0], cdf, [1.0]]))
    ks = np.arange(1, 10)
    mean = float(np.dot(ks, p))
    var = float(np.dot(ks ** 2, p) - mean ** 2)
    return mean, var


MOMENT_DESIGNS = {
    "location_finding": [{"x": 0.2, "y": 0.3}, {"x": 0.5, "y": 0.5}, {"x": 0.9, "y": 0.1}],
    "hyperbolic_discounting": [{"iR": 5.0, "dR": 50.0, "D": 30.0},
                               {"iR": 40.0, "dR": 100.0, "D": 10.0},
                               {"iR": 20.0, "dR": 25.0, "D": 60.0}],
    "death_process": [{"t": 0.25}, {"t": 1.0}, {"t": 2.0}],
    "irt": [{"student": 0, "question": 0}, {"student": 2, "question": 3},
            {"student": 5, "question": 5}],
    "dugongs": [{"age": 0.0}, {"age": 2.5}, {"age": 5.0}],
    "peregrines": [{"t": 0.5}, {"t": 2.0}, {"t": 4.0}],
    "mastectomy": [{"patient": 0}, {"patient": 10}, {"patient": 99}],
    "predator_prey": [{"t": 0.0}, {"t": 5.0}, {"t": 20.0}],
    "emotions": [{"prizes": (50.0, 20.0, 10.0), "probs": (0.1, 0.4, 0.5), "outcome": 1},
                 {"prizes": (30.0, 30.0, 30.0), "probs": (0.2, 0.5, 0.3), "outcome": 2},
                 {"prizes": (80.0, 10.0, 5.0), "probs": (0.05, 0.45, 0.5), "outcome": 3}],
    "moral_machines": [
        {"group1": ("boy", "girl"), "group2": ("old_man", "old_woman"), "intervention": "stay"},
        {"group1": ("dog",), "group2": ("criminal", "homeless"), "intervention": "swerve"},
        {"group1": ("female_doctor", "male_athlete"), "group2": ("large_man",),
         "intervention": "swerve"},
    ],
}


def _analytic_mean_var(env_id, env, theta, design):
    mean = env.mean_response(theta, design)
    if env_id in ("hyperbolic_discounting", "irt", "mastectomy", "moral_machines"):
        return np.array([mean]), np.array([mean * (1 - mean)])
    if env_id == "death_process":
        n = env.params["population"]
        eta = mean / n
        return np.array([mean]), np.array([n * eta * (1 - eta)])
    if env_id == "location_finding":
        return np.array([mean]), np.array([env.params["noise_sigma"] ** 2])
    if env_id == "dugongs":
        return np.array([mean]), np.array([env.params["noise_sigma"] ** 2])
    if env_id == "peregrines":
        return np.array([mean]), np.array([mean])
    if env_id == "predator_prey":
        return np.asarray(mean, dtype=float), np.zeros(2)
    if env_id == "emotions":
        sigma = env.params["noise_sigma"]
        raw_means, _, _ = __import__("genlab.envs.emotions", fromlist=["emotion_means"]) \
            .emotion_means(theta, design["prizes"], design["probs"], design["outcome"])
        pairs = [_likert_mean_var(m, sigma) for m in raw_means]
        return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])
    raise KeyError(env_id)


def test_simulator_moments_all_envs():
    t0 = time.monotonic()
    n = 10_000
    failures = []
    for env_id, designs in MOMENT_DESIGNS.items():
        cfg = default_config(env_id)
        state = env_reset(cfg, RngState(301).substream("trial", 0).substream("episode"))
        env, theta = state.env, state.theta
        cols = {k: np.full(n, v, dtype=np.float64) for k, v in theta.items()}
        for j, design in enumerate(designs):
            design = env.parse_design(design)
            mean, var = _analytic_mean_var(env_id, env, theta, design)
            draws = np.asarray(env.simulate_batch(cols, design,
                                                  RngState(302).substream("m", j)),
                               dtype=np.float64)
            if draws.ndim == 1:
                draws = draws[:, None]
            emp = draws.mean(axis=0)
            tol = 4 * np.sqrt(var / n) + 1e-12
            if not np.all(np.abs(emp - mean) <= tol):
                failures.append((env_id, j, emp, mean, tol))
    elapsed = time.monotonic() - t0
    ok = not failures and elapsed < 120.0
    report("simulator-moments", ok, f"(10 envs x 3 designs x 1e4, {elapsed:.1f}s)")
    assert not failures, failures
    assert elapsed < 120.0


# -------------------------------------------------------------------------
# 4. ODE fidelity: h=0.01 vs h=1e-4 within relative 1e-3 pre-rounding;
#    equilibrium initial condition stays fixed within rounding on [0, 50].

ACCEPT_LV = (1.0, 0.1, 1.5, 0.075)


def test_ode_fidelity():
    worst = 0.0
    for t in (5.0, 20.0, 50.0):
        coarse = np.array(lv_integrate_raw(ACCEPT_LV, (10.0, 5.0), t, h=0.01))
        fine = np.array(lv_integrate_raw(ACCEPT_LV, (10.0, 5.0), t, h=1e-4))
        rel = float(np.max(np.abs(coarse - fine) / np.maximum(np.abs(fine), 1e-12)))
        worst = max(worst, rel)
    a, b, g, d = ACCEPT_LV
    eq = (g / d, a / b)
    eq_ok = all(lv_integrate(ACCEPT_LV, eq, t) == (int(eq[0]), int(eq[1]))
                for t in (0.0, 1.0, 5.0, 12.5, 30.0, 50.0))
    ok = worst < 1e-3 and eq_ok
    report("ode-fidelity", ok, f"(worst rel diff {worst:.2e}, equilibrium fixed: {eq_ok})")
    assert worst < 1e-3
    assert eq_ok


# -------------------------------------------------------------------------
# 5. Metric identities: mu0 predictor scores exactly 0; perfect predictor
#    <= 0; regret of the argmax random design is 0 within estimator noise.

def test_metric_identities():
    cfg = default_config("death_process")
    goal = make_env(cfg).get_goal("num_infected")
    stats = prior_predictive_stats(cfg, goal, 1000, RngState(9).substream("a5"))
    truths = [3.0, 17.5, 42.0, 50.0]
    mu0_err = standardized_error([stats.mu0] * 4, truths, "squared_error", stats)
    perfect_err = standardized_error(truths, truths, "squared_error", stats)

    hyp = default_config("hyperbolic_discounting")
    env = make_env(hyp)
    rng = RngState(77).substream("a5r")
    pool_rng = rng.substream("regret_pool")
    pool = [env.random_design(pool_rng) for _ in range(20)]
    ests = [eig_nmc(hyp, d, 300, 300, rng.substream("eig_design", design_hash(d)))
            for d in pool]
    best = pool[int(np.argmax([e.value for e in ests]))]
    regret = ei_regret(hyp, [best], 20, RngState(77).substream("a5r"),
                       n_outer=300, m_inner=300)

    ok = (mu0_err == 0.0) and (perfect_err <= 0.0) and abs(regret) <= 1e-12
    report("metric-identities", ok,
           f"(mu0={mu0_err}, perfect={perfect_err:.3f}, argmax regret={regret:.2e})")
    assert mu0_err == 0.0
    assert perfect_err <= 0.0
    assert abs(regret) <= 1e-12


# -------------------------------------------------------------------------
# 6. Structural reproduction: posterior-mean agent improves with data;
#    death-process Error@10 < -0.5 (the reported-error regime) and
#    Error@10 < Error@0 on both envs, across 5 seeds.

def test_learning_curve_regime():
    results = {}
    for env_id, goal in (("death_process", "num_infected"), ("peregrines", "population")):
        cfg = default_config(env_id)
        e0, e10 = [], []
        for r in range(5):
            rec = run_trial(cfg, goal, agent_handle(baseline_agent("posterior_mean")),
                            master_seed=11, run_index=r, settings=FAST)
            assert not rec.incomplete
            errs = rec.errors_by_checkpoint()
            e0.append(errs[0])
            e10.append(errs[10])
        results[env_id] = (float(np.mean(e0)), float(np.mean(e10)))
    death0, death10 = results["death_process"]
    per0, per10 = results["peregrines"]
    ok = death10 < -0.5 and death10 < death0 and per10 < per0
    report("learning-curve-regime", ok,
           f"(death {death0:+.3f} -> {death10:+.3f}; peregrines {per0:+.4f} -> {per10:+.4f})")
    assert death10 < -0.5
    assert death10 < death0
    assert per10 < per0


# -------------------------------------------------------------------------
# 7. Replay determinism: a persisted record re-executes byte-identically.

def test_replay_determinism():
    cfg = default_config("death_process")
    rec = run_trial(cfg, "num_infected", agent_handle(baseline_agent("posterior_mean")),
                    master_seed=47, run_index=3, settings=FAST)
    persisted = json.loads(canonical_json(rec.to_jsonable()))
    _, ok = replay_trial(persisted)
    report("replay-determinism", ok)
    assert ok


# -------------------------------------------------------------------------
# 8. Schedule conformance: checkpoints exactly {0,1,3,5,7,10}, 10 queries
#    each, 5 runs -> 300 scored predictions.

def test_schedule_conformance():
    records = run_trials(default_config("death_process"), "num_infected",
                         "mu0_predictor", runs=5, master_seed=31, settings=FAST)
    checkpoints_ok = all(tuple(r.checkpoints) == (0, 1, 3, 5, 7, 10) for r in records)
    scored = sum(len(c.predictions) for r in records for c in r.checkpoint_results)
    per_cp_ok = all(len(c.predictions) == 10 for r in records for c in r.checkpoint_results)
    ok = checkpoints_ok and per_cp_ok and scored == 300
    report("schedule-conformance", ok, f"(scored predictions: {scored})")
    assert checkpoints_ok and per_cp_ok
    assert scored == 300
