import json
import math

import numpy as np
import pytest

from genlab.dists import log_prob as dist_log_prob
from genlab.envs import (
    EnvConfig,
    InvalidDesignError,
    config_schema,
    default_config,
    env_experiment,
    env_ids,
    env_reset,
    goal_queries,
    make_env,
    theta_row,
)
from genlab.rng import RngState

ALL_ENVS = env_ids()


def _episode(env_id, seed=13, **cfg_kwargs):
    config = default_config(env_id, **cfg_kwargs)
    return env_reset(config, RngState(seed).substream("trial", 0).substream("episode"))


def test_registry_has_ten_environments():
    assert len(ALL_ENVS) == 10


@pytest.mark.parametrize("env_id", ALL_ENVS)
def test_reset_is_deterministic(env_id):
    a = _episode(env_id)
    b = _episode(env_id)
    assert a.theta == b.theta


@pytest.mark.parametrize("env_id", ALL_ENVS)
def test_experiment_replay_bit_exact(env_id):
    a = _episode(env_id)
    b = _episode(env_id)
    da = a.env.random_design(RngState(5).substream("d"))
    db = b.env.random_design(RngState(5).substream("d"))
    assert da == db
    for _ in range(3):
        oa = env_experiment(a, da)
        ob = env_experiment(b, db)
        assert oa.value == ob.value
        assert oa.text == ob.text


def test_hyperbolic_prior_latents():
    st = _episode("hyperbolic_discounting")
    specs = st.env.prior_specs()
    assert specs["log_k"].kind == "normal"
    assert (specs["log_k"].mean, specs["log_k"].sigma) == (-4.25, 1.5)
    assert specs["alpha"].kind == "half_normal" and specs["alpha"].sigma == 2.0
    assert st.theta["alpha"] >= 0.0


def test_death_theta_positive_and_t0_degenerate():
    st = _episode("death_process")
    assert st.theta["theta"] > 0
    for _ in range(5):
        assert env_experiment(st, {"t": 0.0}).value == 0


def test_irt_2pl_latent_counts_and_replay():
    st = _episode("irt")
    names = list(st.env.prior_specs())
    assert sum(n.startswith("ability_") for n in names) == 6
    assert sum(n.startswith("difficulty_") for n in names) == 6
    assert sum(n.startswith("discrim_") for n in names) == 6
    assert not any(n.startswith("guess_") for n in names)
    st2 = _episode("irt")
    assert st.theta == st2.theta
    assert all(st.theta[f"discrim_{k}"] >= 0.5 for k in range(6))


def test_irt_variants():
    st1 = _episode("irt", variant="1pl")
    assert not any(n.startswith("discrim_") for n in st1.env.prior_specs())
    st3 = _episode("irt", variant="3pl")
    assert all(0.0 <= st3.theta[f"guess_{k}"] <= 0.4 for k in range(6))


def test_mastectomy_cohort_sampled_at_reset():
    st = _episode("mastectomy")
    times = [st.theta[f"patient_{i}_time"] for i in range(100)]
    metas = [st.theta[f"patient_{i}_meta"] for i in range(100)]
    assert all(0.0 <= t <= 10.0 for t in times)
    assert set(metas) <= {0, 1}
    assert 10 < sum(metas) < 90


def test_predator_prey_integer_inits():
    st = _episode("predator_prey")
    assert isinstance(st.theta["prey0"], int) and 20 <= st.theta["prey0"] <= 60
    assert isinstance(st.theta["pred0"], int) and 5 <= st.theta["pred0"] <= 20


@pytest.mark.parametrize("env_id", ALL_ENVS)
def test_observation_supports(env_id):
    st = _episode(env_id, seed=101)
    rng = RngState(7).substream("designs")
    for _ in range(12):
        obs = env_experiment(st, st.env.random_design(rng))
        v = obs.value
        if env_id in ("hyperbolic_discounting", "irt", "mastectomy", "moral_machines"):
            assert v in (0, 1)
        elif env_id == "death_process":
            assert isinstance(v, int) and 0 <= v <= 50
        elif env_id == "peregrines":
            assert isinstance(v, int) and v >= 0
        elif env_id == "predator_prey":
            assert all(isinstance(x, int) and x >= 0 for x in v)
        elif env_id == "emotions":
            assert len(v) == 8
            assert all(isinstance(x, int) and 1 <= x <= 9 for x in v)
        else:
            assert isinstance(v, float)


@pytest.mark.parametrize("env_id", ALL_ENVS)
def test_design_validation_is_total(env_id):
    """Every payload either yields an observation or a reasoned rejection."""
    st = _episode(env_id, seed=55)
    junk = [
        {},
        {"t": "abc"},
        {"t": -1.0}, {"t": 1e9},
        {"age": 99}, {"x": 2.0, "y": 0.1}, {"x": 0.1},
        {"iR": 5, "dR": 5, "D": 1}, {"iR": -3, "dR": 5, "D": 1},
        {"iR": 3, "dR": 5, "D": 0},
        {"student": 99, "question": 0}, {"student": 0.5, "question": 1},
        {"patient": -2}, {"patient": 1e6},
        {"prizes": [1, 2], "probs": [0.5, 0.5], "outcome": 1},
        {"prizes": [1, 2, 3], "probs": [0.5, 0.4, 0.2], "outcome": 1},
        {"prizes": [1, 2, 3], "probs": [0.5, 0.4, 0.1], "outcome": 7},
        {"group1": [], "group2": ["boy"], "intervention": "stay"},
        {"group1": ["unicorn"], "group2": ["boy"], "intervention": "stay"},
        {"group1": ["boy"], "group2": ["girl"], "intervention": "jump"},
        {"wrong_field": 1.0},
    ]
    for raw in junk:
        try:
            obs = env_experiment(st, raw)
            assert obs.value is not None
        except InvalidDesignError as e:
            assert isinstance(e.reason, str) and e.reason


def test_design_rejection_reasons_stable():
    st = _episode("hyperbolic_discounting")
    with pytest.raises(InvalidDesignError) as exc:
        env_experiment(st, {"iR": 10, "dR": 10, "D": 5})
    assert exc.value.reason == "iR must be strictly less than dR"
    with pytest.raises(InvalidDesignError) as exc:
        env_experiment(st, {"iR": -1, "dR": 10, "D": 5})
    assert exc.value.reason == "iR, dR, and D must all be positive"


def test_history_append_only():
    st = _episode("dugongs")
    assert st.step == 0
    env_experiment(st, {"age": 1.0})
    with pytest.raises(InvalidDesignError):
        env_experiment(st, {"age": -1.0})
    env_experiment(st, {"age": 2.0})
    assert st.step == 2
    assert [d["age"] for d, _ in st.history] == [1.0, 2.0]


@pytest.mark.parametrize("env_id", ALL_ENVS)
def test_loglik_bcast_matches_scalar(env_id):
    st = _episode(env_id, seed=23)
    env = st.env
    cols = env.sample_theta_block(RngState(31).substream("block"), 8)
    design = env.random_design(RngState(17).substream("d"))
    obs_rng = RngState(19).substream("o")
    ys = [env.simulate(theta_row(cols, i), design, obs_rng) for i in range(8)]
    mat = env.loglik_bcast(cols, design, np.asarray(ys, dtype=np.float64))
    for i in range(8):
        scalar = env.log_likelihood(theta_row(cols, i), design, ys[i])
        assert mat[i] == pytest.approx(scalar, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("env_id", ALL_ENVS)
def test_mean_response_cols_matches_scalar(env_id):
    st = _episode(env_id, seed=29)
    env = st.env
    cols = env.sample_theta_block(RngState(37).substream("block"), 6)
    design = env.random_design(RngState(41).substream("d"))
    batch = np.asarray(env.mean_response_cols(cols, design), dtype=np.float64)
    for i in range(6):
        scalar = np.asarray(env.mean_response(theta_row(cols, i), design), dtype=np.float64)
        assert np.allclose(batch[i], scalar, rtol=1e-9, atol=1e-9)


def test_goal_queries_latent_truth():
    st = _episode("death_process")
    qs = goal_queries(st, "infection_rate", 3, RngState(3).substream("q"))
    assert all(q.truth == st.theta["theta"] for q in qs.queries)


def test_goal_queries_dugongs_kernel_truth():
    st = _episode("dugongs")
    qs = goal_queries(st, "length", 10, RngState(3).substream("q"))
    from genlab.envs.dugongs import dugong_mean_length
    th = st.theta
    for q in qs.queries:
        assert 0.0 <= q.payload["age"] <= 5.0
        assert q.truth == pytest.approx(
            dugong_mean_length(th["alpha"], th["beta"], th["lam"], q.payload["age"]))


def test_goal_queries_binary_threshold():
    st = _episode("irt")
    qs = goal_queries(st, "correctness", 20, RngState(3).substream("q"))
    for q in qs.queries:
        p = st.env.mean_response(st.theta, q.payload)
        assert q.truth == (1 if p > 0.5 else 0)


def test_framing_strings():
    for env_id in ALL_ENVS:
        env = make_env(default_config(env_id))
        rich = env.describe(True)
        plain = env.describe(False)
        assert rich and plain and rich != plain

    hyp = make_env(default_config("hyperbolic_discounting"))
    assert "observing how participants balance delayed vs immediate rewards" in hyp.describe(True)
    assert "you receive a tuple of three values" in hyp.describe(False)
    scrubbed = hyp.describe(False).lower()
    for noun in ("reward", "participant", "day", "dollar"):
        assert noun not in scrubbed


def test_no_prior_framings_scrub_domain_nouns():
    nouns = {
        "death_process": ("infect", "individual", "population"),
        "dugongs": ("dugong", "length", "age"),
        "peregrines": ("falcon", "population"),
        "irt": ("student", "question", "exam"),
        "location_finding": ("source", "signal"),
        "mastectomy": ("patient", "cancer", "surgery"),
        "predator_prey": ("predator", "prey"),
    }
    for env_id, words in nouns.items():
        text = make_env(default_config(env_id)).describe(False).lower()
        for w in words:
            assert w not in text, (env_id, w)


def test_config_schema_document_complete():
    for env_id in ALL_ENVS:
        doc = config_schema(env_id)
        assert doc["prior_specs"], env_id
        assert doc["design_space"]["fields"], env_id
        assert doc["goals"], env_id
        assert doc["framing"]["prior"] and doc["framing"]["no_prior"]
        json.dumps(doc)  # serializable


def test_config_param_override_and_digest():
    a = default_config("death_process", params={"population": 10})
    b = default_config("death_process", params={"population": 10})
    c = default_config("death_process")
    assert a.digest() == b.digest() != c.digest()
    assert make_env(a).params["population"] == 10
    with pytest.raises(Exception):
        make_env(default_config("death_process", params={"bogus": 1}))


def test_observation_text_verbal_envs():
    st = _episode("emotions", seed=3)
    obs = env_experiment(st, {"prizes": [50.0, 20.0, 10.0],
                              "probs": [0.1, 0.4, 0.5], "outcome": 1})
    assert obs.text.startswith("The player might be feeling")
    st2 = _episode("moral_machines", seed=3)
    obs2 = env_experiment(st2, {"group1": ["boy", "girl"],
                                "group2": ["old_man", "old_woman"],
                                "intervention": "swerve"})
    assert obs2.text.startswith("I choose to save group ")


def test_peregrine_zero_coefficients_is_unit_poisson():
    # all coefficients 0: rate exp(0) = 1; 1e4 replay mean within 1 +/- 0.03
    st = _episode("peregrines")
    st.theta.update({"a": 0.0, "b1": 0.0, "b2": 0.0, "b3": 0.0})
    cols = {k: np.full(10_000, v) for k, v in st.theta.items()}
    draws = st.env.simulate_batch(cols, {"t": 1.0}, RngState(9).substream("p1"))
    assert abs(draws.mean() - 1.0) <= 0.03


def test_peregrine_clamp_flag():
    st = _episode("peregrines")
    st.theta.update({"a": 30.0, "b1": 0.0, "b2": 0.0, "b3": 0.0})
    obs = env_experiment(st, {"t": 1.0})
    assert obs.meta_dict().get("rate_clamped") is True
