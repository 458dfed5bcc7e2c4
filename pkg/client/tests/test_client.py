import json

import pytest

from genlab_client import (
    EngineError,
    ExperimentResult,
    InvalidDesign,
    Message,
    ProtocolError,
    Stream,
    VersionMismatchError,
    canonical,
    open_session,
)
from genlab_client.adapter import agent_adapter, novice_adapter

from conftest import engine_argv


def test_canonical_encoding_floats_as_strings():
    line = canonical({"b": 2.5, "a": 1, "c": [0.1, "x"]})
    assert line == '{"a":1,"b":"2.5","c":["0.1","x"]}'


def test_message_decode_rejects_junk():
    with pytest.raises(ProtocolError):
        Message.decode("nope")
    with pytest.raises(ProtocolError):
        Message.decode('{"type": "mystery"}')


def test_stream_mirrors_engine_rng():
    from genlab.rng import RngState
    ours = Stream(7).substream("trial", 0).substream("agent").substream("design", 3)
    theirs = RngState(7).substream("trial", 0).substream("agent").substream("design", 3)
    assert [ours.uniform01() for _ in range(20)] == \
        [theirs.uniform01() for _ in range(20)]


def test_open_session_exposes_framing(settings_path):
    client = open_session(engine_argv(settings_path), "hyperbolic_discounting",
                          "choice", seed=3, prior_mode=True,
                          checkpoints=[0, 1], queries_per_checkpoint=2)
    try:
        assert "observing how participants balance delayed vs immediate rewards" \
            in client.framing
        assert client.pending is not None and client.pending.checkpoint == 0
    finally:
        client.close()


def test_no_prior_framing_scrubs_domain_nouns(settings_path):
    client = open_session(engine_argv(settings_path), "hyperbolic_discounting",
                          "choice", seed=3, prior_mode=False,
                          checkpoints=[0, 1], queries_per_checkpoint=2)
    try:
        text = client.framing.lower()
        for noun in ("reward", "participant", "dollar"):
            assert noun not in text
    finally:
        client.close()


def test_bad_env_raises_engine_error(settings_path):
    with pytest.raises(EngineError):
        open_session(engine_argv(settings_path), "no_such_env", "goal", seed=1)


def test_version_mismatch_raises():
    class StubTransport:
        transcript = []

        def roundtrip(self, msg, expect):
            return [Message("env_description", "s", 0, {}, schema_version="2.0")]

        def read_extra(self, n):
            return []

        def close(self):
            pass

    with pytest.raises(VersionMismatchError):
        open_session(StubTransport(), "death_process", "num_infected", seed=1)


def test_step_experiment_returns_values_not_exceptions(settings_path):
    client = open_session(engine_argv(settings_path), "death_process",
                          "num_infected", seed=12, checkpoints=[0, 2],
                          queries_per_checkpoint=2)
    try:
        mu0 = client.description["mu0"]
        client.submit_predictions([mu0, mu0])

        out = client.step_experiment({"t": -4.0})
        assert isinstance(out, InvalidDesign)
        assert out.reason == "t must be between 0 and 2"
        assert out.retries_left == 2

        out = client.step_experiment({"t": 1.0})
        assert isinstance(out, ExperimentResult)
        assert out.step == 1
        assert isinstance(int(out.value), int)
    finally:
        client.close()


def test_three_invalids_exhaust_retries(settings_path):
    client = open_session(engine_argv(settings_path), "death_process",
                          "num_infected", seed=12, checkpoints=[0, 2],
                          queries_per_checkpoint=2)
    mu0 = client.description["mu0"]
    client.submit_predictions([mu0, mu0])
    reasons = []
    for _ in range(3):
        out = client.step_experiment({"t": 99.0})
        assert isinstance(out, InvalidDesign)
        reasons.append(out.reason)
    assert client.done
    rec = client.record()
    assert rec["incomplete"] is True
    assert rec["failure"] == "retry-exhausted"
    assert len(reasons) == 3
    client.close()


def test_adapter_callback_exception_is_graceful(settings_path):
    def propose(ctx):
        raise RuntimeError("client-side bug")

    client = open_session(engine_argv(settings_path), "death_process",
                          "num_infected", seed=12, checkpoints=[0, 1],
                          queries_per_checkpoint=2)
    adapter = agent_adapter({
        "propose_design": propose,
        "predict": lambda q, ctx: ctx["mu0"],
    })
    outcome = adapter.run(client)
    assert outcome.incomplete
    assert "client-side bug" in outcome.error


def test_adapter_retry_context_carries_rejection(settings_path):
    seen = []

    def propose(ctx):
        seen.append(ctx.get("last_rejection"))
        if ctx.get("last_rejection"):
            return {"t": 1.0}
        return {"t": -1.0}

    client = open_session(engine_argv(settings_path), "death_process",
                          "num_infected", seed=12, checkpoints=[0, 1],
                          queries_per_checkpoint=2)
    adapter = agent_adapter({
        "propose_design": propose,
        "predict": lambda q, ctx: ctx["mu0"],
    })
    outcome = adapter.run(client)
    assert not outcome.incomplete
    assert seen[0] is None
    assert seen[1] == "t must be between 0 and 2"


def test_explanation_pretruncated_and_flagged(settings_path):
    client = open_session(engine_argv(settings_path), "death_process",
                          "num_infected", seed=6, mode="discovery",
                          checkpoints=[0, 1], queries_per_checkpoint=2,
                          explanation_budget=64)
    adapter = agent_adapter({
        "propose_design": lambda ctx: {"t": 1.0},
        "predict": lambda q, ctx: ctx["mu0"],
        "explain": lambda budget, ctx: "y" * 500,
    })
    outcome = adapter.run(client)
    assert client.explanation_truncated
    assert len(outcome.explanation_sent) == 64
    # novice batch now outstanding
    assert client.pending is not None and client.pending.phase == "novice"

    novice_ctxs = []

    def novice_predict(q, ctx):
        novice_ctxs.append(ctx)
        return ctx["mu0"]

    out = novice_adapter({"predict": novice_predict}).run(client)
    assert not out.incomplete
    assert client.done
    for ctx in novice_ctxs:
        assert "history" not in ctx
        assert ctx["explanation"] == "y" * 64
    rec = out.record
    assert rec["novice_error"] == "0.0"
    client.close()
