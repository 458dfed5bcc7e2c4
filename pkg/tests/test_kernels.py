"""Forward-kernel checks; expected values computed from the closed forms
by hand or by an independent fine-step/quadrature oracle."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genlab.envs.death import death_eta
from genlab.envs.dugongs import dugong_mean_length
from genlab.envs.emotions import EMOTIONS, emotion_means, likert_cell_logprobs
from genlab.envs.hyperbolic import hd_choice_prob
from genlab.envs.irt import irt_correct_prob
from genlab.envs.location import loc_signal_mean
from genlab.envs.mastectomy import mastectomy_death_prob
from genlab.envs.moral import (
    CHARACTERS,
    moral_choice_prob,
    moral_logit,
)
from genlab.envs.peregrines import LOG_RATE_CAP, peregrine_log_rate
from genlab.envs.predator_prey import lv_integrate, lv_integrate_raw
from genlab.envs.verbalizer import verbalize_emotions, verbalize_moral


# -- location ---------------------------------------------------------------

def test_loc_signal_zero_distance():
    assert loc_signal_mean([(0.2, 0.7)], [1.0], (0.2, 0.7), 0.0, 1.0) == pytest.approx(1.0)


def test_loc_signal_hand_value():
    # source (3,4) seen from origin, m=1: 1/(1+25) = 1/26
    assert loc_signal_mean([(3.0, 4.0)], [1.0], (0.0, 0.0), 0.0, 1.0) \
        == pytest.approx(1.0 / 26.0)


def test_loc_signal_superposition():
    one = loc_signal_mean([(0.4, 0.9)], [1.0], (0.1, 0.1), 0.0, 1e-4)
    three = loc_signal_mean([(0.4, 0.9)] * 3, [1.0] * 3, (0.1, 0.1), 0.0, 1e-4)
    assert three == pytest.approx(3 * one)


# -- hyperbolic discounting ---------------------------------------------------

def test_hd_indifference_gives_half():
    # dR/(1+kD) == iR exactly
    assert hd_choice_prob(k=1.0, alpha=2.0, iR=5.0, dR=10.0, D=1.0) == pytest.approx(0.5)


def test_hd_hand_value():
    # V_d = 100/(1+0.1*10) = 50, z = (50-40)/10 = 1: 0.01 + 0.98*Phi(1)
    p = hd_choice_prob(k=0.1, alpha=10.0, iR=40.0, dR=100.0, D=10.0)
    assert p == pytest.approx(0.8345178511471721, abs=1e-9)


def test_hd_large_delay_limit():
    p = hd_choice_prob(k=0.5, alpha=3.0, iR=20.0, dR=90.0, D=1e9)
    limit = 0.01 + 0.98 * (0.5 * (1.0 + math.erf((-20.0 / 3.0) / math.sqrt(2))))
    assert p == pytest.approx(limit, abs=1e-12)
    assert p < 0.5


@settings(max_examples=60, deadline=None)
@given(
    k=st.floats(1e-4, 2.0), alpha=st.floats(0.05, 8.0),
    iR=st.floats(1.0, 98.0), gap=st.floats(0.5, 40.0), D=st.floats(0.5, 365.0),
    bump=st.floats(0.01, 5.0),
)
def test_hd_monotone_in_rewards(k, alpha, iR, gap, D, bump):
    dR = min(iR + gap, 100.0)
    base = hd_choice_prob(k, alpha, iR, dR, D)
    if iR + bump < dR:
        assert hd_choice_prob(k, alpha, iR + bump, dR, D) <= base + 1e-12
    assert hd_choice_prob(k, alpha, iR, min(dR + bump, 120.0), D) >= base - 1e-12


# -- death process ------------------------------------------------------------

def test_death_eta():
    assert death_eta(1.3, 0.0) == 0.0
    assert death_eta(1.0, math.log(2.0)) == pytest.approx(0.5)
    etas = [death_eta(0.8, t) for t in (0.1, 0.5, 1.0, 2.0)]
    assert all(a < b for a, b in zip(etas, etas[1:]))


# -- IRT ----------------------------------------------------------------------

def test_irt_matched_ability_difficulty():
    assert irt_correct_prob("1pl", 0.3, 0.3) == pytest.approx(0.5)
    assert irt_correct_prob("2pl", 0.3, 0.3, gamma_k=2.0) == pytest.approx(0.5)


def test_irt_3pl_guessing_floor():
    assert irt_correct_prob("3pl", 0.5, 0.5, gamma_k=1.0, c_k=0.25) == pytest.approx(0.625)


def test_irt_2pl_discriminability_steepens():
    p1 = irt_correct_prob("2pl", 1.0, 0.0, gamma_k=1.0)
    p2 = irt_correct_prob("2pl", 1.0, 0.0, gamma_k=2.0)
    assert abs(p2 - 0.5) > abs(p1 - 0.5)


# -- dugongs -------------------------------------------------------------------

def test_dugong_mean_length():
    assert dugong_mean_length(2.5, 1.0, 0.5, 0.0) == pytest.approx(1.5)
    assert dugong_mean_length(2.5, 1.0, 0.5, 1.0) == pytest.approx(2.0)
    xs = np.linspace(0, 40, 30)
    ms = [dugong_mean_length(2.5, 1.0, 0.5, x) for x in xs]
    assert all(a < b for a, b in zip(ms, ms[1:]))
    assert ms[-1] == pytest.approx(2.5, abs=1e-9)


# -- peregrines -----------------------------------------------------------------

def test_peregrine_log_rate():
    assert peregrine_log_rate((0, 0, 0, 0), 3.0) == 0.0
    assert peregrine_log_rate((4.0, 1.0, 0.0, 0.0), 2.0) == pytest.approx(6.0)
    assert math.exp(peregrine_log_rate((4.0, 1.0, 0.0, 0.0), 2.0)) \
        == pytest.approx(403.4287934927351)
    assert peregrine_log_rate((0.0, 0.0, 0.0, -1.0), 5.0) == pytest.approx(-125.0)
    assert peregrine_log_rate((30.0, 0.0, 0.0, 0.0), 1.0) == LOG_RATE_CAP


# -- mastectomy -------------------------------------------------------------------

def test_mastectomy_death_prob():
    assert mastectomy_death_prob(0.3, 2.0, 1, 0.0) == pytest.approx(0.5)
    assert mastectomy_death_prob(0.1, math.log(2.0), 1, 10.0) \
        == pytest.approx(0.8807970779778823)
    # metastasized=0 leaves the base hazard untouched
    a = mastectomy_death_prob(0.1, 5.0, 0, 3.0)
    b = mastectomy_death_prob(0.1, 0.0, 0, 3.0)
    assert a == pytest.approx(b)


# -- predator-prey -----------------------------------------------------------------

ACCEPT_PARAMS = (1.0, 0.1, 1.5, 0.075)


def test_lv_prey_extinction_axis():
    prey, pred = lv_integrate(ACCEPT_PARAMS, (0.0, 8.0), 3.0)
    assert prey == 0
    assert pred < 8


def test_lv_equilibrium_fixed_point():
    a, b, g, d = ACCEPT_PARAMS
    init = (g / d, a / b)      # (20, 10)
    for t in (1.0, 10.0, 25.0, 50.0):
        assert lv_integrate(ACCEPT_PARAMS, init, t) == (20, 10)


def test_lv_step_halving_agreement():
    # oracle: the same integrator at half step; relative 1e-3 pre-rounding
    for t in (5.0, 20.0):
        c = np.array(lv_integrate_raw(ACCEPT_PARAMS, (10.0, 5.0), t, h=0.01))
        f = np.array(lv_integrate_raw(ACCEPT_PARAMS, (10.0, 5.0), t, h=0.005))
        assert np.max(np.abs(c - f) / np.maximum(np.abs(f), 1e-9)) < 1e-3


def test_lv_fine_step_reference():
    # spec reference point: step 1e-4 oracle at t=5
    c = np.array(lv_integrate_raw(ACCEPT_PARAMS, (10.0, 5.0), 5.0, h=0.01))
    f = np.array(lv_integrate_raw(ACCEPT_PARAMS, (10.0, 5.0), 5.0, h=1e-4))
    assert np.max(np.abs(c - f) / np.abs(f)) < 1e-3


def test_lv_outputs_nonnegative_integers():
    prey, pred = lv_integrate((1.2, 0.12, 0.9, 0.06), (40, 12), 17.3)
    assert isinstance(prey, int) and isinstance(pred, int)
    assert prey >= 0 and pred >= 0


# -- emotions --------------------------------------------------------------------

def _coeffs(alpha=0.0, b_win=0.0, b_pe=0.0, b_abspe=0.0):
    block = {}
    for e in EMOTIONS:
        block[f"{e}_alpha"] = alpha
        block[f"{e}_beta_win"] = b_win
        block[f"{e}_beta_pe"] = b_pe
        block[f"{e}_beta_abspe"] = b_abspe
    return block


def test_emotion_means_fig_example():
    # prizes (50, 20, 10), probs (.1, .4, .5): EV = 18; outcome 1: PE = 32
    means, win, pe = emotion_means(_coeffs(alpha=1.0, b_pe=1.0),
                                   (50.0, 20.0, 10.0), (0.1, 0.4, 0.5), 1)
    assert win == pytest.approx(50.0)
    assert pe == pytest.approx(32.0)
    assert means[0] == pytest.approx(1.0 + 32.0)


def test_emotion_zero_pe_at_expected_outcome():
    means, win, pe = emotion_means(_coeffs(alpha=2.0, b_win=0.1, b_pe=9.9, b_abspe=9.9),
                                   (30.0, 30.0, 30.0), (0.2, 0.5, 0.3), 2)
    assert pe == 0.0
    assert means[3] == pytest.approx(2.0 + 0.1 * 30.0)


def test_emotion_pe_abspe_cancellation_for_losses():
    # PE < 0 and b_pe == b_abspe: the two terms cancel exactly
    block = _coeffs(alpha=4.0, b_win=0.02, b_pe=0.7, b_abspe=0.7)
    means, win, pe = emotion_means(block, (50.0, 20.0, 10.0), (0.1, 0.4, 0.5), 3)
    assert pe < 0
    assert means[0] == pytest.approx(4.0 + 0.02 * win)


def test_emotion_probs_must_sum_to_one():
    with pytest.raises(ValueError):
        emotion_means(_coeffs(), (1.0, 2.0, 3.0), (0.5, 0.4, 0.2), 1)


def test_likert_cells_sum_to_one():
    lp = likert_cell_logprobs(np.array([1.0, 5.2, 12.0]), 0.75)
    totals = np.exp(lp).sum(axis=-1)
    assert np.allclose(totals, 1.0, atol=1e-12)


# -- moral machines -----------------------------------------------------------------

def _zero_coeffs(**over):
    base = {name: 0.0 for name in
            ("beta_intervention", "beta_group", "beta_gender", "beta_age",
             "beta_social_status", "beta_fitness", "beta_human_count", "beta_species")}
    base.update(over)
    return base


def test_moral_identical_groups_stay_is_half():
    c = _zero_coeffs()
    g = ("boy", "old_woman")
    assert moral_choice_prob(c, g, g, "stay") == pytest.approx(0.5)


def test_moral_age_example():
    # young vs old with beta_age = 1: logit = (+1+1) - (-1-1) = 4
    c = _zero_coeffs(beta_age=1.0)
    p = moral_choice_prob(c, ("boy", "girl"), ("old_man", "old_woman"), "stay")
    assert moral_logit(c, ("boy", "girl"), ("old_man", "old_woman"), "stay") == pytest.approx(4.0)
    assert p == pytest.approx(0.9820137900379085, abs=1e-9)


def test_moral_human_count_example():
    c = _zero_coeffs(beta_human_count=1.0)
    p = moral_choice_prob(c, ("boy", "girl"), ("boy",), "stay")
    assert p == pytest.approx(0.7310585786300049, abs=1e-9)


def test_moral_intervention_penalizes_swerve():
    c = _zero_coeffs(beta_intervention=0.8)
    g = ("large_man",)
    assert moral_choice_prob(c, g, g, "swerve") < 0.5
    assert moral_choice_prob(c, g, g, "stay") == pytest.approx(0.5)


def test_moral_unknown_character():
    with pytest.raises(KeyError):
        moral_choice_prob(_zero_coeffs(), ("unicorn",), ("boy",), "stay")


def test_moral_roster_complete():
    assert len(CHARACTERS) == 18
    assert {"stroller", "pregnant_woman", "dog", "cat"} <= set(CHARACTERS)


# -- verbalizer ------------------------------------------------------------------

def test_verbalize_emotions_salience_and_determinism():
    ratings = dict(zip(EMOTIONS, (9, 5, 5, 5, 5, 5, 5, 1)))
    out1 = verbalize_emotions(ratings, pe=10.0)
    out2 = verbalize_emotions(ratings, pe=10.0)
    assert out1 == out2 and not out1.fallback
    assert out1.text.startswith("The player might be feeling")
    assert "happy" in out1.text
    assert "angry" not in out1.text and "fearful" not in out1.text


def test_verbalize_moral_prefix():
    out = verbalize_moral(1, {"age": 0.5, "group": 0.0})
    assert out.text.startswith("I choose to save group 1 because")
    out2 = verbalize_moral(0, {"age": -0.5, "group": 0.0})
    assert out2.text.startswith("I choose to save group 2 because")


def test_verbalize_external_falls_back():
    out = verbalize_emotions(dict(zip(EMOTIONS, [5] * 8)), pe=0.0,
                             mode="external", endpoint="http://127.0.0.1:9/none")
    assert out.fallback
    assert out.text.startswith("The player might be feeling")
