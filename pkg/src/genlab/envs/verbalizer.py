"""Rendering structured participant responses as natural-language sentences.

Template mode is fully deterministic: the same payload always produces the
same sentence. External mode forwards the structured payload to a configured
HTTP endpoint that hosts a language model; any failure falls back to the
template with a flag, so transcripts never block on a remote service.
"""

from __future__ import annotations

import json
import urllib.request
from dataclasses import dataclass

TEMPLATE_VERSION = "1"

_EMOTION_ADJ = {
    "happiness": "happy",
    "sadness": "sad",
    "anger": "angry",
    "surprise": "surprised",
    "fear": "fearful",
    "disgust": "disgusted",
    "contentment": "content",
    "disappointment": "disappointed",
}

_MORAL_REASONS = {
    "age": ("they are younger", "they are older but favored anyway"),
    "human": ("more lives are at stake on that side", "fewer lives are at stake on that side"),
    "gender": ("of who they are", "of who they are"),
    "status": ("of their standing", "of their standing"),
    "fitness": ("they are fitter", "fitness matters less here"),
    "species": ("they are human", "animals matter here"),
    "group": ("they are the passengers", "the passengers matter less"),
    "intervention": ("it avoids intervening", "acting feels justified"),
}


@dataclass(frozen=True)
class VerbalizedText:
    text: str
    fallback: bool = False


def _intensity(value: int) -> str:
    if value >= 8:
        return "very"
    if value >= 6:
        return "quite"
    if value == 5:
        return "somewhat"
    if value >= 3:
        return "slightly"
    return "not at all"


def _emotions_template(ratings: dict[str, int], pe: float) -> str:
    # Salience: top-2 emotions by distance from the scale midpoint, ties in
    # canonical declaration order.
    ranked = sorted(ratings.items(), key=lambda kv: -abs(kv[1] - 5))
    picks = ranked[:2]
    phrases = [f"{_intensity(v)} {_EMOTION_ADJ[k]}" for k, v in picks]
    if pe > 0:
        reason = "the outcome was better than expected"
    elif pe < 0:
        reason = "the outcome was worse than expected"
    else:
        reason = "the outcome matched expectations"
    return f"The player might be feeling {' and '.join(phrases)} because {reason}."


def _moral_template(choice: int, contributions: dict[str, float]) -> str:
    group = 1 if choice == 1 else 2
    # Dominant signed contribution decides the stated reason.
    attr, weight = max(contributions.items(), key=lambda kv: (abs(kv[1]), kv[0]))
    if weight == 0.0:
        reason = "neither side stood out"
    else:
        # A positive contribution pushes toward group 1.
        toward_chosen = (weight > 0) == (group == 1)
        reason = _MORAL_REASONS[attr][0 if toward_chosen else 1]
    return f"I choose to save group {group} because {reason}."


def _external(payload: dict, endpoint: str, timeout: float = 5.0) -> str:
    req = urllib.request.Request(
        endpoint,
        data=json.dumps(payload).encode("utf-8"),
        headers={"Content-Type": "application/json"},
    )
    with urllib.request.urlopen(req, timeout=timeout) as resp:
        body = json.loads(resp.read().decode("utf-8"))
    return str(body["text"])


def verbalize_emotions(ratings: dict[str, int], pe: float, mode: str = "template",
                       endpoint: str | None = None) -> VerbalizedText:
    if mode == "external" and endpoint:
        payload = {
            "task": "emotions",
            "instructions": (
                "Describe in one concise sentence how the player might feel after the spin, "
                "mentioning only the most salient emotions and why, without quoting numbers. "
                "Start with 'The player might be feeling...because...'."
            ),
            "ratings": {k: int(v) for k, v in ratings.items()},
            "scale": "1: Not at all, 9: Very much",
            "prediction_error": pe,
        }
        try:
            return VerbalizedText(_external(payload, endpoint))
        except Exception:
            return VerbalizedText(_emotions_template(ratings, pe), fallback=True)
    return VerbalizedText(_emotions_template(ratings, pe))


def verbalize_moral(choice: int, contributions: dict[str, float], mode: str = "template",
                    endpoint: str | None = None) -> VerbalizedText:
    if mode == "external" and endpoint:
        payload = {
            "task": "moral",
            "instructions": (
                "State the decision in one concise sentence with the most salient reason, without "
                "mentioning the numeric weights. Start with 'I choose to save group 1/group 2 because...'."
            ),
            "choice": int(choice),
            "contributions": {k: float(v) for k, v in contributions.items()},
        }
        try:
            return VerbalizedText(_external(payload, endpoint))
        except Exception:
            return VerbalizedText(_moral_template(choice, contributions), fallback=True)
    return VerbalizedText(_moral_template(choice, contributions))
