"""Callback-driven agent loops: plug scientist/novice logic into a session.

Callbacks receive a context dict and never the engine internals:

    propose_design(ctx) -> design dict      ctx carries framing, design_space,
                                            history, step, mu0/sigma0, goal,
                                            last_rejection (on retries)
    predict(query, ctx) -> value            value | list for vector goals
    explain(budget, ctx) -> str             scientist only

The novice context exposes the explanation and framing but no history key
at all. Callback exceptions terminate the loop gracefully: the adapter
closes the session and reports the trial incomplete.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .client import ExperimentResult, SessionClient


@dataclass
class AdapterOutcome:
    incomplete: bool
    record: dict | None
    error: str | None = None
    explanation_sent: str | None = None


@dataclass
class AgentAdapter:
    """Drives a full trial or discovery episode against an open session."""

    propose_design: object
    predict: object
    explain: object = None
    history: list = field(default_factory=list)

    def _ctx(self, client: SessionClient, extra: dict | None = None) -> dict:
        ctx = {
            "framing": client.framing,
            "design_space": client.design_space,
            "goal": client.description.get("goal", {}),
            "mu0": client.description.get("mu0"),
            "sigma0": client.description.get("sigma0"),
            "step": client.steps_done,
            "history": list(self.history),
        }
        if extra:
            ctx.update(extra)
        return ctx

    def _answer_queries(self, client: SessionClient, ctx_extra: dict | None = None) -> None:
        batch = client.pending
        preds = [self.predict(dict(q), self._ctx(client, ctx_extra))
                 for q in batch.queries]
        client.submit_predictions(preds)

    def _next_experiment(self, client: SessionClient) -> None:
        rejection = None
        while True:
            extra = {"last_rejection": rejection} if rejection else None
            design = self.propose_design(self._ctx(client, extra))
            out = client.step_experiment(design)
            if isinstance(out, ExperimentResult):
                self.history.append({"design": design, "value": out.value,
                                     "text": out.text})
                return
            rejection = out.reason
            if client.done or out.retries_left <= 0:
                return

    def run(self, client: SessionClient) -> AdapterOutcome:
        """Scientist loop: experiments, checkpoint answers, explanation."""
        explanation_sent = None
        try:
            while not client.done:
                if client.pending is not None and client.pending.phase == "scientist":
                    self._answer_queries(client)
                elif client.awaiting_explanation:
                    text = "" if self.explain is None else \
                        self.explain(client.explanation_budget, self._ctx(client))
                    explanation_sent = client.submit_explanation(str(text))
                elif client.pending is not None:
                    break    # novice phase: caller hands over to a novice adapter
                else:
                    self._next_experiment(client)
        except Exception as e:  # callback or transport failure: stop cleanly
            client.close()
            return AdapterOutcome(incomplete=True, record=None, error=str(e),
                                  explanation_sent=explanation_sent)
        record = client.record()
        incomplete = bool(record.get("incomplete")) if isinstance(record, dict) else \
            bool(record and record.get("scientist", {}).get("incomplete"))
        return AdapterOutcome(incomplete=incomplete, record=record,
                              explanation_sent=explanation_sent)


@dataclass
class NoviceAdapter:
    """Answers the novice query batch; sees the explanation, never history."""

    predict: object

    def run(self, client: SessionClient) -> AdapterOutcome:
        batch = client.pending
        if batch is None or batch.phase != "novice":
            raise RuntimeError("no novice query batch is outstanding")
        ctx = {
            "framing": batch.framing or client.framing,
            "explanation": batch.explanation or "",
            "goal": client.description.get("goal", {}),
            "mu0": client.description.get("mu0"),
            "sigma0": client.description.get("sigma0"),
        }
        try:
            preds = [self.predict(dict(q), dict(ctx)) for q in batch.queries]
            client.submit_predictions(preds)
        except Exception as e:
            client.close()
            return AdapterOutcome(incomplete=True, record=None, error=str(e))
        return AdapterOutcome(incomplete=False, record=client.record())


def agent_adapter(callbacks: dict) -> AgentAdapter:
    """Build an adapter from a callbacks dict
    (``propose_design``, ``predict``, optional ``explain``)."""
    return AgentAdapter(propose_design=callbacks["propose_design"],
                        predict=callbacks["predict"],
                        explain=callbacks.get("explain"))


def novice_adapter(callbacks: dict) -> NoviceAdapter:
    return NoviceAdapter(predict=callbacks["predict"])
