"""Human relevance judgments for sampled indicator matches."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

VERDICTS = ("relevant", "irrelevant", "unsure")


@dataclass(frozen=True)
class Label:
    task_id: str
    rater: str
    verdict: str
    # per-phrase verdicts capture whether indicators express a concern
    # individually or only in combination
    phrase_verdicts: Mapping[str, str] = field(default_factory=dict)
    labeled_at: int = 0

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "rater": self.rater,
            "verdict": self.verdict,
            "phrase_verdicts": dict(self.phrase_verdicts),
            "labeled_at": self.labeled_at,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Label":
        label = cls(
            task_id=d["task_id"],
            rater=d["rater"],
            verdict=d["verdict"],
            phrase_verdicts=dict(d.get("phrase_verdicts", {})),
            labeled_at=int(d.get("labeled_at", 0)),
        )
        label.validate()
        return label

    def validate(self) -> None:
        if not self.task_id:
            raise ValueError("label: task_id is empty")
        if not self.rater:
            raise ValueError("label: rater is empty")
        if self.verdict not in VERDICTS:
            raise ValueError(f"label: unknown verdict {self.verdict!r}")
        for phrase, verdict in self.phrase_verdicts.items():
            if verdict not in VERDICTS:
                raise ValueError(
                    f"label: unknown verdict {verdict!r} for phrase {phrase!r}"
                )
