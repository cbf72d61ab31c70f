"""Card-deck scoring: ordered equivalence classes with blank-card gaps.

The decision maker lays out item cards from worst to best, optionally several
per position (an equivalence class), and inserts blank cards between
positions; more blanks means a larger difference in value. A fictitious zero
level anchors the scale: the worst class sits ``zero_gap`` blanks above it
and the zero level itself always scores 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

__all__ = ["RankingError", "CardRanking", "ScoreTable", "score", "merge"]


class RankingError(ValueError):
    pass


@dataclass(frozen=True)
class CardRanking:
    """Equivalence classes from worst to best, with blank-card counts between them.

    ``blanks[s]`` counts the blank cards between classes[s] and classes[s+1];
    ``zero_gap`` counts those between the zero level and classes[0].
    """

    classes: tuple[tuple[str, ...], ...]
    blanks: tuple[int, ...]
    zero_gap: int = 0

    def __post_init__(self):
        if not self.classes:
            raise RankingError("ranking has no classes")
        if len(self.blanks) != len(self.classes) - 1:
            raise RankingError(
                f"{len(self.classes)} classes need {len(self.classes) - 1} blank counts, "
                f"got {len(self.blanks)}"
            )
        if self.zero_gap < 0 or any(b < 0 for b in self.blanks):
            raise RankingError("blank-card counts must be >= 0")
        if any(int(b) != b for b in (*self.blanks, self.zero_gap)):
            raise RankingError("blank-card counts must be integers")
        seen: set[str] = set()
        for cls in self.classes:
            if not cls:
                raise RankingError("empty equivalence class")
            for item in cls:
                if item in seen:
                    raise RankingError(f"item {item!r} appears in more than one class")
                seen.add(item)

    @property
    def items(self) -> tuple[str, ...]:
        return tuple(item for cls in self.classes for item in cls)

    def to_json(self) -> dict:
        return {
            "classes": [list(cls) for cls in self.classes],
            "blanks": list(self.blanks),
            "zero_gap": self.zero_gap,
        }

    @staticmethod
    def from_json(doc: Mapping) -> "CardRanking":
        try:
            classes = tuple(tuple(str(i) for i in cls) for cls in doc["classes"])
            blanks = tuple(int(b) for b in doc.get("blanks", []))
            zero_gap = int(doc.get("zero_gap", 0))
        except (KeyError, TypeError, ValueError) as exc:
            raise RankingError(f"malformed ranking document: {exc}") from exc
        return CardRanking(classes, blanks, zero_gap)


@dataclass(frozen=True)
class ScoreTable:
    """Integer score per item; the zero level is pinned at 0."""

    scores: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "scores", dict(self.scores))

    def __getitem__(self, item: str) -> int:
        return self.scores[item]

    def items(self):
        return self.scores.items()

    def to_json(self) -> dict:
        return dict(self.scores)


def score(ranking: CardRanking) -> ScoreTable:
    """Apply the recurrence v_s = v_{s-1} + e_{s-1} + 1 with v_0 = 0 at the zero level."""
    table: dict[str, int] = {}
    value = 0
    for s, cls in enumerate(ranking.classes):
        gap = ranking.zero_gap if s == 0 else ranking.blanks[s - 1]
        value += gap + 1
        for item in cls:
            table[item] = value
    return ScoreTable(table)


def merge(lower: CardRanking, upper: CardRanking, bridge_cards: int) -> CardRanking:
    """Concatenate two rankings, bridging best-of-lower to worst-of-upper.

    The upper ranking's zero level is discarded; the lower one's is kept. The
    bridge count plays the role of blanks between the lower ranking's best
    class and the upper ranking's worst class.
    """
    if bridge_cards < 0 or int(bridge_cards) != bridge_cards:
        raise RankingError("bridge card count must be a nonnegative integer")
    overlap = set(lower.items) & set(upper.items)
    if overlap:
        raise RankingError(f"rankings share items: {sorted(overlap)}")
    return CardRanking(
        classes=lower.classes + upper.classes,
        blanks=lower.blanks + (int(bridge_cards),) + upper.blanks,
        zero_gap=lower.zero_gap,
    )
