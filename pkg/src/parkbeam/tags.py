"""Photo-tag relative-importance analytics for zones.

A tag's relative importance in a zone is its observed count divided by
the count expected under a uniform tag distribution scaled to the zone's
tag total. Probabilities and ratios are kept as exact fractions so the
per-zone identity sum(p_tag * r) == 1 holds to the bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

MAX_CLEAN_ITERATIONS = 5


@dataclass
class TagTable:
    """(zone, tag) occurrence counts with cached totals."""

    counts: dict[tuple[str, str], int]

    def __post_init__(self):
        for key, c in self.counts.items():
            if c < 1:
                raise ValueError(f"tag counts must be >= 1, got {c} for {key}")

    @classmethod
    def from_counts(cls, counts: Mapping[tuple[str, str], int]) -> "TagTable":
        return cls(dict(counts))

    def zones(self) -> list[str]:
        return sorted({z for z, _ in self.counts})

    def tags(self) -> list[str]:
        return sorted({t for _, t in self.counts})

    def zone_total(self, zone_id: str) -> int:
        return sum(c for (z, _), c in self.counts.items() if z == zone_id)

    def tag_total(self, tag: str) -> int:
        return sum(c for (_, t), c in self.counts.items() if t == tag)

    def grand_total(self) -> int:
        return sum(self.counts.values())

    def without_tags(self, tags: Iterable[str]) -> "TagTable":
        drop = set(tags)
        return TagTable({k: c for k, c in self.counts.items() if k[1] not in drop})


def tag_probability(table: TagTable) -> dict[str, Fraction]:
    """p_tag = tag total / grand total; the values sum to exactly 1."""
    total = table.grand_total()
    if total == 0:
        raise ValueError("empty tag table")
    totals: dict[str, int] = {}
    for (_, tag), c in table.counts.items():
        totals[tag] = totals.get(tag, 0) + c
    return {tag: Fraction(n, total) for tag, n in sorted(totals.items())}


def expected_count(p_tag: Fraction | float, zone_total: int):
    """Expected occurrences of a tag in a zone with zone_total tags."""
    return p_tag * zone_total


def relative_importance(table: TagTable) -> dict[tuple[str, str], Fraction]:
    """r = observed / expected per (zone, tag); 1 means average occurrence."""
    probs = tag_probability(table)
    zone_totals: dict[str, int] = {}
    for (zone, _), c in table.counts.items():
        zone_totals[zone] = zone_totals.get(zone, 0) + c
    out: dict[tuple[str, str], Fraction] = {}
    for (zone, tag), n in sorted(table.counts.items()):
        expected = expected_count(probs[tag], zone_totals[zone])
        out[(zone, tag)] = Fraction(n) / expected
    return out


def clean_tags(
    table: TagTable,
    stopwords: Iterable[str] = (),
    irrelevant: Iterable[str] = (),
) -> TagTable:
    """Apply the cleaning rules: stopwords, configured irrelevant tags,
    then tags whose importance exceeds 1 in exactly one zone.

    The single-zone rule re-evaluates importances after each removal until
    a fixpoint, which must arrive within a handful of iterations.
    """
    cleaned = table.without_tags(set(stopwords) | set(irrelevant))
    for _ in range(MAX_CLEAN_ITERATIONS):
        if not cleaned.counts:
            return cleaned
        importance = relative_importance(cleaned)
        above: dict[str, int] = {}
        for (_, tag), r in importance.items():
            if r > 1:
                above[tag] = above.get(tag, 0) + 1
        single = {tag for tag, zones in above.items() if zones == 1}
        if not single:
            return cleaned
        cleaned = cleaned.without_tags(single)
    raise RuntimeError(
        f"single-zone cleaning did not stabilize within {MAX_CLEAN_ITERATIONS} iterations"
    )


def cluster_tag_profile(
    table: TagTable, labels: Mapping[str, int], cutoff: float = 1.0
) -> dict[int, list[tuple[str, float]]]:
    """Per-cluster tags ranked by mean importance, cut off at r > cutoff.

    Zones missing a tag contribute r = 0 to that tag's cluster mean.
    """
    zones = table.zones()
    missing = [z for z in zones if z not in labels]
    if missing:
        raise ValueError(f"cluster labels missing for zones: {missing[:5]}")
    importance = relative_importance(table)
    members: dict[int, list[str]] = {}
    for zone in zones:
        members.setdefault(labels[zone], []).append(zone)
    profiles: dict[int, list[tuple[str, float]]] = {}
    for label in sorted(members):
        cluster_zones = members[label]
        rows = []
        for tag in table.tags():
            mean_r = sum(importance.get((z, tag), Fraction(0)) for z in cluster_zones) / len(
                cluster_zones
            )
            if mean_r > cutoff:
                rows.append((tag, float(mean_r)))
        rows.sort(key=lambda tr: (-tr[1], tr[0]))
        profiles[label] = rows
    return profiles


def load_stopwords(paths: Iterable) -> set[str]:
    """Union of stopword list files (one lowercase token per line, '#' comments)."""
    words: set[str] = set()
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                token = line.strip().lower()
                if token and not token.startswith("#"):
                    words.add(token)
    return words


def write_tag_importance(path, table: TagTable, header_line: str | None = None):
    """Emit tag_importance.csv (zone_id, tag, count, expected, importance)."""
    probs = tag_probability(table)
    importance = relative_importance(table)
    zone_totals = {z: table.zone_total(z) for z in table.zones()}
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(header_line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["zone_id", "tag", "count", "expected", "importance"])
        for (zone, tag), count in sorted(table.counts.items()):
            expected = float(expected_count(probs[tag], zone_totals[zone]))
            writer.writerow(
                [zone, tag, count, format(expected, ".6g"), format(float(importance[(zone, tag)]), ".6g")]
            )


def write_cluster_tags(path, profiles: Mapping[int, list[tuple[str, float]]], header_line=None):
    """Emit cluster_tags.csv (label, rank, tag, mean_importance)."""
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(header_line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["label", "rank", "tag", "mean_importance"])
        for label in sorted(profiles):
            for rank, (tag, mean_r) in enumerate(profiles[label], start=1):
                writer.writerow([label, rank, tag, format(mean_r, ".6g")])
