#!/usr/bin/env python3
"""Hand-built arc fixture: one character pair viewed in both directions
(two directed dyads) over three seasons, plus the expected heatmap CSV.

The CSV is computed here from first principles: per (dyad, season) shares in
percent over all prediction types, restricted to the TOP_N types with the
largest summed share (ties to the lower rank), listed in that order.
"""

import json
from collections import Counter
from pathlib import Path

OUT = Path(__file__).resolve().parent
TOP_N = 4
RANK = {
    "grandparent_of": 1, "parent_of": 3, "child_of": 5, "sibling_of": 7,
    "ex-spouse_of": 9, "spouse_of": 12, "enemy_of": 15, "colleague_of": 16,
    "friend_of": 27, "other": 28,
}

A, B = "Marge Holloway", "Walter Holloway"
# (head, tail, season, gold, predicted), one per scene.
CELLS = {
    (A, B, 1): ["spouse_of", "spouse_of", "spouse_of", "friend_of"],
    (A, B, 2): ["spouse_of", "enemy_of", "enemy_of"],
    (A, B, 3): ["spouse_of", "spouse_of"],
    (B, A, 1): ["spouse_of", "friend_of", "colleague_of"],
    (B, A, 2): ["ex-spouse_of", "spouse_of"],
    (B, A, 3): ["enemy_of", "spouse_of", "spouse_of", "spouse_of", "other"],
}
DISTRACTOR = ("Lily Holloway", "Sam Holloway", 1, "sibling_of", "enemy_of")


def instance(i, head, tail, season, gold):
    return {
        "title_id": f"arc_s{season}", "scene_index": i, "head": head, "tail": tail,
        "label": gold, "tokens": ["<s>"], "attribution": [None],
        "season": season, "episode": 1,
    }


def prediction(i, head, tail, season, label):
    dist = {label: 1.0}
    return {
        "title_id": f"arc_s{season}", "scene_index": i, "head": head, "tail": tail,
        "predicted": label, "distribution": dist, "model_id": "fixture",
    }


instances, preds, shares = [], [], {}
i = 0
for (head, tail, season), labels in CELLS.items():
    counts = Counter(labels)
    shares[(f"{head}->{tail}", season)] = {k: 100.0 * v / len(labels) for k, v in counts.items()}
    for label in labels:
        instances.append(instance(i, head, tail, season, "spouse_of"))
        preds.append(prediction(i, head, tail, season, label))
        i += 1
h, t, s, gold, p = DISTRACTOR
instances.append(instance(i, h, t, s, gold))
preds.append(prediction(i, h, t, s, p))

with open(OUT / "arc_instances.jsonl", "w") as f:
    f.writelines(json.dumps(r) + "\n" for r in instances)
with open(OUT / "arc_preds.jsonl", "w") as f:
    f.writelines(json.dumps(r) + "\n" for r in preds)

mass = Counter()
for cell in shares.values():
    for k, v in cell.items():
        mass[k] += v
top = sorted(mass, key=lambda k: (-mass[k], RANK[k]))[:TOP_N]
dyads = [f"{A}->{B}", f"{B}->{A}"]
lines = ["dyad,season,relation_type,percentage"]
for d in dyads:
    for season in (1, 2, 3):
        for k in top:
            lines.append(f"{d},{season},{k},{shares[(d, season)].get(k, 0.0):.4f}")
(OUT / "arc_heatmap.csv").write_text("\n".join(lines) + "\n")
