#!/usr/bin/env python3
"""Regenerates the bundled fixture suite.

A small fictional series, six episodes over three seasons, written as
indentation-formatted teleplays with per-line gold roles, plus the side files
the pipeline needs (rosters, relations, name lexicon, episode map, splits).
Output is deterministic.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent
SEED = 20240611

ACTION_COL, DIALOGUE_COL, NOTE_COL, SPEAKER_COL = 0, 10, 16, 24
CHAR_WIDTH = 7.2

CAST = {
    "Marge Holloway": ["MARGE", "MARGE (V.O.)", "MARGE (CONT'D)"],
    "Walter Holloway": ["WALTER", "WALTER (CONT'D)", "WALT"],
    "Lily Holloway": ["LILY"],
    "Sam Holloway": ["SAM"],
    "Ray Okafor": ["RAY", "DET. OKAFOR"],
    "June Park": ["JUNE"],
}
EXTRAS = ["Officer Diaz", "Mailman"]

# Directed relation sets; several dyads carry more than one label.
RELATIONS = [
    ("Marge Holloway", "Walter Holloway", ["spouse_of"]),
    ("Walter Holloway", "Marge Holloway", ["spouse_of"]),
    ("Marge Holloway", "Lily Holloway", ["parent_of"]),
    ("Walter Holloway", "Lily Holloway", ["parent_of"]),
    ("Marge Holloway", "Sam Holloway", ["parent_of"]),
    ("Walter Holloway", "Sam Holloway", ["parent_of"]),
    ("Lily Holloway", "Marge Holloway", ["child_of"]),
    ("Lily Holloway", "Walter Holloway", ["child_of"]),
    ("Sam Holloway", "Marge Holloway", ["child_of"]),
    ("Sam Holloway", "Walter Holloway", ["child_of"]),
    ("Lily Holloway", "Sam Holloway", ["sibling_of"]),
    ("Sam Holloway", "Lily Holloway", ["sibling_of"]),
    ("Walter Holloway", "Ray Okafor", ["colleague_of", "friend_of"]),
    ("Ray Okafor", "Walter Holloway", ["colleague_of", "friend_of"]),
    ("Marge Holloway", "June Park", ["friend_of", "neighbor_of"]),
    ("June Park", "Marge Holloway", ["friend_of", "neighbor_of"]),
    ("Ray Okafor", "Marge Holloway", ["acquaintance_of"]),
    ("Marge Holloway", "Ray Okafor", ["acquaintance_of"]),
    ("June Park", "Lily Holloway", ["neighbor_of"]),
    ("Lily Holloway", "June Park", ["neighbor_of"]),
]

SIGNATURE = {
    "spouse_of": "honey",
    "parent_of": "kids",
    "child_of": "mom",
    "sibling_of": "brother",
    "colleague_of": "case",
    "friend_of": "buddy",
    "neighbor_of": "fence",
    "acquaintance_of": "evening",
}

FILLER = (
    "we should talk about the harbor before the storm comes in tonight and the "
    "boats need checking the lights went out again on the pier nobody saw anything "
    "strange at the market this morning but the coffee was cold and the radio kept "
    "playing that song about the lighthouse keeper who never came home"
).split()

LOCATIONS = [
    "INT. HOLLOWAY KITCHEN - MORNING",
    "EXT. HARBOR PIER - NIGHT",
    "INT. POLICE STATION - DAY",
    "INT. HOLLOWAY LIVING ROOM - EVENING",
    "EXT. BACKYARD FENCE - DAY",
    "INT. DINER - NIGHT",
    "SCENE 12 - LIGHTHOUSE STAIRS",
]

NOTES = ["(quietly)", "(beat)", "(to Lily)", "(laughing)", "(off his look)"]

ACTIONS = [
    "The kettle whistles. Nobody moves to get it.",
    "Rain hammers the window.",
    "A foghorn sounds somewhere out on the water.",
    "The door bangs open and wind scatters the papers.",
    "Lights flicker, then hold.",
]

EPISODES = [
    ("harbor_lights_s1e1", 1, 1, "train"),
    ("harbor_lights_s1e2", 1, 2, "train"),
    ("harbor_lights_s2e1", 2, 1, "train"),
    ("harbor_lights_s2e2", 2, 2, "dev"),
    ("harbor_lights_s3e1", 3, 1, "test"),
    ("harbor_lights_s3e2", 3, 2, "test"),
]

GROUPS = [
    ["Marge Holloway", "Walter Holloway"],
    ["Marge Holloway", "Walter Holloway", "Lily Holloway"],
    ["Lily Holloway", "Sam Holloway"],
    ["Walter Holloway", "Ray Okafor"],
    ["Marge Holloway", "June Park"],
    ["Marge Holloway", "Ray Okafor", "Walter Holloway"],
    ["June Park", "Lily Holloway", "Marge Holloway"],
    ["Sam Holloway", "Lily Holloway", "Walter Holloway", "Marge Holloway"],
]

REL = {(h, t): labels for h, t, labels in RELATIONS}


def sentence(rng, planted=None, mention=None):
    words = [rng.choice(FILLER) for _ in range(rng.randint(5, 12))]
    if planted:
        words.insert(rng.randint(0, len(words)), planted)
    if mention:
        words.insert(rng.randint(0, len(words)), mention)
    text = " ".join(words)
    text = text[0].upper() + text[1:]
    return text + rng.choice([".", "?", "!", "..."])


def wrap(text, width=44):
    lines, cur = [], ""
    for w in text.split():
        if cur and len(cur) + 1 + len(w) > width:
            lines.append(cur)
            cur = w
        else:
            cur = f"{cur} {w}" if cur else w
    if cur:
        lines.append(cur)
    return lines


def scene(rng, header):
    group = rng.choice(GROUPS)
    out = [(ACTION_COL, header, "scene_header"), (0, "", "-")]
    if rng.random() < 0.7:
        for line in wrap(rng.choice(ACTIONS), 60):
            out.append((ACTION_COL, line, "action_statement"))
        out.append((0, "", "-"))
    for _ in range(rng.randint(4, 8)):
        speaker = rng.choice(group)
        others = [c for c in group if c != speaker]
        addressee = rng.choice(others)
        labels = REL.get((speaker, addressee), [])
        planted = SIGNATURE[labels[0]] if labels and rng.random() < 0.8 else None
        mention = None
        if rng.random() < 0.3:
            mention = addressee.split()[0]
        label = rng.choice(CAST[speaker])
        out.append((SPEAKER_COL, label, "speaker_label"))
        if rng.random() < 0.25:
            out.append((NOTE_COL, rng.choice(NOTES), "speaker_note"))
        for line in wrap(sentence(rng, planted, mention)):
            out.append((DIALOGUE_COL, line, "dialogue"))
        out.append((0, "", "-"))
        if rng.random() < 0.15:
            for line in wrap(rng.choice(ACTIONS), 60):
                out.append((ACTION_COL, line, "action_statement"))
            out.append((0, "", "-"))
    return out


def main():
    rng = random.Random(SEED)
    scripts = OUT / "scripts"
    ocr = OUT / "ocr"
    scripts.mkdir(exist_ok=True)
    ocr.mkdir(exist_ok=True)
    scene_counts = {}
    for k, (title, season, episode, _) in enumerate(EPISODES):
        n_scenes = 10
        lines = []
        for s in range(n_scenes):
            header = LOCATIONS[(s + k) % len(LOCATIONS)]
            lines.extend(scene(rng, header))
        scene_counts[title] = n_scenes
        text = "".join(f"{' ' * col}{t}\n" if t else "\n" for col, t, _ in lines)
        (scripts / f"{title}.txt").write_text(text)
        (scripts / f"{title}.roles").write_text("".join(f"{role}\n" for _, _, role in lines))
        if k < 2:
            with open(ocr / f"{title}.jsonl", "w") as f:
                for col, t, _ in lines:
                    jitter = rng.uniform(-1.5, 1.5) if t else 0.0
                    x0 = round(36.0 + col * CHAR_WIDTH + jitter, 2) if t else 0.0
                    f.write(json.dumps({"text": t, "x0": x0}) + "\n")
    (OUT / "scene_counts.json").write_text(json.dumps(scene_counts, indent=2, sort_keys=True) + "\n")

    with open(OUT / "rosters.jsonl", "w") as f:
        for title, *_ in EPISODES:
            chars = [{"name": n} for n in list(CAST) + EXTRAS]
            f.write(json.dumps({"title_id": title, "characters": chars}) + "\n")
    with open(OUT / "relations.jsonl", "w") as f:
        for title, *_ in EPISODES:
            for h, t, labels in RELATIONS:
                f.write(json.dumps({"title_id": title, "head": h, "tail": t, "relations": labels}) + "\n")
    with open(OUT / "episodes.jsonl", "w") as f:
        for title, season, episode, _ in EPISODES:
            f.write(json.dumps({"title_id": title, "season": season, "episode": episode}) + "\n")
    (OUT / "splits.tsv").write_text("".join(f"{t}\t{s}\n" for t, _, _, s in EPISODES))
    lexicon = {
        "marge": "proper", "walter": "proper", "walt": "proper", "lily": "proper",
        "sam": "proper", "ray": "proper", "okafor": "proper", "june": "proper",
        "park": "content", "holloway": "proper", "det": "content", "officer": "content",
        "diaz": "proper", "mailman": "content",
    }
    (OUT / "lexicon.tsv").write_text("".join(f"{k}\t{v}\n" for k, v in sorted(lexicon.items())))


if __name__ == "__main__":
    main()
