#!/usr/bin/env python3
"""Writes the pinned chat prompts for the bedroom exemplar scene.

Typed out independently of the Rust renderer; the acceptance suite compares
`serde_json::to_string_pretty(messages)` against these files byte for byte.
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parent

LABELS = [
    "grandparent_of", "grandchild_of", "parent_of", "child-in-law_of", "child_of",
    "sibling-in-law_of", "sibling_of", "relative_of", "ex-spouse_of",
    "ex-boy/girlfriend_of", "ex-love_interest_of", "spouse_of", "boy/girlfriend_of",
    "love_interest_of", "enemy_of", "colleague_of", "classmate_of", "roommate_of",
    "neighbor_of", "teacher_of", "student_of", "boss_of", "subordinate_of",
    "trainer_of", "trainee_of", "acquaintance_of", "friend_of", "other",
]
LABEL_OPTIONS = ", ".join(LABELS)

SCENE = """SCENE: INT. WEINBERG APARTMENT - MIDGE'S OLD BEDROOM - MOMENTS LATER

ENTITY 24: That forehead is not improving.

[ENTITY 24 lifts ESTHER out and lays her down on the bed.]

ENTITY 2: What? Are you sure?
ENTITY 24: It's getting bigger. The whole face will be out of proportion.
ENTITY 2: But look at her nose. It's elongating now, see?
ENTITY 24: The nose is not the problem. The nose you can fix. But this gigantic forehead...
ENTITY 2: Well, there's always bangs.
ENTITY 24: I'm just afraid she's not a very pretty girl.
ENTITY 2: Mama, she's a baby.
ENTITY 24: I just want her to be happy. It's easier to be happy when you're pretty.
ENTITY 24: You're right. Bangs will help."""

head, tail, scene_string = "ENTITY 2", "ENTITY 24", SCENE

one_shot = [
    {
        "role": "system",
        "content": f"""Your goal is to extract relationships between TV characters in a scene of a TV series.
You will be provided with their dialogues, wrapped in <dialogue>.
Speaker names start with `ENTITY`, and their lines are separated by `:`.
You will read the dialogue and identify the relationship between a certain pair of entities, as requested in <question>.
The relationship is directed, so the order of entities in each triplet matters.
Here are the possible relationship types: {LABEL_OPTIONS}.
Here is an example:""",
    },
    {
        "role": "user",
        "content": f"""<dialogue>{SCENE}</dialogue>
<question> ENTITY 2 is what of ENTITY 24? ANSWER with ONLY {LABEL_OPTIONS} </question>""",
    },
    {"role": "assistant", "content": "child_of"},
    {
        "role": "system",
        "content": "Great job! You have successfully identified the relationship between the two entities. Now, let's move on to the next one.",
    },
    {
        "role": "user",
        "content": f"""<dialogue>{scene_string}</dialogue>
<question> {head} is what of {tail}? ANSWER with ONLY: {LABEL_OPTIONS}.</question>""",
    },
]

reasoning = [
    {
        "role": "system",
        "content": f"""You are a helpful assistant designed to extract relationships between TV characters in a scene of a TV series.
You will be provided with their dialogues, wrapped in <dialogue>.
Speaker names start with `ENTITY`, and their lines are separated by `:`.
You will read the dialogue and identify the relationship between a certain pair of entities, as requested in <question>.
The relationship is directed, so the order of entities in each triplet matters.

**Return only a JSON object** with the following property:

- "answer": one of the following {LABEL_OPTIONS}.

This property must always be present. 

Do not include any additional text or explanations outside the JSON object.

<dialogue>{scene_string}</dialogue>
<question> {head} is what of {tail}?</question>""",
    }
]

for name, messages in [("prompt_one_shot.json", one_shot), ("prompt_reasoning.json", reasoning)]:
    (OUT / name).write_text(json.dumps(messages, indent=2, ensure_ascii=False) + "\n")
