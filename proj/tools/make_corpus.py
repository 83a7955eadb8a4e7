#!/usr/bin/env python3
"""Regenerates the bundled conversational corpus files under data/.

The sentences are produced from a small template grammar of casual
telephone-style chat so that every word has a CMUdict pronunciation.
Output is deterministic for a given --seed.
"""
import argparse
import itertools
import random
from pathlib import Path

THINGS = ["movie", "book", "song", "food", "sport", "game", "show", "band",
          "city", "season", "color", "animal", "holiday", "restaurant",
          "teacher", "class", "drink", "dessert", "car", "place"]
ACTIVITIES = ["hiking", "swimming", "reading", "cooking", "fishing",
              "camping", "skiing", "running", "dancing", "painting",
              "gardening", "shopping", "traveling", "singing", "baking",
              "biking", "bowling", "golfing", "knitting", "writing"]
PEOPLE = ["my brother", "my sister", "my mom", "my dad", "my friends",
          "my roommate", "my neighbor", "my boss", "my cousin", "my kids"]
PLACES = ["the park", "the beach", "the mountains", "the city", "the lake",
          "the store", "the library", "the gym", "the office", "the airport"]
TIMES = ["today", "tonight", "this weekend", "last night", "yesterday",
         "tomorrow", "next week", "last summer", "this morning", "on sunday"]
FEELINGS = ["happy", "tired", "excited", "bored", "busy", "nervous",
            "hungry", "sleepy", "lucky", "worried"]
NUMBERS = ["two", "three", "four", "five", "six", "ten", "twenty",
           "twenty one", "one hundred"]
PLURALS = ["cars", "dogs", "cats", "kids", "books", "friends", "games",
           "tickets", "movies", "songs"]

TEMPLATES = [
    "what's your favorite {thing}",
    "what's your favorite {thing} in the {thing2}",
    "have you ever tried {activity} before",
    "i like {activity} with {people}",
    "i went to {place} {time}",
    "do you want to go to {place} {time}",
    "i feel {feeling} {time}",
    "{people} went {activity} {time}",
    "there are {number} {plural} at {place}",
    "i have {number} {plural}",
    "how many {plural} do you have",
    "do you like {activity}",
    "not bad i had dinner with {people}",
    "are you {feeling} {time}",
    "tell me about your favorite {thing}",
    "i think {activity} is fun",
    "we should go {activity} {time}",
    "where is {place}",
    "can you recommend a good {thing}",
    "i don't really like {activity}",
]


def fill(template, rng):
    return template.format(
        thing=rng.choice(THINGS), thing2=rng.choice(THINGS),
        activity=rng.choice(ACTIVITIES), people=rng.choice(PEOPLE),
        place=rng.choice(PLACES), time=rng.choice(TIMES),
        feeling=rng.choice(FEELINGS), number=rng.choice(NUMBERS),
        plural=rng.choice(PLURALS))


REPLIES = [
    "That sounds like a lot of fun.",
    "I have never tried that, is it hard?",
    "Oh nice, how was it?",
    "I like that too!",
    "Really? Tell me more.",
    "That is interesting, why do you say that?",
    "I am not sure, what do you think?",
    "Me too, it is one of my favorites.",
    "How long have you been doing that?",
    "Who did you go with?",
    "I would love to do that someday.",
    "That must have been exciting.",
    "I hope you have a great time.",
    "What else do you like to do?",
    "Sounds good to me.",
    "I think so too.",
    "Maybe next time.",
    "That is a good question.",
    "I do not know much about that.",
    "Let me think about it.",
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=2021)
    ap.add_argument("--sentences", type=int, default=1200)
    ap.add_argument("--pairs", type=int, default=300)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    rng = random.Random(args.seed)

    seen = set()
    sentences = []
    for _ in itertools.count():
        if len(sentences) >= args.sentences:
            break
        s = fill(rng.choice(TEMPLATES), rng)
        if s not in seen:
            seen.add(s)
            sentences.append(s)

    out = Path(args.out)
    (out / "corpus.txt").write_text("\n".join(sentences) + "\n")

    prompts = rng.sample(sentences, args.pairs)
    with open(out / "dialogue_pairs.tsv", "w") as f:
        for p in prompts:
            f.write(f"{p}\t{rng.choice(REPLIES)}\n")


if __name__ == "__main__":
    main()
