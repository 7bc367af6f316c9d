#!/usr/bin/env python3
"""Regenerate the shipped synthetic evaluation suite.

The suite is small enough to audit by hand: 50 entities, ~120 triples,
20 query questions (10 single-hop, 10 two-hop) whose gold paths and call
counts are enumerated here, at construction time, and frozen into the
data files. Run from the repository root:

    python3 tools/make_synthetic_suite.py
"""

from __future__ import annotations

import json
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "cluewalk" / "data" / "synthetic"

COUNTRIES = [
    # country, capital, capital population, currency, continent, leader
    ("France", "Paris", "2,161,000", "Euro", "Europe", "Camille Roux"),
    ("Japan", "Tokyo", "13,960,000", "Yen", "Asia", "Haruto Sato"),
    ("Brazil", "Brasilia", "3,055,000", "Real", "South America", "Ana Lima"),
    ("Kenya", "Nairobi", "4,397,000", "Shilling", "Africa", "Joseph Mwangi"),
    ("Canada", "Ottawa", "1,017,000", "Dollar", "North America", "Emma Tremblay"),
    ("Egypt", "Cairo", "9,540,000", "Pound", "Africa", "Omar Hassan"),
    ("Norway", "Oslo", "697,000", "Krone", "Europe", "Ingrid Dahl"),
]

LANDMARKS = {
    "Paris": ["Louvre Museum", "Triumph Arch"],
    "Tokyo": ["Sky Tower", "Meiji Garden"],
    "Brasilia": ["National Cathedral"],
    "Nairobi": ["Uhuru Gardens"],
    "Ottawa": ["Rideau Canal"],
    "Cairo": ["Old Citadel"],
    "Oslo": ["Royal Opera"],
}


def build_triples() -> list[tuple[str, str, str]]:
    triples: list[tuple[str, str, str]] = []
    names = [row[0] for row in COUNTRIES]
    for country, capital, population, currency, continent, leader in COUNTRIES:
        triples.append((country, "capital", capital))
        triples.append((country, "currency", currency))
        triples.append((country, "continent", continent))
        triples.append((country, "leader", leader))
        triples.append((country, "member of", "United Nations"))
        triples.append((capital, "population", population))
        triples.append((capital, "capital of", country))
        triples.append((capital, "continent", continent))
        triples.append((leader, "born in", capital))
        triples.append((leader, "citizen of", country))
        triples.append((currency, "used in", country))
        for landmark in LANDMARKS[capital]:
            triples.append((capital, "landmark", landmark))
            triples.append((landmark, "located in", capital))
    # Two border rings; these edges are never on a gold path.
    for offset in (1, 2):
        for i, country in enumerate(names):
            other = names[(i + offset) % len(names)]
            triples.append((country, "borders", other))
            triples.append((other, "borders", country))
    # Directed duplicates collapse on load; keep the file free of them.
    seen = set()
    unique = []
    for t in triples:
        if t not in seen:
            seen.add(t)
            unique.append(t)
    return unique


ROW = {name: row for row in COUNTRIES for name in [row[0]]}
CAP = {row[0]: row[1] for row in COUNTRIES}


def one_hop(qid, relation_word, subject, gold_triples, answers):
    question = {
        "capital": f"What is the capital of {subject}?",
        "currency": f"What is the currency of {subject}?",
        "leader": f"Who is the leader of {subject}?",
        "continent": f"What is the continent of {subject}?",
        "landmark": f"What is the landmark of {subject}?",
        "population": f"What is the population of {subject}?",
    }[relation_word]
    return {
        "id": qid,
        "question": question,
        "answers": answers,
        "kind": "query",
        "gold_path": gold_triples,
        "expected_calls": 3,
        "hops": 1,
    }


def two_hop(qid, relation_word, country, gold_triples, answers):
    question = f"What is the {relation_word} of the capital of {country}?"
    return {
        "id": qid,
        "question": question,
        "answers": answers,
        "kind": "query",
        "gold_path": gold_triples,
        "expected_calls": 5,
        "hops": 2,
    }


def build_questions() -> list[dict]:
    qs = []
    qs.append(one_hop("q01", "capital", "France", [["France", "capital", "Paris"]], ["Paris"]))
    qs.append(one_hop("q02", "currency", "Japan", [["Japan", "currency", "Yen"]], ["Yen"]))
    qs.append(one_hop("q03", "leader", "Brazil", [["Brazil", "leader", "Ana Lima"]], ["Ana Lima"]))
    qs.append(one_hop("q04", "continent", "Kenya", [["Kenya", "continent", "Africa"]], ["Africa"]))
    qs.append(one_hop("q05", "capital", "Canada", [["Canada", "capital", "Ottawa"]], ["Ottawa"]))
    qs.append(one_hop("q06", "currency", "Egypt", [["Egypt", "currency", "Pound"]], ["Pound"]))
    qs.append(
        one_hop("q07", "leader", "Norway", [["Norway", "leader", "Ingrid Dahl"]], ["Ingrid Dahl"])
    )
    qs.append(
        one_hop(
            "q08",
            "landmark",
            "Paris",
            [["Paris", "landmark", "Louvre Museum"], ["Paris", "landmark", "Triumph Arch"]],
            ["Louvre Museum", "Triumph Arch"],
        )
    )
    qs.append(
        one_hop("q09", "population", "Tokyo", [["Tokyo", "population", "13,960,000"]], ["13,960,000"])
    )
    qs.append(
        one_hop(
            "q10", "continent", "Brazil", [["Brazil", "continent", "South America"]], ["South America"]
        )
    )

    qs.append(
        two_hop(
            "q11",
            "population",
            "France",
            [["France", "capital", "Paris"], ["Paris", "population", "2,161,000"]],
            ["2,161,000"],
        )
    )
    qs.append(
        two_hop(
            "q12",
            "landmark",
            "Japan",
            [
                ["Japan", "capital", "Tokyo"],
                ["Tokyo", "landmark", "Meiji Garden"],
                ["Tokyo", "landmark", "Sky Tower"],
            ],
            ["Meiji Garden", "Sky Tower"],
        )
    )
    qs.append(
        two_hop(
            "q13",
            "population",
            "Brazil",
            [["Brazil", "capital", "Brasilia"], ["Brasilia", "population", "3,055,000"]],
            ["3,055,000"],
        )
    )
    qs.append(
        two_hop(
            "q14",
            "landmark",
            "Kenya",
            [["Kenya", "capital", "Nairobi"], ["Nairobi", "landmark", "Uhuru Gardens"]],
            ["Uhuru Gardens"],
        )
    )
    qs.append(
        two_hop(
            "q15",
            "population",
            "Canada",
            [["Canada", "capital", "Ottawa"], ["Ottawa", "population", "1,017,000"]],
            ["1,017,000"],
        )
    )
    qs.append(
        two_hop(
            "q16",
            "landmark",
            "Egypt",
            [["Egypt", "capital", "Cairo"], ["Cairo", "landmark", "Old Citadel"]],
            ["Old Citadel"],
        )
    )
    qs.append(
        two_hop(
            "q17",
            "population",
            "Norway",
            [["Norway", "capital", "Oslo"], ["Oslo", "population", "697,000"]],
            ["697,000"],
        )
    )
    qs.append(
        two_hop(
            "q18",
            "continent",
            "Japan",
            [["Japan", "capital", "Tokyo"], ["Tokyo", "continent", "Asia"]],
            ["Asia"],
        )
    )
    qs.append(
        two_hop(
            "q19",
            "continent",
            "Egypt",
            [["Egypt", "capital", "Cairo"], ["Cairo", "continent", "Africa"]],
            ["Africa"],
        )
    )
    qs.append(
        two_hop(
            "q20",
            "landmark",
            "Norway",
            [["Norway", "capital", "Oslo"], ["Oslo", "landmark", "Royal Opera"]],
            ["Royal Opera"],
        )
    )
    return qs


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    triples = build_triples()
    entities = {h for h, _, _ in triples} | {t for _, _, t in triples}
    with open(OUT / "graph.tsv", "w", encoding="utf-8") as handle:
        handle.write("# synthetic evaluation graph: countries, capitals, landmarks\n")
        for h, r, t in triples:
            handle.write(f"{h}\t{r}\t{t}\n")
    questions = build_questions()
    with open(OUT / "qa.jsonl", "w", encoding="utf-8") as handle:
        for q in questions:
            handle.write(
                json.dumps(
                    {k: q[k] for k in ("id", "question", "answers", "kind")}, sort_keys=True
                )
                + "\n"
            )
    gold = {
        q["id"]: {
            "gold_path": q["gold_path"],
            "expected_calls": q["expected_calls"],
            "hops": q["hops"],
        }
        for q in questions
    }
    with open(OUT / "gold.json", "w", encoding="utf-8") as handle:
        json.dump(gold, handle, indent=2, sort_keys=True)
        handle.write("\n")
    print(f"entities: {len(entities)}  triples: {len(triples)}  questions: {len(questions)}")


if __name__ == "__main__":
    main()
