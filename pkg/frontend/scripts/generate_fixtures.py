"""Regenerate the frontend's golden fixtures from the backend.

The consistency corpus is produced by the CLI (the duplicated client-side
math is pinned to it within 1e-6), and the anonymity fixtures are real
response payloads captured from the HTTP service for a stakeholder token.

Run from the frontend directory:  python3 scripts/generate_fixtures.py
"""

from __future__ import annotations

import io
import json
import sys
import tempfile
from contextlib import redirect_stdout
from fractions import Fraction
from pathlib import Path

import numpy as np

from ahpdelphi.ahp import JUDGMENT_VALUES, ComparisonMatrix
from ahpdelphi.cli import main as cli_main

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

ROBOT = {
    "attributes": ["safety", "speed", "energy"],
    "entries": [[1, 1], [7, 1], [9, 1],
                [1, 7], [1, 1], [1, 1],
                [1, 9], [1, 1], [1, 1]],
}
REVERSED = {
    "attributes": ["safety", "speed", "energy"],
    "entries": [[1, 1], [1, 3], [1, 6],
                [3, 1], [1, 1], [1, 2],
                [6, 1], [2, 1], [1, 1]],
}
NEUTRAL = {"attributes": ["safety", "speed", "energy"], "entries": [[1, 1]] * 9}
INCONSISTENT = {
    "attributes": ["safety", "speed", "energy"],
    "entries": [[1, 1], [3, 1], [1, 3],
                [1, 3], [1, 1], [3, 1],
                [3, 1], [1, 3], [1, 1]],
}


def random_matrix_doc(n: int, rng: np.random.Generator) -> dict:
    ids = [f"q{i}" for i in range(n)]
    rows = [[Fraction(1)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            value = JUDGMENT_VALUES[rng.integers(0, len(JUDGMENT_VALUES))]
            rows[i][j], rows[j][i] = value, 1 / value
    return ComparisonMatrix(tuple(ids), tuple(tuple(r) for r in rows)).to_dict()


def cli_consistency(matrix_doc: dict) -> dict:
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as handle:
        json.dump(matrix_doc, handle)
        path = handle.name
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = cli_main(["consistency", path])
    assert code == 0, f"cli failed on {matrix_doc}"
    return json.loads(buffer.getvalue())


def build_corpus() -> list[dict]:
    rng = np.random.default_rng(2024)
    docs = [ROBOT, REVERSED, NEUTRAL, INCONSISTENT]
    for n in range(3, 8):
        for _ in range(5):
            docs.append(random_matrix_doc(n, rng))
    return [{"matrix": doc, "report": cli_consistency(doc)} for doc in docs]


def capture_service_fixtures() -> dict:
    from fastapi.testclient import TestClient

    from ahpdelphi.service.app import create_app
    from ahpdelphi.service.config import ServiceConfig

    with tempfile.TemporaryDirectory() as data_dir:
        client = TestClient(create_app(ServiceConfig(data_dir=data_dir)))
        created = client.post(
            "/v1/sessions",
            json={
                "attributes": [
                    {"id": "safety", "name": "Safety"},
                    {"id": "speed", "name": "Speed"},
                    {"id": "energy", "name": "Energy"},
                ],
                "participants": [
                    {"stakeholder_id": "alice-if31"},
                    {"stakeholder_id": "bob-zw08"},
                    {"stakeholder_id": "carol-qm55"},
                ],
                "config": {"prompts": ["when does safety matter most?"]},
            },
        ).json()
        sid = created["session_id"]
        facilitator = {"Authorization": f"Bearer {created['facilitator_token']}"}
        tokens = {}
        for stakeholder in ("alice-if31", "bob-zw08", "carol-qm55"):
            token = client.post(
                f"/v1/sessions/{sid}/invitations",
                json={"stakeholder_id": stakeholder},
                headers=facilitator,
            ).json()["token"]
            tokens[stakeholder] = {"Authorization": f"Bearer {token}"}

        def submit(stakeholder: str, matrix: dict) -> None:
            response = client.post(
                f"/v1/sessions/{sid}/submissions",
                json={"matrix": matrix},
                headers=tokens[stakeholder],
            )
            assert response.status_code == 200, response.text

        submit("alice-if31", ROBOT)
        submit("bob-zw08", REVERSED)
        submit("carol-qm55", ROBOT)
        client.post(f"/v1/sessions/{sid}/gate", headers=facilitator)
        client.post(f"/v1/sessions/{sid}/advance", headers=facilitator)
        for stakeholder in tokens:
            client.post(
                f"/v1/sessions/{sid}/rationales",
                json={
                    "kind": "answer",
                    "body": "my deployment context drives this priority",
                    "prompt": "when does safety matter most?",
                },
                headers=tokens[stakeholder],
            )
        client.post(f"/v1/sessions/{sid}/advance", headers=facilitator)

        alice = tokens["alice-if31"]
        return {
            "stakeholder_ids": list(tokens),
            "status": client.get(f"/v1/sessions/{sid}", headers=alice).json(),
            "feedback": client.get(
                f"/v1/sessions/{sid}/feedback", headers=alice
            ).json(),
            "events": client.get(
                f"/v1/sessions/{sid}/events", headers=alice
            ).json(),
            "rejection": client.post(
                f"/v1/sessions/{sid}/submissions",
                json={"matrix": INCONSISTENT},
                headers=alice,
            ).json(),
        }


def main() -> int:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    corpus = build_corpus()
    (FIXTURES / "cr_corpus.json").write_text(json.dumps(corpus, indent=1))
    print(f"wrote {len(corpus)} corpus entries")
    service = capture_service_fixtures()
    (FIXTURES / "service_payloads.json").write_text(json.dumps(service, indent=1))
    print("wrote service payload fixtures")
    return 0


if __name__ == "__main__":
    sys.exit(main())
