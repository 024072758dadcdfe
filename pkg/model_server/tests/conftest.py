import json

import pytest
from fastapi.testclient import TestClient

from model_server.server import create_app


@pytest.fixture
def client():
    return TestClient(create_app())


@pytest.fixture
def pairs_file(tmp_path):
    """A tiny 10-pair training set of sensible prose."""
    path = tmp_path / "pairs.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(10):
            record = {
                "doc_id": f"FT{i}",
                "input": f"The invention {i} relates to a control system with sensors and a feedback loop "
                         f"that stabilizes rotor speed under varying load conditions in configuration {i}.",
                "target": f"A control system {i} stabilizing rotor speed with sensor feedback.",
            }
            fh.write(json.dumps(record) + "\n")
    return path
