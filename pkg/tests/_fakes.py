"""Scripted HTTP session doubles for remote-backend tests."""

import requests


class FakeResponse:
    def __init__(self, body, status=200):
        self._body = body
        self.status_code = status

    def raise_for_status(self):
        if self.status_code >= 400:
            raise requests.HTTPError(f"status {self.status_code}")

    def json(self):
        return self._body


class FakeSession:
    """Plays back a script of responses; entries may be exceptions."""

    def __init__(self, script):
        self.script = list(script)
        self.requests = []

    def post(self, url, json=None, timeout=None):
        self.requests.append((url, json))
        action = self.script.pop(0)
        if isinstance(action, Exception):
            raise action
        return action
