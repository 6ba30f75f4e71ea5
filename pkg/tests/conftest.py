"""
Shared pytest setup: the repository root goes on sys.path so `import geometry`
and friends resolve without installing, and the output-root override from a
developer's environment or .env never leaks into a test.
"""
import os
import sys

import pytest

ROOT_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT_DIR not in sys.path:
    sys.path.insert(0, ROOT_DIR)


@pytest.fixture(autouse=True)
def _no_output_root_override(monkeypatch):
    monkeypatch.delenv("OTLAB_OUTPUT_ROOT", raising=False)
