import pytest


@pytest.fixture(autouse=True)
def _isolated_output_dir(monkeypatch):
    # bare report names resolve against this variable
    monkeypatch.delenv('BITSMM_OUTPUT_DIR', raising=False)
