"""Release gate: runs every acceptance criterion at its pinned tolerance.

Each test prints the criterion's pass/fail line plus its measured numbers,
so a failing run shows exactly which bound broke and by how much.
"""

import json

import pytest

from lcakit.acceptance import CRITERIA


@pytest.mark.parametrize("cid", sorted(CRITERIA))
def test_criterion(cid):
    result = CRITERIA[cid]()
    print()
    print(result.line())
    print(json.dumps(result.details, indent=2, default=str))
    assert result.passed, result.line()
