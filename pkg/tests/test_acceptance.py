"""Every acceptance criterion at its stated tolerance, one PASS/FAIL line each."""

import pytest

from ballexp.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("cid", list(CRITERIA))
def test_criterion(cid, capsys):
    res = run_criterion(cid)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.error is None, res.error
    assert res.passed, res.detail
