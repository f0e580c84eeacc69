import pytest

from setcases import FORMS, UNIVERSES, program
from audit import audit_form


@pytest.mark.parametrize("form", sorted(FORMS))
def test_rule_base_exhaustively(form):
    states, transitions, failures, rules = audit_form(form)
    names = program(form).set_names
    # every combination of operand subsets is reached
    assert states == 2 ** (len(UNIVERSES[form]) * len(names))
    assert transitions == states * len(names) * len(UNIVERSES[form])
    assert rules == {(n, k) for n in names for k in ("add", "del")}
    assert failures == []


def test_audit_detects_a_missing_rule(monkeypatch):
    from incral import setinc
    real = setinc.Deriver.gen_maintenance

    def broken(self, inv, operand, kind):
        code = real(self, inv, operand, kind)
        if kind == "del":
            code.blocks = {}
        return code

    monkeypatch.setattr(setinc.Deriver, "gen_maintenance", broken)
    _, _, failures, _ = audit_form("inter")
    assert failures
