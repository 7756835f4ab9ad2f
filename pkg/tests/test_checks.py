import json

import pytest

from singular_ma import io
from singular_ma.checks import REGISTRY, list_checks, run_checks

FAST = [name for name, c in REGISTRY.items() if not c.slow]


def test_catalogue_size_and_fields():
    assert len(REGISTRY) >= 12
    for c in REGISTRY.values():
        assert c.anchor and c.tags and c.tolerance >= 0


@pytest.mark.parametrize("name", FAST)
def test_fast_checks_pass(name):
    rec = REGISTRY[name]()
    assert rec.passed, rec
    line = io.dumps_record(rec.as_dict())
    assert json.loads(line)["name"] == name


def test_filtering():
    assert [c.name for c in list_checks("log coefficient")] == ["log-coefficient"]
    assert list_checks("no-such-tag") == []
    assert len(list_checks("radial")) >= 5


def test_tol_scale_tightens():
    # a millionth of 5h is far below the discretisation error
    rec = REGISTRY["dirichlet-recovery"](tol_scale=1e-6)
    assert not rec.passed


def test_run_checks_rejects_unknown():
    with pytest.raises(KeyError):
        run_checks(["nope"])
    assert [r.name for r in run_checks(["det-one", "radial-ode"])] == ["det-one", "radial-ode"]
