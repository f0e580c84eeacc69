import pytest

from goldens import CASES, GOLDEN_DIR, compare, render


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(name):
    assert compare(name), f"{name} differs from {GOLDEN_DIR / name}.txt"


@pytest.mark.parametrize("name", ["fib", "views", "tc"])
def test_rendering_is_stable(name):
    assert render(name) == render(name)
