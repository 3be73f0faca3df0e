from fractions import Fraction

import pytest

from tame_levy.errors import ConfigError, LevelMismatch, NonDivisibleTower, NotIncreasing, WildRamification
from tame_levy.tower import build_tower, bundled_config, load_config, parse_alpha


def test_unramified_quadratic(quad2):
    assert [quad2.m(n) for n in (1, 2)] == [1, 2]
    assert [quad2.q(n) for n in (1, 2)] == [2, 4]
    assert [quad2.d(n) for n in (1, 2)] == [0, 0]


def test_ramified_quadratic(ram5):
    assert ram5.d(2) == 1


def test_wild_rejected():
    with pytest.raises(WildRamification):
        build_tower({"p": 2, "alpha": 1, "levels": [[1, 1], [2, 1]]})


def test_structural_errors():
    with pytest.raises(NonDivisibleTower):
        build_tower({"p": 5, "levels": [[1, 1], [2, 1], [3, 2]]})
    with pytest.raises(NotIncreasing):
        build_tower({"p": 5, "levels": [[1, 1], [1, 1]]})
    with pytest.raises(ConfigError):
        build_tower({"p": 4, "levels": [[1, 1]]})
    with pytest.raises(ConfigError):
        build_tower({"p": 5, "levels": [[2, 1]]})
    with pytest.raises(ConfigError):
        build_tower({"p": 5, "alpha": -1, "levels": [[1, 1]]})


def test_extension_repeats_last_ratio(t2, t3):
    assert [t2.ef(n) for n in range(1, 6)] == [(1, 1), (2, 1), (4, 1), (8, 1), (16, 1)]
    assert t3.ef(3) == (4, 4)
    closed = build_tower({"p": 5, "levels": [[1, 1], [2, 1]]})
    with pytest.raises(LevelMismatch):
        closed.ef(3)


def test_alpha_parsing():
    assert parse_alpha(0.5) == Fraction(1, 2)
    assert parse_alpha("3/2") == Fraction(3, 2)
    assert parse_alpha(2) == 2


def test_group_order(quad2):
    assert quad2.group_order(0) == 1
    assert quad2.group_order(1) == 2
    assert quad2.group_order(2) == 16


def test_bundled_and_roundtrip(tmp_path):
    for name in ("T1", "T2", "T3"):
        spec = bundled_config(name)
        path = tmp_path / f"{name}.yaml"
        import yaml

        path.write_text(yaml.safe_dump(spec.to_config()))
        again = load_config(path)
        assert again == spec
        assert again.digest() == spec.digest()


def test_with_alpha_changes_digest(t1):
    assert t1.with_alpha(2).alpha == 2
    assert t1.with_alpha(2).digest() != t1.digest()
