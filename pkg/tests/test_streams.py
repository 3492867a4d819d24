import numpy as np
import pytest

from stodars.streams import spawn_key, stream


def test_same_path_same_stream():
    a = stream(7, "noise").standard_normal(16)
    b = stream(7, "noise").standard_normal(16)
    np.testing.assert_array_equal(a, b)


def test_distinct_paths_differ():
    a = stream(7, "matrix", 0).standard_normal(16)
    b = stream(7, "matrix", 1).standard_normal(16)
    c = stream(7, "pss", 0).standard_normal(16)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_distinct_seeds_differ():
    a = stream(1, "noise").standard_normal(8)
    b = stream(2, "noise").standard_normal(8)
    assert not np.array_equal(a, b)


def test_spawn_key_stable_for_strings():
    assert spawn_key("matrix", 3) == spawn_key("matrix", 3)
    assert spawn_key("matrix") != spawn_key("pss")


def test_rejects_negative_path_entries():
    with pytest.raises(ValueError):
        spawn_key(-1)
