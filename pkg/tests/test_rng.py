"""Stream splitting and draw helper tests."""

from sec_curriculum.rng import (
    CATEGORY_STREAM,
    POOL_STREAM,
    DrawStreams,
    UniformStream,
    categorical,
    uniform_index,
)


def test_same_key_same_sequence() -> None:
    a = UniformStream(42, CATEGORY_STREAM)
    b = UniformStream(42, CATEGORY_STREAM)
    assert a.take(100) == b.take(100)


def test_streams_are_independent() -> None:
    a = UniformStream(42, CATEGORY_STREAM)
    b = UniformStream(42, POOL_STREAM)
    c = UniformStream(43, CATEGORY_STREAM)
    xs, ys, zs = a.take(50), b.take(50), c.take(50)
    assert xs != ys
    assert xs != zs


def test_take_equals_repeated_next() -> None:
    a = UniformStream(7, 0)
    b = UniformStream(7, 0)
    assert a.take(16) == [b.next() for _ in range(16)]


def test_take_is_position_transparent() -> None:
    a = UniformStream(7, 1)
    b = UniformStream(7, 1)
    assert a.take(5) + a.take(3) == b.take(8)


def test_state_round_trip_mid_stream() -> None:
    a = UniformStream(99, 2)
    a.take(13)
    resumed = UniformStream.from_state(a.get_state())
    assert resumed.take(20) == a.take(20)


def test_state_is_json_safe() -> None:
    import json

    a = UniformStream(5, 3)
    a.take(3)
    blob = json.dumps(a.get_state())
    resumed = UniformStream.from_state(json.loads(blob))
    assert resumed.take(4) == a.take(4)


def test_draw_streams_round_trip() -> None:
    streams = DrawStreams.from_seed(1234)
    streams.category.take(5)
    streams.pool.take(2)
    copy = DrawStreams.from_state(streams.get_state())
    assert copy.category.take(3) == streams.category.take(3)
    assert copy.pool.take(3) == streams.pool.take(3)


def test_categorical_walks_cumulative_weights() -> None:
    weights = [0.2, 0.3, 0.5]
    assert categorical(0.0, weights) == 0
    assert categorical(0.19, weights) == 0
    assert categorical(0.2, weights) == 1
    assert categorical(0.49, weights) == 1
    assert categorical(0.5, weights) == 2
    assert categorical(0.999999, weights) == 2
    # rounding shortfall in the cumulative sum falls through to the last index
    assert categorical(1.0, weights) == 2


def test_uniform_index_covers_range() -> None:
    assert uniform_index(0.0, 5) == 0
    assert uniform_index(0.1999, 5) == 0
    assert uniform_index(0.2, 5) == 1
    assert uniform_index(0.999999999, 5) == 4
    assert uniform_index(0.5, 1) == 0
