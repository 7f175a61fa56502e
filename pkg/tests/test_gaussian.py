import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from matmul_lab.gaussian import DomainError, RandomStream, box_muller, random_matrix
from matmul_lab.matrix import DimensionError, bit_equal

open_unit = st.floats(min_value=1e-300, max_value=1.0, exclude_max=True)


def test_uniform_pair_in_open_interval():
    for seed in (0, 1, 42, 2**64 - 1):
        s = RandomStream(seed)
        for _ in range(1000):
            u1, u2 = s.next_uniform_pair()
            assert 0.0 < u1 < 1.0 and 0.0 < u2 < 1.0


def test_uniform_pairs_are_deterministic():
    assert RandomStream(42).next_uniform_pair() == RandomStream(42).next_uniform_pair()
    s = RandomStream(42)
    assert s.next_uniform_pair() != s.next_uniform_pair()


def test_uniform_range_over_ten_million_draws():
    u = RandomStream(123).uniforms(10**7)
    assert u.min() > 0.0 and u.max() < 1.0


def test_uniform_mapping_endpoints():
    # the extreme 64-bit words must stay strictly inside (0, 1)
    raw = np.array([0, 2**64 - 1], dtype=np.uint64)
    from matmul_lab.gaussian import _to_unit

    lo, hi = _to_unit(raw)
    assert lo == 2.0**-53 and hi == 1.0 - 2.0**-53


def test_uniform_mean():
    s = RandomStream(2024)
    u1 = np.array([s.next_uniform_pair()[0] for _ in range(10**5)])
    u1 = np.concatenate([u1, s.uniforms(2 * (10**6 - 10**5))[::2]])
    assert abs(u1.mean() - 0.5) <= 0.005


def test_uniforms_match_pairs():
    a = RandomStream(9).uniforms(6)
    s = RandomStream(9)
    b = [u for _ in range(3) for u in s.next_uniform_pair()]
    assert a.tolist() == b


def test_box_muller_examples():
    z0, z1 = box_muller(0.5, 0.25)
    assert abs(z0) < 1e-15
    assert z1 == pytest.approx(math.sqrt(2 * math.log(2)), abs=1e-15)
    assert z1 == pytest.approx(1.1774, abs=1e-4)
    near_one = math.nextafter(1.0, 0.0)
    assert all(abs(z) < 1e-7 for z in box_muller(near_one, 0.3))
    z0, z1 = box_muller(0.3, 0.7)
    assert z0 * z0 + z1 * z1 == pytest.approx(-2 * math.log(0.3), abs=1e-12)
    assert -2 * math.log(0.3) == pytest.approx(2.4079, abs=1e-4)


@given(open_unit, open_unit)
def test_box_muller_matches_direct_formula(u1, u2):
    r = math.sqrt(-2.0 * math.log(u1))
    expect = (r * math.cos(2 * math.pi * u2), r * math.sin(2 * math.pi * u2))
    got = box_muller(u1, u2)
    assert got[0] == pytest.approx(expect[0], rel=1e-14, abs=1e-14)
    assert got[1] == pytest.approx(expect[1], rel=1e-14, abs=1e-14)


@pytest.mark.parametrize("u1,u2", [(0.0, 0.5), (1.0, 0.5), (-0.1, 0.5), (0.5, 0.0), (0.5, 1.0)])
def test_box_muller_domain(u1, u2):
    with pytest.raises(DomainError):
        box_muller(u1, u2)


def test_radius_identity_over_stream():
    s = RandomStream(5)
    worst = 0.0
    for _ in range(20000):
        u1, u2 = s.next_uniform_pair()
        z0, z1 = box_muller(u1, u2)
        worst = max(worst, abs(z0 * z0 + z1 * z1 + 2 * math.log(u1)))
    assert worst <= 1e-12


def test_random_matrix_determinism_and_distinct_seeds():
    a = random_matrix(RandomStream(7), 4, 4)
    assert bit_equal(a, random_matrix(RandomStream(7), 4, 4))
    assert not bit_equal(a, random_matrix(RandomStream(8), 4, 4))


def test_random_matrix_moments():
    m = random_matrix(RandomStream(7), 1000, 1000)
    assert abs(m.data.mean()) <= 0.005
    assert abs(m.data.var(ddof=1) - 1.0) <= 0.01


def test_random_matrix_row_major_from_pairs():
    # element order is z0, z1 of pair 0, then pair 1, ...
    s = RandomStream(11)
    pairs = [box_muller(*s.next_uniform_pair()) for _ in range(3)]
    m = random_matrix(RandomStream(11), 2, 3)
    assert m.tolist() == [[pairs[0][0], pairs[0][1], pairs[1][0]],
                          [pairs[1][1], pairs[2][0], pairs[2][1]]]


def test_cached_member_consumed_first():
    whole = RandomStream(3).gaussians(7)
    s = RandomStream(3)
    parts = np.concatenate([s.gaussians(3), s.gaussians(1), s.gaussians(3)])
    assert whole.tobytes() == parts.tobytes()
    s = RandomStream(3)
    first = s.next_gaussian()
    assert s.cached_gaussian is not None
    assert [first, s.next_gaussian()] == whole[:2].tolist()
    assert s.cached_gaussian is None


def test_random_matrix_dimension_errors():
    with pytest.raises(DimensionError):
        random_matrix(RandomStream(1), 0, 3)


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    with pytest.raises(ValueError):
        RandomStream(seed)
