import math

import numpy as np
import pytest

from scoresim.errors import UnbucketableValue
from scoresim.samplers import Streams, _uniform_within, bucket_of, draw_levels, make_rng, sample
from scoresim.scenario import attribute_from_lists

N = 1_000_000


def test_amount_outstanding_lowest_bucket(base_spec):
    attr = base_spec.attribute("amount_outstanding")
    draw = sample(attr, make_rng(1, (9,)), N)
    phi = 0.5 * math.erfc(math.log(2) / math.sqrt(2))  # P(Z < ln 0.5)
    assert phi == pytest.approx(0.2441, abs=1e-4)
    assert np.mean(draw.buckets == 0) == pytest.approx(phi, abs=0.003)


def test_age_bucket_frequencies(base_spec):
    attr = base_spec.attribute("age")
    draw = sample(attr, make_rng(2, (9,)), N)
    freq = np.bincount(draw.buckets, minlength=7) / N
    assert freq == pytest.approx([0.05, 0.07, 0.09, 0.26, 0.21, 0.11, 0.21], abs=0.003)


def test_degenerate_categorical():
    attr = attribute_from_lists("x", [1.0, 0.0], [1.0, 2.0])
    draw = sample(attr, make_rng(3, (0,)), 10_000)
    assert np.all(draw.buckets == 0)


def test_zero_proportion_top_level_never_drawn(base_spec):
    attr = base_spec.attribute("balance_recent_defaults")
    draw = sample(attr, make_rng(4, (0,)), 200_000)
    assert draw.buckets.max() <= 4


@pytest.mark.parametrize("name", [
    "gender", "existing_customer", "enquiries", "credit_cards", "province",
    "application_method", "age", "amount_outstanding", "income", "balance_recent_defaults",
])
def test_frequencies_within_four_sigma(base_spec, name):
    attr = base_spec.attribute(name)
    draw = sample(attr, make_rng(5, (attr.k,)), N)
    freq = np.bincount(draw.buckets, minlength=attr.k) / N
    if attr.marginal.kind == "lognormal_scaled":
        from scoresim.scenario import lognormal_level_masses

        p = lognormal_level_masses(attr)
    else:
        p = attr.proportions
    assert np.all(np.abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / N) + 1e-12)


@pytest.mark.parametrize("name", [
    "gender", "enquiries", "credit_cards", "province", "age", "amount_outstanding", "income",
    "balance_recent_defaults",
])
def test_bucket_of_agrees_with_sampler(base_spec, name):
    attr = base_spec.attribute(name)
    draw = sample(attr, make_rng(6, (0,)), 100_000)
    assert np.array_equal(bucket_of(attr, draw.raw_values), draw.buckets)
    if attr.is_nominal:
        assert np.array_equal(draw.raw_values, draw.buckets)
    else:
        lo, hi = attr.bounds()
        assert np.all(lo[draw.buckets] <= draw.raw_values)
        assert np.all(draw.raw_values < hi[draw.buckets])


def test_discrete_ratio_value_is_lower_bound(base_spec):
    attr = base_spec.attribute("enquiries")
    draw = sample(attr, make_rng(7, (0,)), 10_000)
    assert set(np.unique(draw.raw_values)) == {0.0, 1.0, 2.0, 3.0, 4.0, 5.0}
    assert np.array_equal(draw.raw_values, draw.buckets.astype(float))


def test_income_top_bucket_is_shifted_exponential(base_spec):
    attr = base_spec.attribute("income")
    draw = sample(attr, make_rng(8, (0,)), 400_000)
    top = draw.raw_values[draw.buckets == 5] - 70_000
    assert top.min() >= 0
    assert top.mean() == pytest.approx(40_000, rel=0.02)


@pytest.mark.parametrize("value, bucket", [(7_500, 1), (5_000, 1), (4_999.999, 0), (100_000, 4), (1e9, 4)])
def test_bucket_of_amount_outstanding(base_spec, value, bucket):
    assert bucket_of(base_spec.attribute("amount_outstanding"), value) == bucket


def test_bucket_of_age(base_spec):
    age = base_spec.attribute("age")
    assert bucket_of(age, 74.9) == 6
    assert bucket_of(age, 21.0) == 1
    for bad in (75.0, 17.9, float("nan")):
        with pytest.raises(UnbucketableValue):
            bucket_of(age, bad)


def test_bucket_of_nominal(base_spec):
    gender = base_spec.attribute("gender")
    assert list(bucket_of(gender, [0, 1, 1])) == [0, 1, 1]
    with pytest.raises(UnbucketableValue):
        bucket_of(gender, 2)
    with pytest.raises(UnbucketableValue):
        bucket_of(gender, 0.5)


class _AlmostOne:
    def random(self, n):
        return np.full(n, np.nextafter(1.0, 0.0))


def test_uniform_stays_below_upper_bound():
    lo, hi = np.full(3, 5000.0), np.full(3, 11000.0)
    assert np.all(_uniform_within(lo, hi, _AlmostOne()) < hi)


def test_draw_levels_inverse_cdf():
    class Fixed:
        def random(self, n):
            return np.array([0.0, 0.29999, 0.3, 0.99999])

    assert list(draw_levels(np.array([0.3, 0.0, 0.7]), Fixed(), 4)) == [0, 0, 2, 2]


def test_streams_are_reproducible(base_spec):
    attr = base_spec.attribute("income")
    a = sample(attr, Streams(99, 3).attribute(8), 1000)
    b = sample(attr, Streams(99, 3).attribute(8), 1000)
    c = sample(attr, Streams(99, 4).attribute(8), 1000)
    d = sample(attr, Streams(99, 3).attribute(7), 1000)
    assert a.raw_values.tobytes() == b.raw_values.tobytes()
    assert a.raw_values.tobytes() != c.raw_values.tobytes()
    assert a.raw_values.tobytes() != d.raw_values.tobytes()


def test_stream_roles_are_independent():
    x = Streams(1, 0, role=0).final().random(5)
    y = Streams(1, 0, role=1).final().random(5)
    assert not np.array_equal(x, y)
