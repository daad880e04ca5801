import math
import statistics

import pytest

from ecppdm.datagen import generate
from ecppdm.errors import NegativeVariance, PlanIncomplete
from ecppdm.etl import ConfidentialAttr, Dataset, Record, Schema
from ecppdm.perturb import (
    NoiseSpec,
    Op,
    PerturbPlan,
    draw_noise,
    perturb_additive,
    perturb_multiplicative,
    stream_seed,
    transform_dataset,
)

SCHEMA = Schema((ConfidentialAttr("a"), ConfidentialAttr("b")), ("c",))


class TestNoiseSpec:
    def test_negative_variance_rejected(self):
        with pytest.raises(NegativeVariance):
            NoiseSpec(1.0, -0.1, 0)

    def test_support_bounds(self):
        spec = NoiseSpec(1.0, 1 / 3, 0)
        assert spec.half_width == pytest.approx(1.0)
        draws = draw_noise(spec, 10_000)
        assert all(0.0 <= e <= 2.0 for e in draws)

    def test_degenerate_support(self):
        assert draw_noise(NoiseSpec(1.0, 0.0, 5), 100) == [1.0] * 100

    def test_sample_statistics(self):
        draws = draw_noise(NoiseSpec(1.0, 0.05, seed=1234), 100_000)
        assert statistics.fmean(draws) == pytest.approx(1.0, abs=0.01)
        assert statistics.variance(draws) == pytest.approx(0.05, abs=0.005)

    def test_deterministic_under_seed(self):
        spec = NoiseSpec(1.0, 0.02, seed=99)
        assert draw_noise(spec, 1000) == draw_noise(spec, 1000)


class TestPointwiseOps:
    def test_additive(self):
        assert perturb_additive(10.0, 0.5) == 10.5
        assert perturb_additive(7.0, 0.0) == 7.0
        x, e = 3.25, 0.125
        assert perturb_additive(x, e) - x == e

    def test_multiplicative(self):
        assert perturb_multiplicative(10.0, 1.2) == 12.0
        assert perturb_multiplicative(5.0, 1.0) == 5.0
        assert perturb_multiplicative(0.0, 1.7) == 0.0


def make_data(n=50):
    rows = tuple(Record((float(i), float(2 * i)), ("x",)) for i in range(n))
    return Dataset(SCHEMA, rows, ("S1",))


class TestTransform:
    def test_zero_variance_mult_is_identity(self):
        data = make_data()
        plan = PerturbPlan.build(SCHEMA, seed=7, variance=0.0, op=Op.MULT)
        out = transform_dataset(data, plan)
        assert out.rows == data.rows

    def test_zero_variance_add_is_identity(self):
        data = make_data()
        plan = PerturbPlan.build(SCHEMA, seed=7, variance=0.0, op=Op.ADD)
        assert transform_dataset(data, plan).rows == data.rows

    def test_plan_incomplete(self):
        data = make_data()
        plan = PerturbPlan.build(SCHEMA, seed=7)
        partial = PerturbPlan(plan.entries[:1])
        with pytest.raises(PlanIncomplete):
            transform_dataset(data, partial)

    def test_categoricals_and_shape_preserved(self):
        data = make_data()
        plan = PerturbPlan.build(SCHEMA, seed=7, variance=0.1)
        out = transform_dataset(data, plan)
        assert len(out) == len(data)
        assert all(a.categorical == b.categorical for a, b in zip(out.rows, data.rows))

    def test_deterministic(self):
        data = make_data()
        plan = PerturbPlan.build(SCHEMA, seed=13, variance=0.05)
        assert transform_dataset(data, plan).rows == transform_dataset(data, plan).rows

    def test_attribute_order_independent(self):
        data = make_data()
        plan = PerturbPlan.build(SCHEMA, seed=13, variance=0.05)
        reordered = PerturbPlan(tuple(reversed(plan.entries)))
        assert transform_dataset(data, plan).rows == transform_dataset(data, reordered).rows

    def test_missing_values_pass_through(self):
        data = Dataset(SCHEMA, (Record((None, 2.0), ("x",)),), ("S1",))
        plan = PerturbPlan.build(SCHEMA, seed=7, variance=0.05)
        out = transform_dataset(data, plan)
        assert out.rows[0].confidential[0] is None

    def test_mean_preserved_under_mdp(self):
        # 10^4 rows from the synthetic generator, sigma^2 = 0.05: each
        # perturbed attribute mean stays inside the 3-sigma band
        data = generate(10_000, seed=31)
        plan = PerturbPlan.build(data.schema, seed=31, variance=0.05)
        out = transform_dataset(data, plan)
        for i, attr in enumerate(data.schema.confidential_attrs):
            mu = statistics.fmean(r.confidential[i] for r in data.rows)
            mu_pert = statistics.fmean(r.confidential[i] for r in out.rows)
            band = 3 * mu * math.sqrt(0.05 / 10_000)
            assert abs(mu_pert - mu) <= band, attr.name


class TestStreamSeed:
    def test_stable_and_distinct(self):
        assert stream_seed(1, "a") == stream_seed(1, "a")
        assert stream_seed(1, "a") != stream_seed(1, "b")
        assert stream_seed(1, "a") != stream_seed(2, "a")
